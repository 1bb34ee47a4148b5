// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "geossl/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "geossl/textio.hpp"

namespace geossl {

namespace {

constexpr std::array<std::pair<AugTechnique, const char*>, 16> kTechniqueNames{{
    {AugTechnique::rrc, "rrc"},
    {AugTechnique::hflip, "hflip"},
    {AugTechnique::vflip, "vflip"},
    {AugTechnique::rr90, "rr90"},
    {AugTechnique::brightness, "brightness"},
    {AugTechnique::contrast, "contrast"},
    {AugTechnique::sharpness, "sharpness"},
    {AugTechnique::gaussian_blur, "gaussian_blur"},
    {AugTechnique::gaussian_noise, "gaussian_noise"},
    {AugTechnique::solarize, "solarize"},
    {AugTechnique::posterize, "posterize"},
    {AugTechnique::grayscale, "grayscale"},
    {AugTechnique::cutout, "cutout"},
    {AugTechnique::grid_shuffle, "grid_shuffle"},
    {AugTechnique::shear, "shear"},
    {AugTechnique::translate, "translate"},
}};

auto require_patch(const Patch& patch, const char* what) -> void {
    if (patch.channels == 0 || patch.height == 0 || patch.width == 0) {
        throw std::invalid_argument(std::string(what) + ": empty patch");
    }
    if (patch.data.size() != patch.channels * patch.height * patch.width) {
        throw std::invalid_argument(std::string(what)
                                    + ": patch storage does not match shape");
    }
}

auto clip255(double v) -> double { return std::clamp(v, 0.0, 255.0); }

// Symmetric reflection with edge duplication: ...2,1,0 | 0,1,2... .
auto reflect_index(long i, long n) -> long {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

auto resize_bilinear(const Patch& in, std::size_t top, std::size_t left,
                     std::size_t crop_h, std::size_t crop_w,
                     std::size_t out_h, std::size_t out_w) -> Patch {
    Patch out(in.channels, out_h, out_w);
    const double step_y =
        static_cast<double>(crop_h) / static_cast<double>(out_h);
    const double step_x =
        static_cast<double>(crop_w) / static_cast<double>(out_w);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            double fy = (static_cast<double>(oy) + 0.5) * step_y - 0.5;
            fy = std::clamp(fy, 0.0, static_cast<double>(crop_h - 1));
            const auto y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, crop_h - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                double fx = (static_cast<double>(ox) + 0.5) * step_x - 0.5;
                fx = std::clamp(fx, 0.0, static_cast<double>(crop_w - 1));
                const auto x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, crop_w - 1);
                const double wx = fx - static_cast<double>(x0);
                const double v00 = in.at(c, top + y0, left + x0);
                const double v01 = in.at(c, top + y0, left + x1);
                const double v10 = in.at(c, top + y1, left + x0);
                const double v11 = in.at(c, top + y1, left + x1);
                out.at(c, oy, ox) = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01)
                                    + wy * ((1.0 - wx) * v10 + wx * v11);
            }
        }
    }
    return out;
}

auto transform_rrc(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.scale_min > 0.0 && params.scale_min <= params.scale_max
          && params.scale_max <= 1.0)) {
        throw std::invalid_argument("rrc: scale bounds must satisfy "
                                    "0 < scale_min <= scale_max <= 1");
    }
    if (!(params.ratio_min > 0.0 && params.ratio_min <= params.ratio_max)) {
        throw std::invalid_argument("rrc: ratio bounds must satisfy "
                                    "0 < ratio_min <= ratio_max");
    }
    const std::size_t out_h =
        params.out_height > 0 ? params.out_height : in.height;
    const std::size_t out_w = params.out_width > 0 ? params.out_width : in.width;
    const auto full_h = static_cast<long>(in.height);
    const auto full_w = static_cast<long>(in.width);
    const double area = static_cast<double>(in.height * in.width);

    std::size_t top = 0;
    std::size_t left = 0;
    std::size_t crop_h = 0;
    std::size_t crop_w = 0;
    bool found = false;
    for (int attempt = 0; attempt < 10 && !found; ++attempt) {
        const double target_area =
            area * rng.uniform(params.scale_min, params.scale_max);
        const double ratio = std::exp(
            rng.uniform(std::log(params.ratio_min), std::log(params.ratio_max)));
        const long w = std::lround(std::sqrt(target_area * ratio));
        const long h = std::lround(std::sqrt(target_area / ratio));
        if (w >= 1 && h >= 1 && w <= full_w && h <= full_h) {
            crop_h = static_cast<std::size_t>(h);
            crop_w = static_cast<std::size_t>(w);
            top = rng.uniform_int(in.height - crop_h + 1);
            left = rng.uniform_int(in.width - crop_w + 1);
            found = true;
        }
    }
    if (!found) {
        // Largest centered crop whose aspect ratio fits the bounds.
        const double in_ratio =
            static_cast<double>(in.width) / static_cast<double>(in.height);
        if (in_ratio < params.ratio_min) {
            crop_w = in.width;
            crop_h = std::min<std::size_t>(
                in.height,
                static_cast<std::size_t>(std::lround(
                    static_cast<double>(in.width) / params.ratio_min)));
        } else if (in_ratio > params.ratio_max) {
            crop_h = in.height;
            crop_w = std::min<std::size_t>(
                in.width,
                static_cast<std::size_t>(std::lround(
                    static_cast<double>(in.height) * params.ratio_max)));
        } else {
            crop_h = in.height;
            crop_w = in.width;
        }
        crop_h = std::max<std::size_t>(crop_h, 1);
        crop_w = std::max<std::size_t>(crop_w, 1);
        top = (in.height - crop_h) / 2;
        left = (in.width - crop_w) / 2;
    }
    return resize_bilinear(in, top, left, crop_h, crop_w, out_h, out_w);
}

auto transform_hflip(const Patch& in) -> Patch {
    Patch out(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t y = 0; y < in.height; ++y) {
            for (std::size_t x = 0; x < in.width; ++x) {
                out.at(c, y, x) = in.at(c, y, in.width - 1 - x);
            }
        }
    }
    return out;
}

auto transform_vflip(const Patch& in) -> Patch {
    Patch out(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t y = 0; y < in.height; ++y) {
            for (std::size_t x = 0; x < in.width; ++x) {
                out.at(c, y, x) = in.at(c, in.height - 1 - y, x);
            }
        }
    }
    return out;
}

// One counter-clockwise quarter turn; height and width swap.
auto quarter_turn(const Patch& in) -> Patch {
    Patch out(in.channels, in.width, in.height);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t y = 0; y < out.height; ++y) {
            for (std::size_t x = 0; x < out.width; ++x) {
                out.at(c, y, x) = in.at(c, x, in.width - 1 - y);
            }
        }
    }
    return out;
}

auto transform_rr90(const Patch& in, Rng& rng) -> Patch {
    const std::uint64_t turns = rng.uniform_int(4);
    Patch out = in;
    for (std::uint64_t k = 0; k < turns; ++k) out = quarter_turn(out);
    return out;
}

auto transform_brightness(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.brightness_limit >= 0.0 && params.brightness_limit <= 1.0)) {
        throw std::invalid_argument("brightness: limit must be in [0, 1]");
    }
    const double shift =
        rng.uniform(-params.brightness_limit, params.brightness_limit) * 255.0;
    Patch out = in;
    for (double& v : out.data) v = clip255(v + shift);
    return out;
}

auto transform_contrast(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.contrast_limit >= 0.0 && params.contrast_limit <= 1.0)) {
        throw std::invalid_argument("contrast: limit must be in [0, 1]");
    }
    const double factor =
        1.0 + rng.uniform(-params.contrast_limit, params.contrast_limit);
    Patch out = in;
    const std::size_t plane = in.height * in.width;
    for (std::size_t c = 0; c < in.channels; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < plane; ++i) mean += in.data[c * plane + i];
        mean /= static_cast<double>(plane);
        // v*f + mean*(1-f) rather than mean + (v-mean)*f: exact when f = 1.
        for (std::size_t i = 0; i < plane; ++i) {
            double& v = out.data[c * plane + i];
            v = clip255(v * factor + mean * (1.0 - factor));
        }
    }
    return out;
}

// 3x3 binomial smoothing with reflected borders; the sharpness kernel.
auto smooth3(const Patch& in) -> Patch {
    static constexpr std::array<double, 3> taps{0.25, 0.5, 0.25};
    const auto h = static_cast<long>(in.height);
    const auto w = static_cast<long>(in.width);
    Patch tmp(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long k = -1; k <= 1; ++k) {
                    acc += taps[static_cast<std::size_t>(k + 1)]
                           * in.at(c, static_cast<std::size_t>(y),
                                   static_cast<std::size_t>(
                                       reflect_index(x + k, w)));
                }
                tmp.at(c, static_cast<std::size_t>(y),
                       static_cast<std::size_t>(x)) = acc;
            }
        }
    }
    Patch out(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long k = -1; k <= 1; ++k) {
                    acc += taps[static_cast<std::size_t>(k + 1)]
                           * tmp.at(c,
                                    static_cast<std::size_t>(
                                        reflect_index(y + k, h)),
                                    static_cast<std::size_t>(x));
                }
                out.at(c, static_cast<std::size_t>(y),
                       static_cast<std::size_t>(x)) = acc;
            }
        }
    }
    return out;
}

auto transform_sharpness(const Patch& in, const AugParams& params) -> Patch {
    if (!(params.sharpness_alpha >= 0.0)) {
        throw std::invalid_argument("sharpness: alpha must be non-negative");
    }
    const Patch blurred = smooth3(in);
    Patch out = in;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = clip255(
            in.data[i] + params.sharpness_alpha * (in.data[i] - blurred.data[i]));
    }
    return out;
}

auto transform_gaussian_blur(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.blur_sigma_min > 0.0
          && params.blur_sigma_min <= params.blur_sigma_max)) {
        throw std::invalid_argument("gaussian_blur: sigma bounds must satisfy "
                                    "0 < sigma_min <= sigma_max");
    }
    const double sigma = rng.uniform(params.blur_sigma_min, params.blur_sigma_max);
    const long radius = std::max<long>(1, static_cast<long>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (long k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = v;
        norm += v;
    }
    for (double& v : kernel) v /= norm;

    const auto h = static_cast<long>(in.height);
    const auto w = static_cast<long>(in.width);
    Patch tmp(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long k = -radius; k <= radius; ++k) {
                    acc += kernel[static_cast<std::size_t>(k + radius)]
                           * in.at(c, static_cast<std::size_t>(y),
                                   static_cast<std::size_t>(
                                       reflect_index(x + k, w)));
                }
                tmp.at(c, static_cast<std::size_t>(y),
                       static_cast<std::size_t>(x)) = acc;
            }
        }
    }
    Patch out(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long k = -radius; k <= radius; ++k) {
                    acc += kernel[static_cast<std::size_t>(k + radius)]
                           * tmp.at(c,
                                    static_cast<std::size_t>(
                                        reflect_index(y + k, h)),
                                    static_cast<std::size_t>(x));
                }
                out.at(c, static_cast<std::size_t>(y),
                       static_cast<std::size_t>(x)) = clip255(acc);
            }
        }
    }
    return out;
}

auto transform_gaussian_noise(const Patch& in, const AugParams& params,
                              Rng& rng) -> Patch {
    if (!(params.noise_variance >= 0.0)) {
        throw std::invalid_argument("gaussian_noise: variance must be "
                                    "non-negative");
    }
    const double stddev = std::sqrt(params.noise_variance);
    Patch out = in;
    for (double& v : out.data) v = clip255(v + rng.normal(0.0, stddev));
    return out;
}

auto transform_solarize(const Patch& in, const AugParams& params) -> Patch {
    if (!(params.solarize_threshold >= 0.0
          && params.solarize_threshold <= 255.0)) {
        throw std::invalid_argument("solarize: threshold must be in [0, 255]");
    }
    Patch out = in;
    for (double& v : out.data) {
        if (v >= params.solarize_threshold) v = 255.0 - v;
        v = clip255(v);
    }
    return out;
}

auto transform_posterize(const Patch& in, const AugParams& params) -> Patch {
    if (params.posterize_bits < 1 || params.posterize_bits > 8) {
        throw std::invalid_argument("posterize: num-bits must be in [1, 8]");
    }
    const auto mask = static_cast<unsigned>(0xFFu << (8 - params.posterize_bits))
                      & 0xFFu;
    Patch out = in;
    for (double& v : out.data) {
        const auto q = static_cast<unsigned>(clip255(std::floor(v)));
        v = static_cast<double>(q & mask);
    }
    return out;
}

auto transform_grayscale(const Patch& in) -> Patch {
    Patch out(in.channels, in.height, in.width);
    const std::size_t plane = in.height * in.width;
    for (std::size_t i = 0; i < plane; ++i) {
        double mean = 0.0;
        for (std::size_t c = 0; c < in.channels; ++c) {
            mean += in.data[c * plane + i];
        }
        mean /= static_cast<double>(in.channels);
        for (std::size_t c = 0; c < in.channels; ++c) {
            out.data[c * plane + i] = mean;
        }
    }
    return out;
}

auto transform_cutout(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.cutout_max_edge > 0.0 && params.cutout_max_edge <= 1.0)) {
        throw std::invalid_argument("cutout: max-edge must be in (0, 1]");
    }
    const auto hole_h = static_cast<std::size_t>(
        std::floor(params.cutout_max_edge * static_cast<double>(in.height)));
    const auto hole_w = static_cast<std::size_t>(
        std::floor(params.cutout_max_edge * static_cast<double>(in.width)));
    Patch out = in;
    // A hole of at least one pixel would exceed the area bound on tiny
    // patches; skip instead.
    if (hole_h < 1 || hole_w < 1) return out;
    const std::size_t y0 = rng.uniform_int(in.height - hole_h + 1);
    const std::size_t x0 = rng.uniform_int(in.width - hole_w + 1);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t y = y0; y < y0 + hole_h; ++y) {
            for (std::size_t x = x0; x < x0 + hole_w; ++x) {
                out.at(c, y, x) = 0.0;
            }
        }
    }
    return out;
}

auto transform_grid_shuffle(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    const std::size_t grid = params.grid_edge;
    if (grid < 1) {
        throw std::invalid_argument("grid_shuffle: grid-edge must be >= 1");
    }
    if (in.height % grid != 0 || in.width % grid != 0) {
        throw std::invalid_argument("grid_shuffle: grid-edge must divide both "
                                    "patch height and width");
    }
    const std::size_t cell_h = in.height / grid;
    const std::size_t cell_w = in.width / grid;
    std::vector<std::size_t> order(grid * grid);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    Patch out(in.channels, in.height, in.width);
    for (std::size_t cell = 0; cell < order.size(); ++cell) {
        const std::size_t dst_y = (cell / grid) * cell_h;
        const std::size_t dst_x = (cell % grid) * cell_w;
        const std::size_t src_y = (order[cell] / grid) * cell_h;
        const std::size_t src_x = (order[cell] % grid) * cell_w;
        for (std::size_t c = 0; c < in.channels; ++c) {
            for (std::size_t y = 0; y < cell_h; ++y) {
                for (std::size_t x = 0; x < cell_w; ++x) {
                    out.at(c, dst_y + y, dst_x + x) =
                        in.at(c, src_y + y, src_x + x);
                }
            }
        }
    }
    return out;
}

auto transform_shear(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.shear_angle_deg >= 0.0 && params.shear_angle_deg < 90.0)) {
        throw std::invalid_argument("shear: angle must be in [0, 90) degrees");
    }
    const double angle =
        rng.uniform(-params.shear_angle_deg, params.shear_angle_deg);
    const double slope = std::tan(angle * std::numbers::pi / 180.0);
    const double center_y = (static_cast<double>(in.height) - 1.0) / 2.0;
    const auto w = static_cast<long>(in.width);

    Patch out(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t y = 0; y < in.height; ++y) {
            const double src_x_base =
                slope * (static_cast<double>(y) - center_y);
            for (std::size_t x = 0; x < in.width; ++x) {
                const double src_x = static_cast<double>(x) + src_x_base;
                const auto x0 = static_cast<long>(std::floor(src_x));
                const double wx = src_x - static_cast<double>(x0);
                const double v0 =
                    (x0 >= 0 && x0 < w) ? in.at(c, y, static_cast<std::size_t>(x0))
                                        : 0.0;
                const double v1 = (x0 + 1 >= 0 && x0 + 1 < w)
                                      ? in.at(c, y, static_cast<std::size_t>(x0 + 1))
                                      : 0.0;
                out.at(c, y, x) = (1.0 - wx) * v0 + wx * v1;
            }
        }
    }
    return out;
}

auto transform_translate(const Patch& in, const AugParams& params, Rng& rng)
    -> Patch {
    if (!(params.translate_percent >= 0.0 && params.translate_percent <= 100.0)) {
        throw std::invalid_argument("translate: percent must be in [0, 100]");
    }
    const double frac = params.translate_percent / 100.0;
    const long dx =
        std::lround(rng.uniform(-frac, frac) * static_cast<double>(in.width));
    const long dy =
        std::lround(rng.uniform(-frac, frac) * static_cast<double>(in.height));
    const auto h = static_cast<long>(in.height);
    const auto w = static_cast<long>(in.width);

    Patch out(in.channels, in.height, in.width);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (long y = 0; y < h; ++y) {
            const long sy = y - dy;
            for (long x = 0; x < w; ++x) {
                const long sx = x - dx;
                out.at(c, static_cast<std::size_t>(y),
                       static_cast<std::size_t>(x)) =
                    (sy >= 0 && sy < h && sx >= 0 && sx < w)
                        ? in.at(c, static_cast<std::size_t>(sy),
                                static_cast<std::size_t>(sx))
                        : 0.0;
            }
        }
    }
    return out;
}

auto bad_key(std::string_view key, AugTechnique technique) -> std::invalid_argument {
    return std::invalid_argument("pipeline: key '" + std::string(key)
                                 + "' is not valid for technique '"
                                 + technique_name(technique) + "'");
}

auto set_param(AugSpec& spec, std::string_view key, std::string_view value)
    -> void {
    AugParams& p = spec.params;
    const AugTechnique t = spec.technique;
    if (key == "scale_min" && t == AugTechnique::rrc) {
        p.scale_min = parse_double(value, "scale_min");
    } else if (key == "scale_max" && t == AugTechnique::rrc) {
        p.scale_max = parse_double(value, "scale_max");
    } else if (key == "ratio_min" && t == AugTechnique::rrc) {
        p.ratio_min = parse_double(value, "ratio_min");
    } else if (key == "ratio_max" && t == AugTechnique::rrc) {
        p.ratio_max = parse_double(value, "ratio_max");
    } else if (key == "out_h" && t == AugTechnique::rrc) {
        p.out_height = parse_size(value, "out_h");
    } else if (key == "out_w" && t == AugTechnique::rrc) {
        p.out_width = parse_size(value, "out_w");
    } else if (key == "limit" && t == AugTechnique::brightness) {
        p.brightness_limit = parse_double(value, "limit");
    } else if (key == "limit" && t == AugTechnique::contrast) {
        p.contrast_limit = parse_double(value, "limit");
    } else if (key == "alpha" && t == AugTechnique::sharpness) {
        p.sharpness_alpha = parse_double(value, "alpha");
    } else if (key == "sigma" && t == AugTechnique::gaussian_blur) {
        p.blur_sigma_min = parse_double(value, "sigma");
        p.blur_sigma_max = p.blur_sigma_min;
    } else if (key == "sigma_min" && t == AugTechnique::gaussian_blur) {
        p.blur_sigma_min = parse_double(value, "sigma_min");
    } else if (key == "sigma_max" && t == AugTechnique::gaussian_blur) {
        p.blur_sigma_max = parse_double(value, "sigma_max");
    } else if (key == "var" && t == AugTechnique::gaussian_noise) {
        p.noise_variance = parse_double(value, "var");
    } else if (key == "threshold" && t == AugTechnique::solarize) {
        p.solarize_threshold = parse_double(value, "threshold");
    } else if (key == "bits" && t == AugTechnique::posterize) {
        p.posterize_bits = parse_size(value, "bits");
    } else if (key == "max_edge" && t == AugTechnique::cutout) {
        p.cutout_max_edge = parse_double(value, "max_edge");
    } else if (key == "grid" && t == AugTechnique::grid_shuffle) {
        p.grid_edge = parse_size(value, "grid");
    } else if (key == "angle" && t == AugTechnique::shear) {
        p.shear_angle_deg = parse_double(value, "angle");
    } else if (key == "percent" && t == AugTechnique::translate) {
        p.translate_percent = parse_double(value, "percent");
    } else {
        throw bad_key(key, t);
    }
}

auto split_tokens(std::string_view line) -> std::vector<std::string_view> {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

}  // namespace

Patch::Patch(std::size_t c, std::size_t h, std::size_t w, double fill)
    : channels(c), height(h), width(w), data(c * h * w, fill) {}

auto Patch::same_shape(const Patch& other) const -> bool {
    return channels == other.channels && height == other.height
           && width == other.width;
}

auto Patch::all_finite() const -> bool {
    for (const double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

auto resize_patch(const Patch& patch, std::size_t out_height,
                  std::size_t out_width) -> Patch {
    require_patch(patch, "resize_patch");
    if (out_height == 0 || out_width == 0) {
        throw std::invalid_argument("resize_patch: output must be non-empty");
    }
    if (out_height == patch.height && out_width == patch.width) return patch;
    return resize_bilinear(patch, 0, 0, patch.height, patch.width, out_height,
                           out_width);
}

auto technique_name(AugTechnique technique) -> const char* {
    for (const auto& [id, name] : kTechniqueNames) {
        if (id == technique) return name;
    }
    throw std::invalid_argument("technique_name: unknown technique id");
}

auto parse_technique(std::string_view name) -> AugTechnique {
    for (const auto& [id, id_name] : kTechniqueNames) {
        if (name == id_name) return id;
    }
    throw std::invalid_argument("parse_technique: unknown technique '"
                                + std::string(name) + "'");
}

auto scaled_spec(AugTechnique technique, double probability, std::size_t beta)
    -> AugSpec {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw std::invalid_argument("scaled_spec: probability must be in [0, 1]");
    }
    if (beta < 1 || beta > 3) {
        throw std::invalid_argument("scaled_spec: beta must be 1, 2, or 3");
    }
    AugSpec spec;
    spec.technique = technique;
    spec.probability = probability;
    const auto b = static_cast<double>(beta);
    switch (technique) {
        case AugTechnique::rrc:
            spec.params.scale_min *= b;
            break;
        case AugTechnique::brightness:
            spec.params.brightness_limit *= b;
            break;
        case AugTechnique::contrast:
            spec.params.contrast_limit *= b;
            break;
        case AugTechnique::sharpness:
            spec.params.sharpness_alpha *= b;
            break;
        case AugTechnique::gaussian_blur:
            spec.params.blur_sigma_min *= b;
            spec.params.blur_sigma_max *= b;
            break;
        case AugTechnique::gaussian_noise:
            spec.params.noise_variance *= b;
            break;
        case AugTechnique::cutout:
            spec.params.cutout_max_edge *= b;
            break;
        case AugTechnique::grid_shuffle:
            spec.params.grid_edge *= beta;
            break;
        case AugTechnique::shear:
            spec.params.shear_angle_deg *= b;
            break;
        case AugTechnique::translate:
            spec.params.translate_percent *= b;
            break;
        default:
            // No strength axis (flips, rr90, solarize, posterize, grayscale).
            break;
    }
    return spec;
}

auto transform(AugTechnique technique, const Patch& patch,
               const AugParams& params, Rng& rng) -> Patch {
    require_patch(patch, "transform");
    switch (technique) {
        case AugTechnique::rrc:
            return transform_rrc(patch, params, rng);
        case AugTechnique::hflip:
            return transform_hflip(patch);
        case AugTechnique::vflip:
            return transform_vflip(patch);
        case AugTechnique::rr90:
            return transform_rr90(patch, rng);
        case AugTechnique::brightness:
            return transform_brightness(patch, params, rng);
        case AugTechnique::contrast:
            return transform_contrast(patch, params, rng);
        case AugTechnique::sharpness:
            return transform_sharpness(patch, params);
        case AugTechnique::gaussian_blur:
            return transform_gaussian_blur(patch, params, rng);
        case AugTechnique::gaussian_noise:
            return transform_gaussian_noise(patch, params, rng);
        case AugTechnique::solarize:
            return transform_solarize(patch, params);
        case AugTechnique::posterize:
            return transform_posterize(patch, params);
        case AugTechnique::grayscale:
            return transform_grayscale(patch);
        case AugTechnique::cutout:
            return transform_cutout(patch, params, rng);
        case AugTechnique::grid_shuffle:
            return transform_grid_shuffle(patch, params, rng);
        case AugTechnique::shear:
            return transform_shear(patch, params, rng);
        case AugTechnique::translate:
            return transform_translate(patch, params, rng);
    }
    throw std::invalid_argument("transform: unknown technique id");
}

auto apply(const AugPipeline& pipeline, const Patch& patch, std::uint64_t seed)
    -> Patch {
    require_patch(patch, "apply");
    if (!patch.all_finite()) {
        throw std::invalid_argument("apply: patch holds non-finite values");
    }
    Rng master(derive_seed(seed, pipeline.stream));
    Patch out = patch;
    for (const AugSpec& spec : pipeline.specs) {
        if (!(spec.probability >= 0.0 && spec.probability <= 1.0)) {
            throw std::invalid_argument("apply: probability must be in [0, 1]");
        }
        // Two master draws per position whether or not the spec fires,
        // so the stream layout is stable under probability edits.
        const double fire = master.uniform01();
        const std::uint64_t sub_seed = master.next_u64();
        if (fire < spec.probability) {
            Rng local(sub_seed);
            out = transform(spec.technique, out, spec.params, local);
        }
    }
    return out;
}

auto percentile_normalize(const Patch& raw,
                          const std::vector<double>& percentiles) -> Patch {
    require_patch(raw, "percentile_normalize");
    if (percentiles.size() != raw.channels) {
        throw std::invalid_argument("percentile_normalize: need one percentile "
                                    "per channel");
    }
    for (const double p : percentiles) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("percentile_normalize: percentiles "
                                        "must be positive and finite");
        }
    }
    Patch out(raw.channels, raw.height, raw.width);
    const std::size_t plane = raw.height * raw.width;
    for (std::size_t c = 0; c < raw.channels; ++c) {
        const double scale = percentiles[c];
        for (std::size_t i = 0; i < plane; ++i) {
            const double ratio =
                std::clamp(raw.data[c * plane + i] / scale, 0.0, 1.0);
            out.data[c * plane + i] = ratio * 255.0;
        }
    }
    return out;
}

auto standard_pipeline(std::size_t out_height, std::size_t out_width)
    -> AugPipeline {
    AugPipeline pipe;
    AugSpec crop = scaled_spec(AugTechnique::rrc, 1.0);
    crop.params.out_height = out_height;
    crop.params.out_width = out_width;
    pipe.specs.push_back(crop);

    AugSpec bright = scaled_spec(AugTechnique::brightness, 0.8);
    bright.params.brightness_limit = 0.4;
    pipe.specs.push_back(bright);

    AugSpec contr = scaled_spec(AugTechnique::contrast, 0.8);
    contr.params.contrast_limit = 0.4;
    pipe.specs.push_back(contr);

    AugSpec blur = scaled_spec(AugTechnique::gaussian_blur, 0.5);
    blur.params.blur_sigma_min = 0.1;
    blur.params.blur_sigma_max = 2.0;
    pipe.specs.push_back(blur);

    pipe.specs.push_back(scaled_spec(AugTechnique::grayscale, 0.2));
    pipe.specs.push_back(scaled_spec(AugTechnique::hflip, 0.5));
    return pipe;
}

auto geometric_pipeline(std::size_t out_height, std::size_t out_width)
    -> AugPipeline {
    AugPipeline pipe;
    AugSpec crop = scaled_spec(AugTechnique::rrc, 1.0);
    crop.params.out_height = out_height;
    crop.params.out_width = out_width;
    pipe.specs.push_back(crop);
    pipe.specs.push_back(scaled_spec(AugTechnique::hflip, 0.75));
    pipe.specs.push_back(scaled_spec(AugTechnique::vflip, 0.75));
    pipe.specs.push_back(scaled_spec(AugTechnique::rr90, 0.75));
    return pipe;
}

auto parse_pipeline(std::string_view text) -> AugPipeline {
    AugPipeline pipe;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (const std::size_t hash = line.find('#');
            hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto tokens = split_tokens(line);
        if (tokens.empty()) continue;

        if (tokens[0] == "stream") {
            if (tokens.size() != 2) {
                throw std::invalid_argument("pipeline: 'stream' takes exactly "
                                            "one integer argument");
            }
            pipe.stream = parse_size(tokens[1], "pipeline stream id");
            continue;
        }

        const AugTechnique technique = parse_technique(tokens[0]);
        double probability = 1.0;
        std::size_t beta = 1;
        std::vector<std::pair<std::string_view, std::string_view>> others;
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            const std::size_t eq = tokens[i].find('=');
            if (eq == std::string_view::npos) {
                throw std::invalid_argument("pipeline: expected key=value, got '"
                                            + std::string(tokens[i]) + "'");
            }
            const std::string_view key = tokens[i].substr(0, eq);
            const std::string_view value = tokens[i].substr(eq + 1);
            if (key == "p") {
                probability = parse_double(value, "p");
            } else if (key == "beta") {
                beta = parse_size(value, "beta");
            } else {
                others.emplace_back(key, value);
            }
        }
        AugSpec spec = scaled_spec(technique, probability, beta);
        for (const auto& [key, value] : others) set_param(spec, key, value);
        pipe.specs.push_back(spec);
    }
    return pipe;
}

auto pipeline_to_text(const AugPipeline& pipeline) -> std::string {
    std::string out;
    if (pipeline.stream != 0) {
        out += "stream " + std::to_string(pipeline.stream) + "\n";
    }
    for (const AugSpec& spec : pipeline.specs) {
        const AugParams& p = spec.params;
        out += technique_name(spec.technique);
        out += " p=" + format_double(spec.probability);
        switch (spec.technique) {
            case AugTechnique::rrc:
                out += " scale_min=" + format_double(p.scale_min);
                out += " scale_max=" + format_double(p.scale_max);
                out += " ratio_min=" + format_double(p.ratio_min);
                out += " ratio_max=" + format_double(p.ratio_max);
                out += " out_h=" + std::to_string(p.out_height);
                out += " out_w=" + std::to_string(p.out_width);
                break;
            case AugTechnique::brightness:
                out += " limit=" + format_double(p.brightness_limit);
                break;
            case AugTechnique::contrast:
                out += " limit=" + format_double(p.contrast_limit);
                break;
            case AugTechnique::sharpness:
                out += " alpha=" + format_double(p.sharpness_alpha);
                break;
            case AugTechnique::gaussian_blur:
                out += " sigma_min=" + format_double(p.blur_sigma_min);
                out += " sigma_max=" + format_double(p.blur_sigma_max);
                break;
            case AugTechnique::gaussian_noise:
                out += " var=" + format_double(p.noise_variance);
                break;
            case AugTechnique::solarize:
                out += " threshold=" + format_double(p.solarize_threshold);
                break;
            case AugTechnique::posterize:
                out += " bits=" + std::to_string(p.posterize_bits);
                break;
            case AugTechnique::cutout:
                out += " max_edge=" + format_double(p.cutout_max_edge);
                break;
            case AugTechnique::grid_shuffle:
                out += " grid=" + std::to_string(p.grid_edge);
                break;
            case AugTechnique::shear:
                out += " angle=" + format_double(p.shear_angle_deg);
                break;
            case AugTechnique::translate:
                out += " percent=" + format_double(p.translate_percent);
                break;
            default:
                break;
        }
        out += "\n";
    }
    return out;
}

}  // namespace geossl
