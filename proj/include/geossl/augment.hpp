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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "geossl/rng.hpp"

namespace geossl {

// Multispectral image patch, channel-major storage, values in [0, 255].
struct Patch {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Patch() = default;
    Patch(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0);

    [[nodiscard]] auto size() const -> std::size_t { return data.size(); }
    [[nodiscard]] auto at(std::size_t c, std::size_t y, std::size_t x)
        -> double& {
        return data[(c * height + y) * width + x];
    }
    [[nodiscard]] auto at(std::size_t c, std::size_t y, std::size_t x) const
        -> double {
        return data[(c * height + y) * width + x];
    }
    [[nodiscard]] auto same_shape(const Patch& other) const -> bool;
    [[nodiscard]] auto all_finite() const -> bool;
};

enum class AugTechnique {
    rrc,
    hflip,
    vflip,
    rr90,
    brightness,
    contrast,
    sharpness,
    gaussian_blur,
    gaussian_noise,
    solarize,
    posterize,
    grayscale,
    cutout,
    grid_shuffle,
    shear,
    translate,
};

auto technique_name(AugTechnique technique) -> const char*;
auto parse_technique(std::string_view name) -> AugTechnique;

// Strength parameters for every technique in one bag; each transform
// reads only its own fields.  Defaults are the base magnitudes.
struct AugParams {
    // Random resized crop.  out_height/out_width of 0 keep the input size.
    double scale_min = 0.2;
    double scale_max = 1.0;
    double ratio_min = 0.75;
    double ratio_max = 4.0 / 3.0;
    std::size_t out_height = 0;
    std::size_t out_width = 0;
    // Channel value transforms.
    double brightness_limit = 0.1;
    double contrast_limit = 0.1;
    double sharpness_alpha = 0.1;
    double blur_sigma_min = 1.5;
    double blur_sigma_max = 1.5;
    double noise_variance = 30.0;
    double solarize_threshold = 128.0;
    std::size_t posterize_bits = 4;
    // Occlusion and geometry.
    double cutout_max_edge = 0.2;
    std::size_t grid_edge = 2;
    double shear_angle_deg = 10.0;
    double translate_percent = 10.0;
};

struct AugSpec {
    AugTechnique technique = AugTechnique::hflip;
    double probability = 1.0;
    AugParams params;
};

// Ordered list of augmentation steps.  `stream` separates otherwise
// identical pipelines into independent random streams.
struct AugPipeline {
    std::vector<AugSpec> specs;
    std::uint64_t stream = 0;
};

// Builds a spec at base strength multiplied by beta (1, 2, or 3).
// Solarize, posterize, and grayscale have no strength axis; their
// specs ignore beta.
auto scaled_spec(AugTechnique technique, double probability,
                 std::size_t beta = 1) -> AugSpec;

// Applies a single technique.  Channel transforms keep the shape and
// clip to [0, 255]; rrc resizes to the configured output size; rr90
// swaps height and width on odd quarter-turns.
auto transform(AugTechnique technique, const Patch& patch,
               const AugParams& params, Rng& rng) -> Patch;

// Runs the pipeline.  Every spec consumes exactly two master draws
// (fire decision plus sub-stream seed) whether or not it fires, so
// the random stream layout is independent of the probabilities.
auto apply(const AugPipeline& pipeline, const Patch& patch,
           std::uint64_t seed) -> Patch;

// Per-channel percentile scaling of raw sensor values:
// value -> clip(value / percentile, 0, 1) * 255.
auto percentile_normalize(const Patch& raw,
                          const std::vector<double>& percentiles) -> Patch;

// Deterministic bilinear resize of the whole patch, used for evaluation
// views where no random crop is wanted.
auto resize_patch(const Patch& patch, std::size_t out_height,
                  std::size_t out_width) -> Patch;

// Crop + photometric pipeline: rrc p=1, brightness/contrast limit 0.4
// p=0.8 each, gaussian blur sigma (0.1, 2.0) p=0.5, grayscale p=0.2,
// horizontal flip p=0.5.
auto standard_pipeline(std::size_t out_height, std::size_t out_width)
    -> AugPipeline;

// Pure-geometry pipeline: rrc p=1 (scale 0.2..1, ratio 0.75..1.33),
// horizontal and vertical flips p=0.75 each, rr90 p=0.75.
auto geometric_pipeline(std::size_t out_height, std::size_t out_width)
    -> AugPipeline;

// Pipeline text format: one spec per line, "#" starts a comment.
//   <technique> [p=<prob>] [beta=<1|2|3>] [key=value ...]
//   stream <id>
// Keys are technique-specific (limit, alpha, sigma, sigma_min,
// sigma_max, var, threshold, bits, max_edge, grid, angle, percent,
// scale_min, scale_max, ratio_min, ratio_max, out_h, out_w).
auto parse_pipeline(std::string_view text) -> AugPipeline;
auto pipeline_to_text(const AugPipeline& pipeline) -> std::string;

}  // namespace geossl
