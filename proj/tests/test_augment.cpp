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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "geossl/augment.hpp"
#include "geossl/rng.hpp"

using namespace geossl;

namespace {

Patch random_patch(std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
    Patch patch(c, h, w);
    for (double& v : patch.data) v = rng.uniform(0.0, 255.0);
    return patch;
}

bool within_range(const Patch& patch, double lo = 0.0, double hi = 255.0) {
    return std::all_of(patch.data.begin(), patch.data.end(),
                       [&](double v) { return v >= lo && v <= hi; });
}

bool bit_identical(const Patch& a, const Patch& b) {
    return a.same_shape(b) && a.data == b.data;
}

// First seed below 10000 whose leading uniform_int(4) draw equals `turns`.
std::uint64_t seed_with_turn_count(std::uint64_t turns) {
    for (std::uint64_t s = 0; s < 10000; ++s) {
        Rng probe(s);
        if (probe.uniform_int(4) == turns) return s;
    }
    FAIL("no seed found for requested quarter-turn count");
    return 0;
}

}  // namespace

TEST_CASE("empty pipeline is the identity") {
    Rng rng(11);
    const Patch patch = random_patch(4, 16, 16, rng);
    const AugPipeline pipe;
    const Patch out = apply(pipe, patch, 123);
    CHECK(bit_identical(out, patch));
}

TEST_CASE("pipeline output is bit-identical for equal seeds") {
    Rng rng(12);
    const Patch patch = random_patch(4, 16, 16, rng);
    AugPipeline pipe = geometric_pipeline(16, 16);
    pipe.specs.push_back(scaled_spec(AugTechnique::gaussian_noise, 1.0));
    pipe.specs.push_back(scaled_spec(AugTechnique::brightness, 0.5));
    pipe.specs.push_back(scaled_spec(AugTechnique::cutout, 0.7));

    const Patch a = apply(pipe, patch, 987654321);
    const Patch b = apply(pipe, patch, 987654321);
    CHECK(bit_identical(a, b));

    const Patch c = apply(pipe, patch, 987654322);
    CHECK_FALSE(bit_identical(a, c));
}

TEST_CASE("stream id separates otherwise identical pipelines") {
    Rng rng(13);
    const Patch patch = random_patch(2, 16, 16, rng);
    AugPipeline pipe;
    pipe.specs.push_back(scaled_spec(AugTechnique::gaussian_noise, 1.0));
    const Patch a = apply(pipe, patch, 5);
    pipe.stream = 1;
    const Patch b = apply(pipe, patch, 5);
    CHECK_FALSE(bit_identical(a, b));
}

TEST_CASE("non-firing specs consume the same master draws as firing ones") {
    Rng rng(14);
    const Patch patch = random_patch(3, 16, 16, rng);

    // Position 1 either never fires or fires as an exact no-op
    // (brightness with limit 0); position 2 must behave identically.
    AugPipeline skip;
    skip.specs.push_back(scaled_spec(AugTechnique::brightness, 0.0));
    skip.specs.push_back(scaled_spec(AugTechnique::gaussian_noise, 1.0));

    AugPipeline noop;
    noop.specs.push_back(scaled_spec(AugTechnique::brightness, 1.0));
    noop.specs[0].params.brightness_limit = 0.0;
    noop.specs.push_back(scaled_spec(AugTechnique::gaussian_noise, 1.0));

    for (std::uint64_t seed = 0; seed < 16; ++seed) {
        CHECK(bit_identical(apply(skip, patch, seed), apply(noop, patch, seed)));
    }
}

TEST_CASE("geometric pipeline keeps the configured output shape") {
    Rng rng(15);
    const AugPipeline pipe = geometric_pipeline(16, 16);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Patch patch = random_patch(4, 16, 16, rng);
        const Patch out = apply(pipe, patch, seed);
        CHECK(out.channels == 4);
        CHECK(out.height == 16);
        CHECK(out.width == 16);
        CHECK(within_range(out));
    }
}

TEST_CASE("standard pipeline keeps shape and range") {
    Rng rng(16);
    const AugPipeline pipe = standard_pipeline(16, 16);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Patch patch = random_patch(4, 16, 16, rng);
        const Patch out = apply(pipe, patch, seed);
        CHECK(out.channels == 4);
        CHECK(out.height == 16);
        CHECK(out.width == 16);
        CHECK(within_range(out));
    }
}

TEST_CASE("four equal quarter-turns restore the patch") {
    Rng rng(17);
    const Patch patch = random_patch(3, 12, 12, rng);
    const std::uint64_t seed = seed_with_turn_count(1);
    const AugParams params;
    Patch current = patch;
    for (int i = 0; i < 4; ++i) {
        Rng turn_rng(seed);
        current = transform(AugTechnique::rr90, current, params, turn_rng);
    }
    CHECK(bit_identical(current, patch));
}

TEST_CASE("one quarter-turn rotates counter-clockwise and swaps dimensions") {
    Patch patch(1, 2, 3);
    patch.data = {1, 2, 3, 4, 5, 6};
    const std::uint64_t seed = seed_with_turn_count(1);
    Rng rng(seed);
    const Patch out = transform(AugTechnique::rr90, patch, AugParams{}, rng);
    CHECK(out.height == 3);
    CHECK(out.width == 2);
    const std::vector<double> expected{3, 6, 2, 5, 1, 4};
    CHECK(out.data == expected);
}

TEST_CASE("zero quarter-turns is the identity") {
    Rng rng_data(18);
    const Patch patch = random_patch(2, 8, 8, rng_data);
    const std::uint64_t seed = seed_with_turn_count(0);
    Rng rng(seed);
    const Patch out = transform(AugTechnique::rr90, patch, AugParams{}, rng);
    CHECK(bit_identical(out, patch));
}

TEST_CASE("horizontal and vertical flips are involutions") {
    Rng data_rng(19);
    Rng unused(0);
    const Patch patch = random_patch(4, 9, 7, data_rng);
    const AugParams params;

    const Patch h1 = transform(AugTechnique::hflip, patch, params, unused);
    const Patch h2 = transform(AugTechnique::hflip, h1, params, unused);
    CHECK_FALSE(bit_identical(h1, patch));
    CHECK(bit_identical(h2, patch));

    const Patch v1 = transform(AugTechnique::vflip, patch, params, unused);
    const Patch v2 = transform(AugTechnique::vflip, v1, params, unused);
    CHECK_FALSE(bit_identical(v1, patch));
    CHECK(bit_identical(v2, patch));
}

TEST_CASE("hflip mirrors rows") {
    Patch patch(1, 1, 3);
    patch.data = {1, 2, 3};
    Rng unused(0);
    const Patch out = transform(AugTechnique::hflip, patch, AugParams{}, unused);
    const std::vector<double> expected{3, 2, 1};
    CHECK(out.data == expected);
}

TEST_CASE("grayscale replaces channels by their mean") {
    Patch patch(4, 1, 1);
    patch.data = {10, 20, 30, 40};
    Rng unused(0);
    const Patch out =
        transform(AugTechnique::grayscale, patch, AugParams{}, unused);
    for (const double v : out.data) CHECK(v == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("grid shuffle preserves the multiset of pixel values") {
    Rng rng(20);
    for (int trial = 0; trial < 20; ++trial) {
        const Patch patch = random_patch(3, 16, 16, rng);
        AugParams params;
        params.grid_edge = 4;
        Rng t_rng(rng.next_u64());
        const Patch out = transform(AugTechnique::grid_shuffle, patch, params, t_rng);
        CHECK(out.same_shape(patch));
        std::vector<double> a = patch.data;
        std::vector<double> b = out.data;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }
}

TEST_CASE("grid shuffle moves whole cells coherently across channels") {
    // Give every cell a distinct constant value per channel; after the
    // shuffle each cell must still be constant and channel-consistent.
    const std::size_t grid = 2;
    Patch patch(2, 8, 8);
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t y = 0; y < 8; ++y) {
            for (std::size_t x = 0; x < 8; ++x) {
                const double cell =
                    static_cast<double>((y / 4) * grid + (x / 4));
                patch.at(c, y, x) = cell * 10.0 + static_cast<double>(c);
            }
        }
    }
    AugParams params;
    params.grid_edge = grid;
    Rng rng(21);
    const Patch out = transform(AugTechnique::grid_shuffle, patch, params, rng);
    for (std::size_t y = 0; y < 8; ++y) {
        for (std::size_t x = 0; x < 8; ++x) {
            const double base = out.at(0, y / 4 * 4, x / 4 * 4);
            CHECK(out.at(0, y, x) == base);
            CHECK(out.at(1, y, x) == base + 1.0);
        }
    }
}

TEST_CASE("grid shuffle rejects non-dividing grids") {
    Rng rng(22);
    const Patch patch = random_patch(1, 10, 10, rng);
    AugParams params;
    params.grid_edge = 3;
    CHECK_THROWS_AS(transform(AugTechnique::grid_shuffle, patch, params, rng),
                    std::invalid_argument);
}

TEST_CASE("cutout zeroes a bounded area and leaves the rest untouched") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Patch patch(3, 16, 16);
        for (double& v : patch.data) v = rng.uniform(1.0, 255.0);
        AugParams params;
        params.cutout_max_edge = 0.25;
        Rng t_rng(rng.next_u64());
        const Patch out = transform(AugTechnique::cutout, patch, params, t_rng);
        REQUIRE(out.same_shape(patch));
        std::size_t zeroed = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            if (out.data[i] == 0.0) {
                ++zeroed;
            } else {
                CHECK(out.data[i] == patch.data[i]);
            }
        }
        const double per_channel =
            static_cast<double>(zeroed) / static_cast<double>(patch.channels);
        CHECK(per_channel <= 0.25 * 0.25 * 16.0 * 16.0);
        CHECK(zeroed % patch.channels == 0);
        CHECK(zeroed > 0);
    }
}

TEST_CASE("rrc resizes to the configured output size") {
    Rng rng(24);
    const Patch patch = random_patch(4, 16, 16, rng);
    AugParams params;
    params.out_height = 8;
    params.out_width = 8;
    double lo = 255.0;
    double hi = 0.0;
    for (const double v : patch.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng t_rng(seed);
        const Patch out = transform(AugTechnique::rrc, patch, params, t_rng);
        CHECK(out.channels == 4);
        CHECK(out.height == 8);
        CHECK(out.width == 8);
        // Bilinear output is a convex combination of input pixels.
        CHECK(within_range(out, lo, hi));
    }
}

TEST_CASE("rrc with default output size keeps the input size") {
    Rng rng(25);
    const Patch patch = random_patch(2, 12, 16, rng);
    Rng t_rng(3);
    const Patch out = transform(AugTechnique::rrc, patch, AugParams{}, t_rng);
    CHECK(out.height == 12);
    CHECK(out.width == 16);
}

TEST_CASE("rrc rejects bad scale and ratio bounds") {
    Rng rng(26);
    const Patch patch = random_patch(1, 8, 8, rng);
    AugParams params;
    params.scale_min = 0.0;
    CHECK_THROWS_AS(transform(AugTechnique::rrc, patch, params, rng),
                    std::invalid_argument);
    params = AugParams{};
    params.scale_max = 1.5;
    CHECK_THROWS_AS(transform(AugTechnique::rrc, patch, params, rng),
                    std::invalid_argument);
    params = AugParams{};
    params.ratio_min = 2.0;  // above ratio_max
    CHECK_THROWS_AS(transform(AugTechnique::rrc, patch, params, rng),
                    std::invalid_argument);
}

TEST_CASE("channel transforms keep shape and clip to the valid range") {
    Rng rng(27);
    const Patch patch = random_patch(4, 16, 16, rng);
    const std::vector<AugTechnique> channel_ops{
        AugTechnique::brightness,   AugTechnique::contrast,
        AugTechnique::sharpness,    AugTechnique::gaussian_blur,
        AugTechnique::gaussian_noise, AugTechnique::solarize,
        AugTechnique::posterize,    AugTechnique::grayscale,
    };
    AugParams params;
    params.brightness_limit = 0.5;
    params.contrast_limit = 0.9;
    params.sharpness_alpha = 2.0;
    params.noise_variance = 400.0;
    for (const AugTechnique op : channel_ops) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng t_rng(seed);
            const Patch out = transform(op, patch, params, t_rng);
            CHECK(out.same_shape(patch));
            CHECK(within_range(out));
        }
    }
}

TEST_CASE("zero-strength transforms are exact identities") {
    Rng rng(28);
    const Patch patch = random_patch(3, 8, 8, rng);
    AugParams params;
    params.brightness_limit = 0.0;
    params.contrast_limit = 0.0;
    params.sharpness_alpha = 0.0;
    params.noise_variance = 0.0;
    params.shear_angle_deg = 0.0;
    params.translate_percent = 0.0;
    for (const AugTechnique op :
         {AugTechnique::brightness, AugTechnique::contrast,
          AugTechnique::sharpness, AugTechnique::gaussian_noise,
          AugTechnique::shear, AugTechnique::translate}) {
        Rng t_rng(5);
        const Patch out = transform(op, patch, params, t_rng);
        CHECK(bit_identical(out, patch));
    }
}

TEST_CASE("gaussian blur preserves constant patches") {
    Patch patch(2, 9, 9, 103.5);
    AugParams params;
    params.blur_sigma_min = 1.5;
    params.blur_sigma_max = 1.5;
    Rng rng(29);
    const Patch out = transform(AugTechnique::gaussian_blur, patch, params, rng);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(patch.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("gaussian blur spreads an impulse symmetrically") {
    Patch patch(1, 9, 9);
    patch.at(0, 4, 4) = 255.0;
    AugParams params;
    Rng rng(30);
    const Patch out = transform(AugTechnique::gaussian_blur, patch, params, rng);
    CHECK(out.at(0, 4, 4) > out.at(0, 3, 4));
    for (std::size_t y = 0; y < 9; ++y) {
        for (std::size_t x = 0; x < 9; ++x) {
            CHECK(out.at(0, y, x)
                  == doctest::Approx(out.at(0, 8 - y, 8 - x)).epsilon(1e-12));
            CHECK(out.at(0, y, x)
                  == doctest::Approx(out.at(0, x, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("solarize inverts values at or above the threshold") {
    Patch patch(1, 1, 4);
    patch.data = {100.0, 127.9, 128.0, 200.0};
    Rng unused(0);
    const Patch out = transform(AugTechnique::solarize, patch, AugParams{}, unused);
    CHECK(out.data[0] == 100.0);
    CHECK(out.data[1] == 127.9);
    CHECK(out.data[2] == 127.0);
    CHECK(out.data[3] == 55.0);
}

TEST_CASE("posterize keeps the top bits of the quantized value") {
    Patch patch(1, 1, 4);
    patch.data = {255.0, 100.0, 100.7, 15.0};
    Rng unused(0);
    AugParams params;
    params.posterize_bits = 4;
    const Patch out = transform(AugTechnique::posterize, patch, params, unused);
    CHECK(out.data[0] == 240.0);
    CHECK(out.data[1] == 96.0);
    CHECK(out.data[2] == 96.0);
    CHECK(out.data[3] == 0.0);

    params.posterize_bits = 9;
    CHECK_THROWS_AS(transform(AugTechnique::posterize, patch, params, unused),
                    std::invalid_argument);
}

TEST_CASE("translate shifts by whole pixels with zero fill") {
    Rng rng(31);
    const Patch patch = random_patch(1, 8, 8, rng);
    AugParams params;
    params.translate_percent = 25.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng t_rng(seed);
        const Patch out = transform(AugTechnique::translate, patch, params, t_rng);
        CHECK(out.same_shape(patch));
        // Every output value is either zero fill or an input value.
        for (const double v : out.data) {
            const bool from_input =
                std::find(patch.data.begin(), patch.data.end(), v)
                != patch.data.end();
            CHECK((v == 0.0 || from_input));
        }
    }
}

TEST_CASE("percentile normalization maps the percentile to 255") {
    Patch raw(3, 1, 1);
    raw.data = {50.0, 100.0, 300.0};
    const std::vector<double> percentiles{100.0, 100.0, 150.0};
    const Patch out = percentile_normalize(raw, percentiles);
    CHECK(out.data[0] == doctest::Approx(127.5).epsilon(1e-15));
    CHECK(out.data[1] == doctest::Approx(255.0).epsilon(1e-15));
    CHECK(out.data[2] == doctest::Approx(255.0).epsilon(1e-15));  // clipped

    CHECK_THROWS_AS(percentile_normalize(raw, {100.0, 0.0, 100.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(percentile_normalize(raw, {100.0, 100.0}),
                    std::invalid_argument);
}

TEST_CASE("scaled specs multiply the strength axis by beta") {
    CHECK(scaled_spec(AugTechnique::brightness, 0.2, 2).params.brightness_limit
          == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(scaled_spec(AugTechnique::gaussian_noise, 0.2, 3).params.noise_variance
          == doctest::Approx(90.0).epsilon(1e-15));
    CHECK(scaled_spec(AugTechnique::grid_shuffle, 0.2, 2).params.grid_edge == 4);
    CHECK(scaled_spec(AugTechnique::shear, 0.2, 3).params.shear_angle_deg
          == doctest::Approx(30.0).epsilon(1e-15));
    // No strength axis: beta leaves the parameters alone.
    CHECK(scaled_spec(AugTechnique::solarize, 0.2, 3).params.solarize_threshold
          == 128.0);
    CHECK_THROWS_AS(scaled_spec(AugTechnique::brightness, 0.2, 4),
                    std::invalid_argument);
    CHECK_THROWS_AS(scaled_spec(AugTechnique::brightness, 1.2, 1),
                    std::invalid_argument);
}

TEST_CASE("pipeline text round-trips through parse and format") {
    AugPipeline pipe = standard_pipeline(16, 16);
    pipe.specs.push_back(scaled_spec(AugTechnique::solarize, 0.2));
    pipe.specs.push_back(scaled_spec(AugTechnique::grid_shuffle, 0.2, 2));
    pipe.specs.push_back(scaled_spec(AugTechnique::translate, 0.2, 3));
    pipe.stream = 42;

    const std::string text = pipeline_to_text(pipe);
    const AugPipeline parsed = parse_pipeline(text);
    REQUIRE(parsed.specs.size() == pipe.specs.size());
    CHECK(parsed.stream == pipe.stream);
    for (std::size_t i = 0; i < pipe.specs.size(); ++i) {
        CHECK(parsed.specs[i].technique == pipe.specs[i].technique);
        CHECK(parsed.specs[i].probability == pipe.specs[i].probability);
    }
    // Same augmentation behavior after the round trip.
    Rng rng(32);
    const Patch patch = random_patch(4, 16, 16, rng);
    CHECK(bit_identical(apply(pipe, patch, 7), apply(parsed, patch, 7)));
}

TEST_CASE("pipeline parser reads specs, comments, and stream ids") {
    const char* text =
        "# two-step pipeline\n"
        "stream 9\n"
        "rrc p=1.0 scale_min=0.3 out_h=8 out_w=8  # crop\n"
        "brightness p=0.25 limit=0.2\n"
        "\n"
        "gaussian_blur p=0.5 sigma_min=0.1 sigma_max=2.0\n";
    const AugPipeline pipe = parse_pipeline(text);
    CHECK(pipe.stream == 9);
    REQUIRE(pipe.specs.size() == 3);
    CHECK(pipe.specs[0].technique == AugTechnique::rrc);
    CHECK(pipe.specs[0].params.scale_min == 0.3);
    CHECK(pipe.specs[0].params.out_height == 8);
    CHECK(pipe.specs[1].probability == 0.25);
    CHECK(pipe.specs[1].params.brightness_limit == 0.2);
    CHECK(pipe.specs[2].params.blur_sigma_max == 2.0);
}

TEST_CASE("pipeline parser rejects malformed input") {
    CHECK_THROWS_AS(parse_pipeline("warp p=0.5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_pipeline("brightness limit"), std::invalid_argument);
    CHECK_THROWS_AS(parse_pipeline("brightness sigma=1.0"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_pipeline("brightness p=abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_pipeline("stream"), std::invalid_argument);
}

TEST_CASE("apply rejects invalid probabilities and malformed patches") {
    Rng rng(33);
    const Patch patch = random_patch(1, 4, 4, rng);
    AugPipeline pipe;
    pipe.specs.push_back(scaled_spec(AugTechnique::hflip, 1.0));
    pipe.specs[0].probability = 1.5;
    CHECK_THROWS_AS(apply(pipe, patch, 0), std::invalid_argument);

    const AugPipeline ok = geometric_pipeline(4, 4);
    Patch empty;
    CHECK_THROWS_AS(apply(ok, empty, 0), std::invalid_argument);

    Patch bad = patch;
    bad.data.pop_back();
    CHECK_THROWS_AS(apply(ok, bad, 0), std::invalid_argument);
}

TEST_CASE("technique names round-trip") {
    for (const AugTechnique t :
         {AugTechnique::rrc, AugTechnique::hflip, AugTechnique::vflip,
          AugTechnique::rr90, AugTechnique::brightness, AugTechnique::contrast,
          AugTechnique::sharpness, AugTechnique::gaussian_blur,
          AugTechnique::gaussian_noise, AugTechnique::solarize,
          AugTechnique::posterize, AugTechnique::grayscale,
          AugTechnique::cutout, AugTechnique::grid_shuffle, AugTechnique::shear,
          AugTechnique::translate}) {
        CHECK(parse_technique(technique_name(t)) == t);
    }
    CHECK_THROWS_AS(parse_technique("mixup"), std::invalid_argument);
}
