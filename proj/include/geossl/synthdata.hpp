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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geossl/augment.hpp"
#include "geossl/geo.hpp"

namespace geossl {

// Generator knobs for a synthetic geo-tagged multispectral dataset.
// Nearby locations get similar patches: each location inherits a
// region prototype plus a smooth global field with correlation length
// length_scale_km, so geographic proximity implies semantic
// similarity.  Labels are a pure function of the region.
struct SynthConfig {
    std::size_t locations = 4096;      // distinct sample sites
    std::size_t channels = 4;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t classes = 5;
    std::size_t regions = 8;           // Voronoi cells on the sphere
    std::size_t timestamps = 4;        // views per location
    double noise_sigma = 8.0;          // per-pixel Gaussian noise
    double length_scale_km = 800.0;    // smooth-field correlation length
    std::uint64_t seed = 0;

    void validate() const;
};

// Region sites as unit vectors plus the surjective region -> class map.
struct RegionModel {
    std::vector<std::array<double, 3>> sites;
    std::vector<std::size_t> region_class;
};

auto unit_vector(const GeoCoordinate& loc) -> std::array<double, 3>;

// Uniform locations on the sphere: longitude uniform, sine of
// latitude uniform.  Deterministic given the seed.
auto sample_locations(std::size_t n, std::uint64_t seed)
    -> std::vector<GeoCoordinate>;

auto make_region_model(const SynthConfig& cfg) -> RegionModel;

// Nearest region site by inner product; ties go to the lowest index.
auto region_of(const RegionModel& model, const GeoCoordinate& loc)
    -> std::size_t;

// Deterministic patch for (location, timestamp): region prototype
// texture + smooth location field + seasonal offset + pixel noise,
// clipped to [0, 255].
auto render_patch(const GeoCoordinate& loc, std::size_t t,
                  const SynthConfig& cfg, std::uint64_t seed) -> Patch;

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Mirror of manifest.json.  Per-record arrays are indexed by
// record = location * timestamps + timestamp.
struct DatasetManifest {
    std::size_t locations = 0;
    std::size_t timestamps = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t classes = 0;
    std::size_t regions = 0;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    double length_scale_km = 0.0;
    std::vector<std::string> class_names;
    std::vector<double> percentiles;            // per channel, 99th
    std::vector<double> lon;                    // radians, per record
    std::vector<double> lat;
    std::vector<std::size_t> timestamp_index;   // per record
    std::vector<std::size_t> label;             // per record
    std::vector<std::size_t> region;            // per record
    SplitIndices random_split;                  // stratified by class
    SplitIndices blocked_split;                 // disjoint regions

    [[nodiscard]] auto records() const -> std::size_t {
        return locations * timestamps;
    }
};

// In-memory dataset: manifest plus the raw float32 patch store.
struct Dataset {
    DatasetManifest manifest;
    std::vector<float> store;

    [[nodiscard]] auto patch(std::size_t record) const -> Patch;
    [[nodiscard]] auto location(std::size_t record) const -> GeoCoordinate;
};

// Writes manifest.json and patches.bin (little-endian float32,
// row-major [records, C, H, W]) into out_dir.  Both splits keep every
// timestamp of a location on the same side.  Same config -> byte
// identical files.
auto generate(const SynthConfig& cfg, const std::filesystem::path& out_dir)
    -> DatasetManifest;

auto load_manifest(const std::filesystem::path& dataset_dir)
    -> DatasetManifest;
auto load_dataset(const std::filesystem::path& dataset_dir) -> Dataset;

}  // namespace geossl
