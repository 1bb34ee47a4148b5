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
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "geossl/geo.hpp"
#include "geossl/rng.hpp"
#include "geossl/synthdata.hpp"

using namespace geossl;
namespace fs = std::filesystem;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    const auto n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string read_bytes(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

GeoCoordinate random_location(Rng& rng) {
    return GeoCoordinate{rng.uniform(-std::numbers::pi, std::numbers::pi),
                         std::asin(rng.uniform(-1.0, 1.0))};
}

}  // namespace

TEST_CASE("sample_locations is deterministic and uniformly distributed") {
    const auto a = sample_locations(10000, 42);
    const auto b = sample_locations(10000, 42);
    REQUIRE(a.size() == 10000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lon == b[i].lon);
        CHECK(a[i].lat == b[i].lat);
        CHECK(a[i].lon >= -std::numbers::pi);
        CHECK(a[i].lon <= std::numbers::pi);
        CHECK(a[i].lat >= -std::numbers::pi / 2.0);
        CHECK(a[i].lat <= std::numbers::pi / 2.0);
    }
    double mean_sin_lat = 0.0;
    double mean_lon = 0.0;
    for (const GeoCoordinate& loc : a) {
        mean_sin_lat += std::sin(loc.lat);
        mean_lon += loc.lon;
    }
    mean_sin_lat /= 10000.0;
    mean_lon /= 10000.0;
    // 3 sigma bounds: sd(sin lat) = 1/sqrt(3), sd(lon) = pi/sqrt(3).
    CHECK(std::abs(mean_sin_lat) < 0.02);
    CHECK(std::abs(mean_lon) < 0.06);

    const auto c = sample_locations(10, 43);
    CHECK(c[0].lon != a[0].lon);
    CHECK_THROWS_AS(sample_locations(0, 1), std::invalid_argument);
}

TEST_CASE("region_of picks the nearest site with ties to the lowest index") {
    RegionModel model;
    model.sites.push_back(unit_vector(GeoCoordinate{0.0, std::numbers::pi / 2}));
    model.sites.push_back(unit_vector(GeoCoordinate{0.0, -std::numbers::pi / 2}));
    model.region_class = {0, 1};

    CHECK(region_of(model, GeoCoordinate{1.0, 0.8}) == 0);
    CHECK(region_of(model, GeoCoordinate{-2.0, -0.3}) == 1);
    // Equator is equidistant from both poles.
    CHECK(region_of(model, GeoCoordinate{0.7, 0.0}) == 0);
}

TEST_CASE("region model is surjective onto classes") {
    SynthConfig cfg;
    cfg.classes = 5;
    cfg.regions = 8;
    const RegionModel model = make_region_model(cfg);
    REQUIRE(model.sites.size() == 8);
    REQUIRE(model.region_class.size() == 8);
    std::set<std::size_t> seen(model.region_class.begin(),
                               model.region_class.end());
    CHECK(seen.size() == 5);
    for (const std::size_t c : model.region_class) CHECK(c < 5);
}

TEST_CASE("render_patch is deterministic with the configured shape and range") {
    SynthConfig cfg;
    cfg.channels = 3;
    cfg.height = 8;
    cfg.width = 10;
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const GeoCoordinate loc = random_location(rng);
        const std::size_t t = rng.uniform_int(cfg.timestamps);
        const Patch a = render_patch(loc, t, cfg, 99);
        const Patch b = render_patch(loc, t, cfg, 99);
        CHECK(a.channels == 3);
        CHECK(a.height == 8);
        CHECK(a.width == 10);
        CHECK(a.data == b.data);
        for (const double v : a.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 255.0);
        }
    }
    CHECK_THROWS_AS(render_patch(GeoCoordinate{0, 0}, cfg.timestamps, cfg, 1),
                    std::invalid_argument);
}

TEST_CASE("coincident locations give identical noise-free patches") {
    SynthConfig cfg;
    cfg.noise_sigma = 0.0;
    const GeoCoordinate loc{0.4, -0.2};
    const GeoCoordinate same{0.4, -0.2};
    const Patch a = render_patch(loc, 1, cfg, 5);
    const Patch b = render_patch(same, 1, cfg, 5);
    CHECK(a.data == b.data);
}

TEST_CASE("timestamps shift patches through the seasonal offset") {
    SynthConfig cfg;
    cfg.noise_sigma = 0.0;
    cfg.channels = 2;
    cfg.height = 6;
    cfg.width = 6;
    Rng rng(21);
    bool any_difference = false;
    for (int trial = 0; trial < 5 && !any_difference; ++trial) {
        const GeoCoordinate loc = random_location(rng);
        const Patch t0 = render_patch(loc, 0, cfg, 3);
        const Patch t1 = render_patch(loc, 1, cfg, 3);
        any_difference = t0.data != t1.data;
    }
    CHECK(any_difference);
}

TEST_CASE("patch correlation decays with geodesic distance") {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.height = 8;
    cfg.width = 8;
    // Defaults otherwise: length scale 800 km, noise sigma 8.
    Rng rng(31);
    double sum_near = 0.0;
    double sum_far = 0.0;
    const int pairs = 1000;
    for (int i = 0; i < pairs; ++i) {
        const GeoCoordinate base = random_location(rng);
        const double bearing = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const GeoCoordinate near =
            geo_destination(base, bearing, cfg.length_scale_km / 10.0);
        const GeoCoordinate far =
            geo_destination(base, bearing, cfg.length_scale_km * 10.0);
        const Patch pb = render_patch(base, 0, cfg, 77);
        const Patch pn = render_patch(near, 0, cfg, 77);
        const Patch pf = render_patch(far, 0, cfg, 77);
        sum_near += pearson(pb.data, pn.data);
        sum_far += pearson(pb.data, pf.data);
    }
    const double mean_near = sum_near / pairs;
    const double mean_far = sum_far / pairs;
    CHECK(mean_near > mean_far);
}

TEST_CASE("within-region similarity beats cross-region similarity at 3 sigma") {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.seed = 11;
    const RegionModel model = make_region_model(cfg);

    Rng rng(32);
    std::vector<double> same;
    std::vector<double> cross;
    for (int i = 0; i < 1500; ++i) {
        const GeoCoordinate a = random_location(rng);
        const GeoCoordinate b = random_location(rng);
        const double sim = pearson(render_patch(a, 0, cfg, cfg.seed).data,
                                   render_patch(b, 0, cfg, cfg.seed).data);
        if (region_of(model, a) == region_of(model, b)) {
            same.push_back(sim);
        } else {
            cross.push_back(sim);
        }
    }
    REQUIRE(same.size() > 30);
    REQUIRE(cross.size() > 30);
    auto mean_and_se = [](const std::vector<double>& xs) {
        double m = 0.0;
        for (const double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        double var = 0.0;
        for (const double x : xs) var += (x - m) * (x - m);
        var /= static_cast<double>(xs.size() - 1);
        return std::pair<double, double>(
            m, std::sqrt(var / static_cast<double>(xs.size())));
    };
    const auto [mean_same, se_same] = mean_and_se(same);
    const auto [mean_cross, se_cross] = mean_and_se(cross);
    const double margin = mean_same - mean_cross;
    const double sigma = std::sqrt(se_same * se_same + se_cross * se_cross);
    CHECK(margin > 3.0 * sigma);
    CHECK(margin > 0.0);
}

TEST_CASE("generate writes a consistent dataset") {
    SynthConfig cfg;
    cfg.locations = 60;
    cfg.channels = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.classes = 3;
    cfg.regions = 4;
    cfg.timestamps = 2;
    cfg.seed = 123;

    const fs::path dir = fresh_dir("geossl_synth_consistency");
    const DatasetManifest m = generate(cfg, dir);

    CHECK(m.records() == 120);
    CHECK(m.class_names.size() == 3);
    REQUIRE(m.percentiles.size() == 2);
    for (const double p : m.percentiles) {
        CHECK(p > 0.0);
        CHECK(p <= 255.0);
    }
    REQUIRE(m.label.size() == 120);
    for (std::size_t rec = 0; rec < m.records(); ++rec) {
        CHECK(m.label[rec] == m.region[rec] % cfg.classes);
        CHECK(m.timestamp_index[rec] == rec % cfg.timestamps);
        // All timestamps of one location share coordinates and labels.
        const std::size_t first = (rec / cfg.timestamps) * cfg.timestamps;
        CHECK(m.lon[rec] == m.lon[first]);
        CHECK(m.lat[rec] == m.lat[first]);
        CHECK(m.label[rec] == m.label[first]);
    }

    const auto store_bytes = fs::file_size(dir / "patches.bin");
    CHECK(store_bytes == 120 * 2 * 8 * 8 * sizeof(float));

    // Splits partition the records.
    for (const SplitIndices* split : {&m.random_split, &m.blocked_split}) {
        std::vector<std::size_t> all = split->train;
        all.insert(all.end(), split->test.begin(), split->test.end());
        std::sort(all.begin(), all.end());
        REQUIRE(all.size() == m.records());
        for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
        // Location coherence: sibling timestamps stay on one side.
        const std::set<std::size_t> test_set(split->test.begin(),
                                             split->test.end());
        for (const std::size_t rec : split->test) {
            const std::size_t loc = rec / cfg.timestamps;
            for (std::size_t t = 0; t < cfg.timestamps; ++t) {
                CHECK(test_set.count(loc * cfg.timestamps + t) == 1);
            }
        }
    }

    // Random split keeps every class on both sides.
    for (const std::vector<std::size_t>* side :
         {&m.random_split.train, &m.random_split.test}) {
        std::set<std::size_t> classes_here;
        for (const std::size_t rec : *side) classes_here.insert(m.label[rec]);
        CHECK(classes_here.size() == cfg.classes);
    }

    // Blocked split has zero region overlap.
    std::set<std::size_t> train_regions;
    std::set<std::size_t> test_regions;
    for (const std::size_t rec : m.blocked_split.train) {
        train_regions.insert(m.region[rec]);
    }
    for (const std::size_t rec : m.blocked_split.test) {
        test_regions.insert(m.region[rec]);
    }
    for (const std::size_t r : test_regions) {
        CHECK(train_regions.count(r) == 0);
    }
    CHECK_FALSE(train_regions.empty());
    CHECK_FALSE(test_regions.empty());
}

TEST_CASE("generated store round-trips through load_dataset") {
    SynthConfig cfg;
    cfg.locations = 12;
    cfg.channels = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.classes = 2;
    cfg.regions = 3;
    cfg.timestamps = 2;
    cfg.seed = 9;

    const fs::path dir = fresh_dir("geossl_synth_roundtrip");
    const DatasetManifest written = generate(cfg, dir);
    const Dataset ds = load_dataset(dir);
    CHECK(ds.manifest.records() == written.records());
    CHECK(ds.manifest.percentiles == written.percentiles);
    CHECK(ds.manifest.random_split.train == written.random_split.train);
    CHECK(ds.manifest.blocked_split.test == written.blocked_split.test);

    // Stored patches equal the renderer output at float32 precision.
    for (const std::size_t rec : {std::size_t{0}, std::size_t{13}}) {
        const GeoCoordinate loc = ds.location(rec);
        const std::size_t t = ds.manifest.timestamp_index[rec];
        const Patch direct = render_patch(loc, t, cfg, cfg.seed);
        const Patch stored = ds.patch(rec);
        REQUIRE(stored.data.size() == direct.data.size());
        for (std::size_t i = 0; i < stored.data.size(); ++i) {
            CHECK(static_cast<float>(direct.data[i])
                  == static_cast<float>(stored.data[i]));
        }
    }
    CHECK_THROWS_AS(static_cast<void>(ds.patch(written.records())),
                    std::out_of_range);
}

TEST_CASE("regeneration with the same seed is byte-identical") {
    SynthConfig cfg;
    cfg.locations = 40;
    cfg.channels = 2;
    cfg.height = 8;
    cfg.width = 8;
    cfg.classes = 2;
    cfg.regions = 4;
    cfg.timestamps = 2;
    cfg.seed = 31337;

    const fs::path dir_a = fresh_dir("geossl_synth_regen_a");
    const fs::path dir_b = fresh_dir("geossl_synth_regen_b");
    generate(cfg, dir_a);
    generate(cfg, dir_b);
    CHECK(read_bytes(dir_a / "patches.bin") == read_bytes(dir_b / "patches.bin"));
    CHECK(read_bytes(dir_a / "manifest.json")
          == read_bytes(dir_b / "manifest.json"));

    cfg.seed = 31338;
    const fs::path dir_c = fresh_dir("geossl_synth_regen_c");
    generate(cfg, dir_c);
    CHECK(read_bytes(dir_a / "patches.bin") != read_bytes(dir_c / "patches.bin"));
}

TEST_CASE("load_dataset rejects a truncated patch store") {
    SynthConfig cfg;
    cfg.locations = 8;
    cfg.channels = 1;
    cfg.height = 4;
    cfg.width = 4;
    cfg.classes = 2;
    cfg.regions = 2;
    cfg.timestamps = 1;
    cfg.seed = 2;

    const fs::path dir = fresh_dir("geossl_synth_truncated");
    generate(cfg, dir);
    fs::resize_file(dir / "patches.bin",
                    fs::file_size(dir / "patches.bin") - 4);
    CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);
}

TEST_CASE("config validation rejects bad parameters") {
    SynthConfig cfg;
    cfg.classes = 9;
    cfg.regions = 8;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.locations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.noise_sigma = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.length_scale_km = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SynthConfig{};
    CHECK_NOTHROW(cfg.validate());
}
