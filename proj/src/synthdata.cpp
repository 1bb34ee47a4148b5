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

#include "geossl/synthdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "geossl/rng.hpp"

namespace geossl {

namespace {

static_assert(std::endian::native == std::endian::little,
              "patch store I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

// Sub-stream tags; changing any of them changes every generated byte.
enum : std::uint64_t {
    kTagLocations = 0xA1,
    kTagRegions = 0xA2,
    kTagPrototype = 0xA3,
    kTagField = 0xA4,
    kTagSeason = 0xA5,
    kTagNoise = 0xA6,
    kTagSplitRandom = 0xA7,
    kTagSplitBlocked = 0xA8,
};

constexpr std::size_t kFieldHarmonics = 12;
constexpr double kChannelMeanLo = 118.0;
constexpr double kChannelMeanHi = 138.0;
constexpr double kTextureAmplitude = 10.0;
constexpr double kFieldAmplitude = 30.0;
constexpr double kSeasonalAmplitude = 10.0;

struct Harmonic {
    std::array<double, 3> axis;
    double omega = 0.0;
    double phase = 0.0;
};

// Everything render needs, derived once per (config, seed).
struct SynthModel {
    RegionModel regions;
    std::vector<double> tex_orientation;          // per region
    std::vector<double> tex_frequency;            // per region
    std::vector<double> channel_mean;             // region * channels
    std::vector<double> tex_phase;                // region * channels
    std::vector<std::vector<Harmonic>> field;     // per channel
    std::vector<double> season_phase;             // per channel
};

auto make_region_model_seeded(const SynthConfig& cfg, std::uint64_t seed)
    -> RegionModel {
    RegionModel model;
    const auto sites =
        sample_locations(cfg.regions, derive_seed(seed, kTagRegions));
    model.sites.reserve(sites.size());
    for (const GeoCoordinate& site : sites) {
        model.sites.push_back(unit_vector(site));
    }
    model.region_class.resize(cfg.regions);
    // r % classes is surjective because regions >= classes.
    for (std::size_t r = 0; r < cfg.regions; ++r) {
        model.region_class[r] = r % cfg.classes;
    }
    return model;
}

auto make_synth_model(const SynthConfig& cfg, std::uint64_t seed) -> SynthModel {
    constexpr double tau = 2.0 * std::numbers::pi;
    SynthModel model;
    model.regions = make_region_model_seeded(cfg, seed);

    Rng proto(derive_seed(seed, kTagPrototype));
    model.tex_orientation.resize(cfg.regions);
    model.tex_frequency.resize(cfg.regions);
    model.channel_mean.resize(cfg.regions * cfg.channels);
    model.tex_phase.resize(cfg.regions * cfg.channels);
    for (std::size_t r = 0; r < cfg.regions; ++r) {
        model.tex_orientation[r] = proto.uniform(0.0, std::numbers::pi);
        model.tex_frequency[r] = proto.uniform(1.0, 3.0);
        for (std::size_t c = 0; c < cfg.channels; ++c) {
            model.channel_mean[r * cfg.channels + c] =
                proto.uniform(kChannelMeanLo, kChannelMeanHi);
            model.tex_phase[r * cfg.channels + c] = proto.uniform(0.0, tau);
        }
    }

    model.field.resize(cfg.channels);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
        Rng field_rng(derive_seed(seed, kTagField, c));
        model.field[c].resize(kFieldHarmonics);
        for (Harmonic& h : model.field[c]) {
            const double lon =
                field_rng.uniform(-std::numbers::pi, std::numbers::pi);
            const double lat = std::asin(field_rng.uniform(-1.0, 1.0));
            h.axis = unit_vector(GeoCoordinate{lon, lat});
            h.omega = (kEarthRadiusKm / cfg.length_scale_km)
                      * field_rng.uniform(1.0, 3.0);
            h.phase = field_rng.uniform(0.0, tau);
        }
    }

    Rng season(derive_seed(seed, kTagSeason));
    model.season_phase.resize(cfg.channels);
    for (double& phase : model.season_phase) phase = season.uniform(0.0, tau);
    return model;
}

auto render_with_model(const SynthModel& model, const SynthConfig& cfg,
                       const GeoCoordinate& loc, std::size_t t,
                       std::uint64_t seed) -> Patch {
    constexpr double tau = 2.0 * std::numbers::pi;
    const std::array<double, 3> x = unit_vector(loc);
    const std::size_t region = region_of(model.regions, loc);

    std::vector<double> channel_base(cfg.channels);
    const double field_norm =
        kFieldAmplitude / std::sqrt(static_cast<double>(kFieldHarmonics) / 2.0);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
        double field = 0.0;
        for (const Harmonic& h : model.field[c]) {
            const double along =
                h.axis[0] * x[0] + h.axis[1] * x[1] + h.axis[2] * x[2];
            field += std::cos(h.omega * along + h.phase);
        }
        const double season =
            kSeasonalAmplitude
            * std::cos(tau * static_cast<double>(t)
                           / static_cast<double>(cfg.timestamps)
                       + model.season_phase[c]);
        channel_base[c] = model.channel_mean[region * cfg.channels + c]
                          + field * field_norm + season;
    }

    Rng noise(derive_seed(derive_seed(seed, kTagNoise),
                          std::bit_cast<std::uint64_t>(loc.lon),
                          std::bit_cast<std::uint64_t>(loc.lat),
                          static_cast<std::uint64_t>(t)));
    const double orient = model.tex_orientation[region];
    const double freq = model.tex_frequency[region];
    const double dir_y = std::cos(orient);
    const double dir_x = std::sin(orient);

    Patch patch(cfg.channels, cfg.height, cfg.width);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
        const double phase = model.tex_phase[region * cfg.channels + c];
        for (std::size_t py = 0; py < cfg.height; ++py) {
            for (std::size_t px = 0; px < cfg.width; ++px) {
                const double u =
                    dir_y * (static_cast<double>(py) + 0.5)
                        / static_cast<double>(cfg.height)
                    + dir_x * (static_cast<double>(px) + 0.5)
                          / static_cast<double>(cfg.width);
                double v = channel_base[c]
                           + kTextureAmplitude * std::cos(tau * freq * u + phase);
                if (cfg.noise_sigma > 0.0) {
                    v += noise.normal(0.0, cfg.noise_sigma);
                }
                patch.at(c, py, px) = std::clamp(v, 0.0, 255.0);
            }
        }
    }
    return patch;
}

// Nearest-rank 99th percentile of one channel across the whole store.
auto channel_percentile(const std::vector<float>& store, std::size_t records,
                        std::size_t channels, std::size_t plane,
                        std::size_t channel) -> double {
    std::vector<float> values;
    values.reserve(records * plane);
    for (std::size_t rec = 0; rec < records; ++rec) {
        const std::size_t offset = (rec * channels + channel) * plane;
        values.insert(values.end(), store.begin() + static_cast<long>(offset),
                      store.begin() + static_cast<long>(offset + plane));
    }
    const std::size_t rank = (99 * values.size() + 99) / 100;  // ceil
    const std::size_t index = rank - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<long>(index),
                     values.end());
    return static_cast<double>(values[index]);
}

auto expand_to_records(std::vector<std::size_t> location_ids, std::size_t t)
    -> std::vector<std::size_t> {
    std::vector<std::size_t> records;
    records.reserve(location_ids.size() * t);
    for (const std::size_t loc : location_ids) {
        for (std::size_t k = 0; k < t; ++k) records.push_back(loc * t + k);
    }
    std::sort(records.begin(), records.end());
    return records;
}

auto manifest_to_json(const DatasetManifest& m) -> nlohmann::json {
    nlohmann::json j;
    j["version"] = "GSD1";
    j["counts"] = {{"locations", m.locations},
                   {"timestamps", m.timestamps},
                   {"records", m.records()},
                   {"classes", m.classes},
                   {"regions", m.regions}};
    j["shape"] = {{"channels", m.channels},
                  {"height", m.height},
                  {"width", m.width}};
    j["generator"] = {{"seed", m.seed},
                      {"noise_sigma", m.noise_sigma},
                      {"length_scale_km", m.length_scale_km}};
    j["class_names"] = m.class_names;
    j["percentiles"] = m.percentiles;
    j["lon"] = m.lon;
    j["lat"] = m.lat;
    j["timestamp_index"] = m.timestamp_index;
    j["label"] = m.label;
    j["region"] = m.region;
    j["split"] = {{"random",
                   {{"train", m.random_split.train},
                    {"test", m.random_split.test}}},
                  {"blocked",
                   {{"train", m.blocked_split.train},
                    {"test", m.blocked_split.test}}}};
    return j;
}

auto manifest_from_json(const nlohmann::json& j) -> DatasetManifest {
    if (j.at("version").get<std::string>() != "GSD1") {
        throw std::runtime_error("manifest: unsupported version");
    }
    DatasetManifest m;
    const auto& counts = j.at("counts");
    m.locations = counts.at("locations").get<std::size_t>();
    m.timestamps = counts.at("timestamps").get<std::size_t>();
    m.classes = counts.at("classes").get<std::size_t>();
    m.regions = counts.at("regions").get<std::size_t>();
    const auto& shape = j.at("shape");
    m.channels = shape.at("channels").get<std::size_t>();
    m.height = shape.at("height").get<std::size_t>();
    m.width = shape.at("width").get<std::size_t>();
    const auto& gen = j.at("generator");
    m.seed = gen.at("seed").get<std::uint64_t>();
    m.noise_sigma = gen.at("noise_sigma").get<double>();
    m.length_scale_km = gen.at("length_scale_km").get<double>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.percentiles = j.at("percentiles").get<std::vector<double>>();
    m.lon = j.at("lon").get<std::vector<double>>();
    m.lat = j.at("lat").get<std::vector<double>>();
    m.timestamp_index =
        j.at("timestamp_index").get<std::vector<std::size_t>>();
    m.label = j.at("label").get<std::vector<std::size_t>>();
    m.region = j.at("region").get<std::vector<std::size_t>>();
    const auto& split = j.at("split");
    m.random_split.train =
        split.at("random").at("train").get<std::vector<std::size_t>>();
    m.random_split.test =
        split.at("random").at("test").get<std::vector<std::size_t>>();
    m.blocked_split.train =
        split.at("blocked").at("train").get<std::vector<std::size_t>>();
    m.blocked_split.test =
        split.at("blocked").at("test").get<std::vector<std::size_t>>();

    const std::size_t records = m.records();
    if (counts.at("records").get<std::size_t>() != records
        || m.lon.size() != records || m.lat.size() != records
        || m.timestamp_index.size() != records || m.label.size() != records
        || m.region.size() != records || m.class_names.size() != m.classes
        || m.percentiles.size() != m.channels) {
        throw std::runtime_error("manifest: inconsistent array sizes");
    }
    return m;
}

}  // namespace

void SynthConfig::validate() const {
    if (locations == 0 || channels == 0 || height == 0 || width == 0
        || classes == 0 || regions == 0 || timestamps == 0) {
        throw std::invalid_argument("SynthConfig: all counts must be positive");
    }
    if (classes > regions) {
        throw std::invalid_argument(
            "SynthConfig: classes must not exceed regions (the region to "
            "class map must be surjective)");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw std::invalid_argument("SynthConfig: noise_sigma must be >= 0");
    }
    if (!(length_scale_km > 0.0) || !std::isfinite(length_scale_km)) {
        throw std::invalid_argument("SynthConfig: length_scale_km must be > 0");
    }
}

auto unit_vector(const GeoCoordinate& loc) -> std::array<double, 3> {
    return {std::cos(loc.lat) * std::cos(loc.lon),
            std::cos(loc.lat) * std::sin(loc.lon), std::sin(loc.lat)};
}

auto sample_locations(std::size_t n, std::uint64_t seed)
    -> std::vector<GeoCoordinate> {
    if (n == 0) {
        throw std::invalid_argument("sample_locations: n must be >= 1");
    }
    Rng rng(mix_seed(seed));
    std::vector<GeoCoordinate> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lon = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double lat = std::asin(rng.uniform(-1.0, 1.0));
        out.push_back(GeoCoordinate{lon, lat});
    }
    return out;
}

auto make_region_model(const SynthConfig& cfg) -> RegionModel {
    cfg.validate();
    return make_region_model_seeded(cfg, cfg.seed);
}

auto region_of(const RegionModel& model, const GeoCoordinate& loc)
    -> std::size_t {
    if (model.sites.empty()) {
        throw std::invalid_argument("region_of: empty region model");
    }
    const std::array<double, 3> x = unit_vector(loc);
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t r = 0; r < model.sites.size(); ++r) {
        const auto& s = model.sites[r];
        const double d = s[0] * x[0] + s[1] * x[1] + s[2] * x[2];
        if (d > best_dot) {
            best_dot = d;
            best = r;
        }
    }
    return best;
}

auto render_patch(const GeoCoordinate& loc, std::size_t t,
                  const SynthConfig& cfg, std::uint64_t seed) -> Patch {
    cfg.validate();
    if (t >= cfg.timestamps) {
        throw std::invalid_argument("render_patch: timestamp out of range");
    }
    const SynthModel model = make_synth_model(cfg, seed);
    return render_with_model(model, cfg, loc, t, seed);
}

auto generate(const SynthConfig& cfg, const std::filesystem::path& out_dir)
    -> DatasetManifest {
    cfg.validate();
    const SynthModel model = make_synth_model(cfg, cfg.seed);
    const std::vector<GeoCoordinate> locs =
        sample_locations(cfg.locations, derive_seed(cfg.seed, kTagLocations));

    DatasetManifest m;
    m.locations = cfg.locations;
    m.timestamps = cfg.timestamps;
    m.channels = cfg.channels;
    m.height = cfg.height;
    m.width = cfg.width;
    m.classes = cfg.classes;
    m.regions = cfg.regions;
    m.seed = cfg.seed;
    m.noise_sigma = cfg.noise_sigma;
    m.length_scale_km = cfg.length_scale_km;
    for (std::size_t c = 0; c < cfg.classes; ++c) {
        m.class_names.push_back("class_" + std::to_string(c));
    }

    std::vector<std::size_t> loc_region(cfg.locations);
    std::vector<std::size_t> loc_label(cfg.locations);
    for (std::size_t i = 0; i < cfg.locations; ++i) {
        loc_region[i] = region_of(model.regions, locs[i]);
        loc_label[i] = model.regions.region_class[loc_region[i]];
    }

    const std::size_t records = m.records();
    const std::size_t plane = cfg.height * cfg.width;
    const std::size_t patch_values = cfg.channels * plane;
    std::vector<float> store(records * patch_values);
    m.lon.resize(records);
    m.lat.resize(records);
    m.timestamp_index.resize(records);
    m.label.resize(records);
    m.region.resize(records);
    for (std::size_t i = 0; i < cfg.locations; ++i) {
        for (std::size_t t = 0; t < cfg.timestamps; ++t) {
            const std::size_t rec = i * cfg.timestamps + t;
            m.lon[rec] = locs[i].lon;
            m.lat[rec] = locs[i].lat;
            m.timestamp_index[rec] = t;
            m.label[rec] = loc_label[i];
            m.region[rec] = loc_region[i];
            const Patch patch =
                render_with_model(model, cfg, locs[i], t, cfg.seed);
            float* dst = store.data() + rec * patch_values;
            for (std::size_t v = 0; v < patch_values; ++v) {
                dst[v] = static_cast<float>(patch.data[v]);
            }
        }
    }

    for (std::size_t c = 0; c < cfg.channels; ++c) {
        m.percentiles.push_back(
            channel_percentile(store, records, cfg.channels, plane, c));
    }

    // Random split, stratified by class, whole locations per side.
    {
        Rng rng(derive_seed(cfg.seed, kTagSplitRandom));
        std::vector<std::size_t> train_locs;
        std::vector<std::size_t> test_locs;
        for (std::size_t c = 0; c < cfg.classes; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < cfg.locations; ++i) {
                if (loc_label[i] == c) members.push_back(i);
            }
            if (members.size() < 2) {
                throw std::runtime_error(
                    "generate: class " + std::to_string(c)
                    + " has fewer than two locations; cannot stratify");
            }
            rng.shuffle(members);
            const std::size_t n_test =
                std::max<std::size_t>(1, members.size() / 5);
            test_locs.insert(test_locs.end(), members.begin(),
                             members.begin() + static_cast<long>(n_test));
            train_locs.insert(train_locs.end(),
                              members.begin() + static_cast<long>(n_test),
                              members.end());
        }
        m.random_split.train = expand_to_records(train_locs, cfg.timestamps);
        m.random_split.test = expand_to_records(test_locs, cfg.timestamps);
    }

    // Blocked split: whole regions go to one side, zero region overlap.
    {
        Rng rng(derive_seed(cfg.seed, kTagSplitBlocked));
        std::vector<std::size_t> region_ids(cfg.regions);
        for (std::size_t r = 0; r < cfg.regions; ++r) region_ids[r] = r;
        rng.shuffle(region_ids);
        std::vector<std::size_t> region_size(cfg.regions, 0);
        for (const std::size_t r : loc_region) ++region_size[r];

        std::vector<bool> in_test(cfg.regions, false);
        std::size_t test_count = 0;
        std::size_t taken = 0;
        for (const std::size_t r : region_ids) {
            if (test_count >= cfg.locations / 5 || taken + 1 >= cfg.regions) {
                break;
            }
            in_test[r] = true;
            test_count += region_size[r];
            ++taken;
        }
        std::vector<std::size_t> train_locs;
        std::vector<std::size_t> test_locs;
        for (std::size_t i = 0; i < cfg.locations; ++i) {
            (in_test[loc_region[i]] ? test_locs : train_locs).push_back(i);
        }
        if (train_locs.empty() || test_locs.empty()) {
            throw std::runtime_error(
                "generate: blocked split produced an empty side");
        }
        m.blocked_split.train = expand_to_records(train_locs, cfg.timestamps);
        m.blocked_split.test = expand_to_records(test_locs, cfg.timestamps);
    }

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream bin(out_dir / "patches.bin",
                          std::ios::binary | std::ios::trunc);
        if (!bin) {
            throw std::runtime_error("generate: cannot open patches.bin");
        }
        bin.write(reinterpret_cast<const char*>(store.data()),
                  static_cast<std::streamsize>(store.size() * sizeof(float)));
        if (!bin) throw std::runtime_error("generate: write failed");
    }
    {
        std::ofstream json_out(out_dir / "manifest.json", std::ios::trunc);
        if (!json_out) {
            throw std::runtime_error("generate: cannot open manifest.json");
        }
        json_out << manifest_to_json(m).dump(2) << "\n";
        if (!json_out) throw std::runtime_error("generate: write failed");
    }
    return m;
}

auto load_manifest(const std::filesystem::path& dataset_dir)
    -> DatasetManifest {
    std::ifstream in(dataset_dir / "manifest.json");
    if (!in) {
        throw std::runtime_error("load_manifest: cannot open "
                                 + (dataset_dir / "manifest.json").string());
    }
    nlohmann::json j;
    in >> j;
    return manifest_from_json(j);
}

auto load_dataset(const std::filesystem::path& dataset_dir) -> Dataset {
    Dataset ds;
    ds.manifest = load_manifest(dataset_dir);
    const std::size_t expected =
        ds.manifest.records() * ds.manifest.channels * ds.manifest.height
        * ds.manifest.width;

    std::ifstream bin(dataset_dir / "patches.bin", std::ios::binary);
    if (!bin) {
        throw std::runtime_error("load_dataset: cannot open patches.bin");
    }
    bin.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(bin.tellg());
    if (bytes != expected * sizeof(float)) {
        throw std::runtime_error("load_dataset: patch store size does not "
                                 "match the manifest");
    }
    bin.seekg(0, std::ios::beg);
    ds.store.resize(expected);
    bin.read(reinterpret_cast<char*>(ds.store.data()),
             static_cast<std::streamsize>(bytes));
    if (!bin) throw std::runtime_error("load_dataset: read failed");
    return ds;
}

auto Dataset::patch(std::size_t record) const -> Patch {
    if (record >= manifest.records()) {
        throw std::out_of_range("Dataset::patch: record out of range");
    }
    const std::size_t patch_values =
        manifest.channels * manifest.height * manifest.width;
    Patch out(manifest.channels, manifest.height, manifest.width);
    const float* src = store.data() + record * patch_values;
    for (std::size_t i = 0; i < patch_values; ++i) {
        out.data[i] = static_cast<double>(src[i]);
    }
    return out;
}

auto Dataset::location(std::size_t record) const -> GeoCoordinate {
    if (record >= manifest.records()) {
        throw std::out_of_range("Dataset::location: record out of range");
    }
    return GeoCoordinate{manifest.lon[record], manifest.lat[record]};
}

}  // namespace geossl
