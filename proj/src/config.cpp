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

#include "geossl/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "geossl/textio.hpp"

namespace geossl {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool parse_on_off(std::string_view value, const char* what) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw std::invalid_argument(std::string(what) + ": expected on or off, got '"
                                + std::string(value) + "'");
}

// Returns false when the key does not belong to the section; value
// errors throw.
bool apply_dataset(AppConfig& cfg, std::string_view key, std::string_view value) {
    if (key == "dir") {
        cfg.dataset_dir = std::string(value);
    } else if (key == "locations") {
        cfg.synth.locations = parse_size(value, "locations");
    } else if (key == "channels") {
        cfg.synth.channels = parse_size(value, "channels");
    } else if (key == "height") {
        cfg.synth.height = parse_size(value, "height");
    } else if (key == "width") {
        cfg.synth.width = parse_size(value, "width");
    } else if (key == "classes") {
        cfg.synth.classes = parse_size(value, "classes");
    } else if (key == "regions") {
        cfg.synth.regions = parse_size(value, "regions");
    } else if (key == "timestamps") {
        cfg.synth.timestamps = parse_size(value, "timestamps");
    } else if (key == "noise_sigma") {
        cfg.synth.noise_sigma = parse_double(value, "noise_sigma");
    } else if (key == "length_scale_km") {
        cfg.synth.length_scale_km = parse_double(value, "length_scale_km");
    } else if (key == "seed") {
        cfg.synth.seed = parse_size(value, "seed");
    } else {
        return false;
    }
    return true;
}

bool apply_loss(AppConfig& cfg, std::string_view key, std::string_view value) {
    LossConfig& loss = cfg.run.loss;
    if (key == "ssl_kind") {
        loss.ssl_kind = parse_ssl_kind(std::string(value));
    } else if (key == "geo_kind") {
        loss.geo_kind = parse_geo_kind(std::string(value));
    } else if (key == "geo_basic_normalization") {
        loss.geo_basic_normalization = parse_geo_basic_normalization(std::string(value));
    } else if (key == "alpha") {
        loss.alpha = parse_double(value, "alpha");
    } else if (key == "d_max") {
        loss.d_max = parse_double(value, "d_max");
    } else if (key == "tau") {
        loss.tau = parse_double(value, "tau");
    } else if (key == "epsilon") {
        loss.epsilon = parse_double(value, "epsilon");
    } else if (key == "rank_active_pair_normalizer") {
        loss.rank_active_pair_normalizer = parse_on_off(value, "rank_active_pair_normalizer");
    } else {
        return false;
    }
    return true;
}

bool apply_train(AppConfig& cfg, std::string_view key, std::string_view value) {
    RunConfig& run = cfg.run;
    if (key == "batch_size") {
        run.batch_size = parse_size(value, "batch_size");
    } else if (key == "epochs") {
        run.epochs = parse_size(value, "epochs");
    } else if (key == "learning_rate") {
        run.learning_rate = parse_double(value, "learning_rate");
    } else if (key == "optimizer_momentum") {
        run.optimizer_momentum = parse_double(value, "optimizer_momentum");
    } else if (key == "queue_capacity") {
        run.queue_capacity = parse_size(value, "queue_capacity");
    } else if (key == "temporal_views") {
        run.temporal_views = parse_on_off(value, "temporal_views");
    } else if (key == "subset_size") {
        run.subset_size = parse_size(value, "subset_size");
    } else if (key == "crop_size") {
        run.crop_size = parse_size(value, "crop_size");
    } else if (key == "seed") {
        run.seed = parse_size(value, "seed");
    } else if (key == "hidden_dim") {
        run.hidden_dim = parse_size(value, "hidden_dim");
    } else if (key == "feature_dim") {
        run.feature_dim = parse_size(value, "feature_dim");
    } else if (key == "projection_dim") {
        run.projection_dim = parse_size(value, "projection_dim");
    } else if (key == "augmentation") {
        cfg.augmentation = std::string(value);
    } else {
        return false;
    }
    return true;
}

bool apply_eval(AppConfig& cfg, std::string_view key, std::string_view value) {
    EvalConfig& ev = cfg.eval;
    if (key == "k") {
        ev.k = parse_size(value, "k");
    } else if (key == "sharpening") {
        ev.sharpening = parse_double(value, "sharpening");
    } else if (key == "probe_epochs") {
        ev.probe_epochs = parse_size(value, "probe_epochs");
    } else if (key == "split") {
        ev.split = std::string(value);
    } else if (key == "protocol") {
        ev.protocol = std::string(value);
    } else {
        return false;
    }
    return true;
}

bool apply_ablation(AppConfig& cfg, std::string_view key, std::string_view value) {
    AblationConfig& ab = cfg.ablation;
    if (key == "axis") {
        ab.axis = std::string(value);
    } else if (key == "seeds") {
        ab.seeds = parse_size(value, "seeds");
    } else {
        return false;
    }
    return true;
}

}  // namespace

AppConfig parse_app_config(const std::string& text) {
    AppConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    std::stringstream ss(text);
    std::string raw;
    while (std::getline(ss, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw std::invalid_argument(where + "malformed section header '"
                                            + std::string(line) + "'");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "dataset" && section != "loss" && section != "train"
                && section != "eval" && section != "ablation") {
                throw std::invalid_argument(where + "unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument(where + "expected key = value, got '"
                                        + std::string(line) + "'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw std::invalid_argument(where + "empty key");
        }
        if (section.empty()) {
            throw std::invalid_argument(where + "key '" + key
                                        + "' appears before any [section]");
        }
        bool known = false;
        try {
            if (section == "dataset") {
                known = apply_dataset(cfg, key, value);
            } else if (section == "loss") {
                known = apply_loss(cfg, key, value);
            } else if (section == "train") {
                known = apply_train(cfg, key, value);
            } else if (section == "eval") {
                known = apply_eval(cfg, key, value);
            } else {
                known = apply_ablation(cfg, key, value);
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
        if (!known) {
            throw std::invalid_argument(where + "unknown key '" + key
                                        + "' in section [" + section + "]");
        }
    }
    return cfg;
}

AppConfig load_app_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) {
        throw std::runtime_error("config: cannot read '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_app_config(buf.str());
}

std::string app_config_to_text(const AppConfig& cfg) {
    std::string out;
    out += "[dataset]\n";
    out += "dir = " + cfg.dataset_dir + "\n";
    out += "locations = " + std::to_string(cfg.synth.locations) + "\n";
    out += "channels = " + std::to_string(cfg.synth.channels) + "\n";
    out += "height = " + std::to_string(cfg.synth.height) + "\n";
    out += "width = " + std::to_string(cfg.synth.width) + "\n";
    out += "classes = " + std::to_string(cfg.synth.classes) + "\n";
    out += "regions = " + std::to_string(cfg.synth.regions) + "\n";
    out += "timestamps = " + std::to_string(cfg.synth.timestamps) + "\n";
    out += "noise_sigma = " + format_double(cfg.synth.noise_sigma) + "\n";
    out += "length_scale_km = " + format_double(cfg.synth.length_scale_km) + "\n";
    out += "seed = " + std::to_string(cfg.synth.seed) + "\n";
    out += "\n[loss]\n";
    out += "ssl_kind = " + to_string(cfg.run.loss.ssl_kind) + "\n";
    out += "geo_kind = " + to_string(cfg.run.loss.geo_kind) + "\n";
    out += "alpha = " + format_double(cfg.run.loss.alpha) + "\n";
    out += "d_max = " + format_double(cfg.run.loss.d_max) + "\n";
    out += "tau = " + format_double(cfg.run.loss.tau) + "\n";
    out += "epsilon = " + format_double(cfg.run.loss.epsilon) + "\n";
    out += "geo_basic_normalization = " + to_string(cfg.run.loss.geo_basic_normalization) + "\n";
    out += "rank_active_pair_normalizer = "
           + std::string(cfg.run.loss.rank_active_pair_normalizer ? "on" : "off") + "\n";
    out += "\n[train]\n";
    out += "batch_size = " + std::to_string(cfg.run.batch_size) + "\n";
    out += "epochs = " + std::to_string(cfg.run.epochs) + "\n";
    out += "learning_rate = " + format_double(cfg.run.learning_rate) + "\n";
    out += "optimizer_momentum = " + format_double(cfg.run.optimizer_momentum) + "\n";
    out += "queue_capacity = " + std::to_string(cfg.run.queue_capacity) + "\n";
    out += "temporal_views = " + std::string(cfg.run.temporal_views ? "on" : "off") + "\n";
    out += "subset_size = " + std::to_string(cfg.run.subset_size) + "\n";
    out += "crop_size = " + std::to_string(cfg.run.crop_size) + "\n";
    out += "seed = " + std::to_string(cfg.run.seed) + "\n";
    out += "hidden_dim = " + std::to_string(cfg.run.hidden_dim) + "\n";
    out += "feature_dim = " + std::to_string(cfg.run.feature_dim) + "\n";
    out += "projection_dim = " + std::to_string(cfg.run.projection_dim) + "\n";
    out += "augmentation = " + cfg.augmentation + "\n";
    out += "\n[eval]\n";
    out += "k = " + std::to_string(cfg.eval.k) + "\n";
    out += "sharpening = " + format_double(cfg.eval.sharpening) + "\n";
    out += "probe_epochs = " + std::to_string(cfg.eval.probe_epochs) + "\n";
    out += "split = " + cfg.eval.split + "\n";
    out += "protocol = " + cfg.eval.protocol + "\n";
    out += "\n[ablation]\n";
    out += "axis = " + cfg.ablation.axis + "\n";
    out += "seeds = " + std::to_string(cfg.ablation.seeds) + "\n";
    return out;
}

void validate_app_config(const AppConfig& cfg) {
    cfg.synth.validate();
    // The dataset directory is command-specific; range-check the run
    // settings with a placeholder so everything else is caught now.
    RunConfig run = cfg.run;
    if (run.dataset_dir.empty()) run.dataset_dir = cfg.dataset_dir;
    if (run.dataset_dir.empty()) run.dataset_dir = "-";
    run.validate();
    if (cfg.eval.k == 0) throw std::invalid_argument("eval: k must be positive");
    if (!(cfg.eval.sharpening > 0.0)) {
        throw std::invalid_argument("eval: sharpening must be positive");
    }
    if (cfg.eval.split != "random" && cfg.eval.split != "blocked") {
        throw std::invalid_argument("eval: split must be random or blocked, got '"
                                    + cfg.eval.split + "'");
    }
    if (cfg.eval.protocol != "knn" && cfg.eval.protocol != "linear"
        && cfg.eval.protocol != "spearman" && cfg.eval.protocol != "all") {
        throw std::invalid_argument(
            "eval: protocol must be knn, linear, spearman, or all, got '"
            + cfg.eval.protocol + "'");
    }
    static_cast<void>(parse_ablation_axis(cfg.ablation.axis));
    if (cfg.ablation.seeds == 0) {
        throw std::invalid_argument("ablation: seeds must be positive");
    }
}

AugPipeline resolve_pipeline(const std::string& spec, std::size_t crop_size) {
    if (spec.empty() || spec == "default" || spec == "geometric") {
        return geometric_pipeline(crop_size, crop_size);
    }
    if (spec == "standard") return standard_pipeline(crop_size, crop_size);
    std::ifstream in(spec);
    if (!in.good()) {
        throw std::runtime_error("augmentation: cannot read pipeline file '" + spec + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_pipeline(buf.str());
}

}  // namespace geossl
