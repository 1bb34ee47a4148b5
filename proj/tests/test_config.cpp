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

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "geossl/augment.hpp"
#include "geossl/config.hpp"

using namespace geossl;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::exception& e) { return e.what(); }

template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return message_of(e);
    }
    FAIL("expected an exception");
    return {};
}

fs::path scratch_file(const std::string& name, const std::string& body) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("config text round-trips through the parser") {
    AppConfig base;
    base.dataset_dir = "data/run1";
    base.synth.locations = 512;
    base.synth.noise_sigma = 3.25;
    base.run.loss.alpha = 0.48;
    base.run.loss.d_max = 2500.0;
    base.run.batch_size = 32;
    base.run.temporal_views = true;
    base.eval.protocol = "all";
    base.ablation.axis = "cardinality";
    base.augmentation = "standard";

    const std::string text = app_config_to_text(base);
    const AppConfig parsed = parse_app_config(text);
    CHECK(app_config_to_text(parsed) == text);
    CHECK(parsed.dataset_dir == "data/run1");
    CHECK(parsed.synth.locations == 512);
    CHECK(parsed.synth.noise_sigma == 3.25);
    CHECK(parsed.run.loss.alpha == 0.48);
    CHECK(parsed.run.batch_size == 32);
    CHECK(parsed.run.temporal_views);
    CHECK(parsed.eval.protocol == "all");
    CHECK(parsed.ablation.axis == "cardinality");
    CHECK(parsed.augmentation == "standard");
}

TEST_CASE("config parser reads sections, comments, and spacing") {
    const std::string text =
        "# top comment\n"
        "[loss]\n"
        "ssl_kind = consistency\n"
        "geo_kind=rank\n"
        "  alpha =  0.3  \n"
        "; another comment\n"
        "\n"
        "[train]\n"
        "epochs = 7\n"
        "temporal_views = on\n";
    const AppConfig cfg = parse_app_config(text);
    CHECK(cfg.run.loss.ssl_kind == SslKind::consistency);
    CHECK(cfg.run.loss.geo_kind == GeoKind::rank);
    CHECK(cfg.run.loss.alpha == 0.3);
    CHECK(cfg.run.epochs == 7);
    CHECK(cfg.run.temporal_views);
}

TEST_CASE("config parser diagnostics name the line and key") {
    const std::string unknown_key = thrown_message(
        [] { parse_app_config("[train]\nbatch_sise = 4\n"); });
    CHECK(unknown_key.find("config line 2") != std::string::npos);
    CHECK(unknown_key.find("batch_sise") != std::string::npos);
    CHECK(unknown_key.find("[train]") != std::string::npos);

    const std::string unknown_section = thrown_message(
        [] { parse_app_config("[training]\nepochs = 2\n"); });
    CHECK(unknown_section.find("config line 1") != std::string::npos);
    CHECK(unknown_section.find("training") != std::string::npos);

    const std::string no_section = thrown_message(
        [] { parse_app_config("epochs = 2\n"); });
    CHECK(no_section.find("before any [section]") != std::string::npos);

    const std::string no_equals = thrown_message(
        [] { parse_app_config("[train]\nepochs\n"); });
    CHECK(no_equals.find("key = value") != std::string::npos);

    const std::string bad_header = thrown_message(
        [] { parse_app_config("[train\nepochs = 2\n"); });
    CHECK(bad_header.find("malformed section header") != std::string::npos);

    const std::string empty_key = thrown_message(
        [] { parse_app_config("[train]\n = 2\n"); });
    CHECK(empty_key.find("empty key") != std::string::npos);
}

TEST_CASE("config value errors carry the line prefix") {
    const std::string bad_number = thrown_message(
        [] { parse_app_config("[loss]\nalpha = fast\n"); });
    CHECK(bad_number.find("config line 2") != std::string::npos);
    CHECK(bad_number.find("alpha") != std::string::npos);
    CHECK(bad_number.find("fast") != std::string::npos);

    const std::string bad_bool = thrown_message(
        [] { parse_app_config("[train]\ntemporal_views = true\n"); });
    CHECK(bad_bool.find("expected on or off") != std::string::npos);

    const std::string bad_kind = thrown_message(
        [] { parse_app_config("[loss]\nssl_kind = triplet\n"); });
    CHECK(bad_kind.find("config line 2") != std::string::npos);
}

TEST_CASE("load_app_config reads files and rejects missing ones") {
    const fs::path path = scratch_file("geossl_cfg_load.ini",
                                       "[train]\nseed = 99\n");
    const AppConfig cfg = load_app_config(path.string());
    CHECK(cfg.run.seed == 99);
    fs::remove(path);
    CHECK_THROWS_AS(static_cast<void>(load_app_config(path.string())),
                    std::runtime_error);
}

TEST_CASE("validate_app_config checks every section") {
    AppConfig good;
    CHECK_NOTHROW(validate_app_config(good));

    AppConfig bad_alpha;
    bad_alpha.run.loss.alpha = 1.5;
    CHECK_THROWS_AS(validate_app_config(bad_alpha), std::invalid_argument);

    AppConfig bad_eval_k;
    bad_eval_k.eval.k = 0;
    CHECK_THROWS_AS(validate_app_config(bad_eval_k), std::invalid_argument);

    AppConfig bad_split;
    bad_split.eval.split = "temporal";
    CHECK_THROWS_AS(validate_app_config(bad_split), std::invalid_argument);

    AppConfig bad_protocol;
    bad_protocol.eval.protocol = "probe";
    CHECK_THROWS_AS(validate_app_config(bad_protocol), std::invalid_argument);

    AppConfig bad_axis;
    bad_axis.ablation.axis = "bogus";
    CHECK_THROWS_AS(validate_app_config(bad_axis), std::invalid_argument);

    AppConfig bad_seeds;
    bad_seeds.ablation.seeds = 0;
    CHECK_THROWS_AS(validate_app_config(bad_seeds), std::invalid_argument);

    AppConfig bad_synth;
    bad_synth.synth.classes = 0;
    CHECK_THROWS_AS(validate_app_config(bad_synth), std::invalid_argument);
}

TEST_CASE("resolve_pipeline maps presets and files") {
    const AugPipeline geo16 = geometric_pipeline(16, 16);
    CHECK(pipeline_to_text(resolve_pipeline("default", 16)) == pipeline_to_text(geo16));
    CHECK(pipeline_to_text(resolve_pipeline("geometric", 16)) == pipeline_to_text(geo16));
    CHECK(pipeline_to_text(resolve_pipeline("", 16)) == pipeline_to_text(geo16));
    CHECK(pipeline_to_text(resolve_pipeline("standard", 16))
          == pipeline_to_text(standard_pipeline(16, 16)));
    CHECK(pipeline_to_text(resolve_pipeline("default", 8))
          == pipeline_to_text(geometric_pipeline(8, 8)));

    const fs::path path = scratch_file("geossl_cfg_pipe.txt", pipeline_to_text(geo16));
    CHECK(pipeline_to_text(resolve_pipeline(path.string(), 32))
          == pipeline_to_text(geo16));
    fs::remove(path);
    CHECK_THROWS_AS(static_cast<void>(resolve_pipeline(path.string(), 16)),
                    std::runtime_error);
}
