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
#include <string>

#include "geossl/harness.hpp"
#include "geossl/synthdata.hpp"

namespace geossl {

// Evaluation settings, section [eval].
struct EvalConfig {
    std::size_t k = 10;
    double sharpening = 0.9;
    std::size_t probe_epochs = 100;
    std::string split = "random";  // random | blocked
    std::string protocol = "knn";  // knn | linear | spearman | all
};

// Sweep settings, section [ablation].
struct AblationConfig {
    std::string axis = "temporal";
    std::size_t seeds = 5;
};

// Full tool configuration. INI sections: [dataset] fills `synth` plus
// the dataset directory, [loss] and [train] fill `run`, [eval] and
// [ablation] their structs. The `augmentation` key stays symbolic
// ("default", "standard", or a pipeline file path) until a command
// resolves it against the crop size.
struct AppConfig {
    std::string dataset_dir;
    SynthConfig synth;
    RunConfig run;
    EvalConfig eval;
    AblationConfig ablation;
    std::string augmentation = "default";
};

// Strict INI parser: # and ; comments, [section] headers, key = value
// lines. Unknown sections or keys, malformed lines, and unparseable
// values all throw std::invalid_argument naming the line and key.
AppConfig parse_app_config(const std::string& text);
AppConfig load_app_config(const std::string& path);

// Serializes every key with its current value; parse round-trips it.
// Doubles as the effective-config artifact and the --help key listing.
std::string app_config_to_text(const AppConfig& cfg);

// Validates the eval/ablation strings and every nested struct. Call
// after flag overrides, before any work starts.
void validate_app_config(const AppConfig& cfg);

// Turns the symbolic augmentation setting into a pipeline: "default" or
// "geometric" pick the geometric preset, "standard" the photometric
// preset, anything else is read as a pipeline description file.
AugPipeline resolve_pipeline(const std::string& spec, std::size_t crop_size);

}  // namespace geossl
