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
#include <optional>
#include <string>
#include <vector>

#include "geossl/augment.hpp"
#include "geossl/losses.hpp"
#include "geossl/model.hpp"
#include "geossl/synthdata.hpp"

namespace geossl {

// Everything one pretraining run needs. The geography-aware objectives
// and the momentum pipeline read their knobs from `loss`; the rest
// controls data flow and optimization.
struct RunConfig {
    std::string dataset_dir;
    LossConfig loss;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    double learning_rate = 0.05;
    double optimizer_momentum = 0.9;
    std::size_t queue_capacity = 1024;
    bool temporal_views = false;
    // Number of training locations to keep, 0 = all. Evaluation always
    // sees the full splits; the subset only shrinks the pretraining pool.
    std::size_t subset_size = 0;
    std::size_t crop_size = 16;  // augmented view edge in pixels
    std::uint64_t seed = 0;
    std::size_t hidden_dim = 64;
    std::size_t feature_dim = 48;
    std::size_t projection_dim = 32;
    // Empty means the geometric default pipeline sized to crop_size.
    AugPipeline augmentation;

    // Rejects values the run could not serve: rank regularization needs
    // batches of three or more, the queue must hold at least one batch,
    // and a disabled geography term requires alpha == 1.
    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss_ssl = 0.0;
    double loss_reg = 0.0;
    double loss_total = 0.0;
};

// Per-epoch mean losses plus end-of-run evaluation on the random split.
struct RunReport {
    std::vector<EpochStats> epochs;
    double knn_acc_macro = 0.0;
    double linear_acc_macro = 0.0;
    // Empty when no anchor has two neighbours within d_max.
    std::optional<double> spearman_geo;
    double wallclock_s = 0.0;
};

struct RunResult {
    Encoder encoder;  // online weights after the last step
    Encoder target;   // momentum twin, kept so checkpoints resume exactly
    RunReport report;
};

// Momentum-contrast pretraining: each step samples a batch, builds two
// augmented views per item (or two timestamps of the same location when
// temporal_views is set), encodes them with the online and momentum
// encoders, applies the configured loss, and updates weights, momentum
// ramp, and the negatives queue. Deterministic per (config, seed).
// Throws std::runtime_error when a loss turns non-finite, with the
// epoch and step in the message.
RunResult pretrain(const RunConfig& cfg);
RunResult pretrain(const RunConfig& cfg, const Dataset& dataset);

// Frozen-encoder features for the listed records: percentile scaling,
// bilinear resize to the encoder's input edge, unit-norm rows.
DenseArray embed_records(const Encoder& enc, const Dataset& dataset,
                         const std::vector<std::size_t>& records);

// Weighted nearest-neighbour classification on cosine similarity. Each
// of the k closest training embeddings votes exp(sim / sharpening) for
// its class; ties in the final scores go to the lowest class id.
// Returns macro accuracy over the classes present in the test split.
// `split` defaults to the dataset's random split.
double knn_evaluate(const Encoder& enc, const Dataset& dataset,
                    std::size_t k = 10, double sharpening = 0.9,
                    const SplitIndices* split = nullptr);

// Multinomial logistic head on frozen features, full-batch SGD with
// momentum for `epochs` iterations. Weights start at zero, so with zero
// epochs every logit ties and argmax falls back to class 0, which lands
// at chance level for balanced data. Returns macro accuracy on test.
double linear_probe(const Encoder& enc, const Dataset& dataset,
                    std::size_t epochs, const SplitIndices* split = nullptr,
                    double lr = 0.5, double momentum = 0.9);

// Mean over anchors of the Spearman correlation between geodesic and
// embedding-distance ranks, restricted to neighbours within d_max km of
// the anchor. Anchors and neighbours come from the test side of the
// split (random split by default). Anchors with fewer than two
// neighbours, or with constant distances on either side, contribute
// nothing; when no anchor contributes the result is empty rather than
// zero.
std::optional<double> spearman_alignment(const Encoder& enc,
                                         const Dataset& dataset, double d_max,
                                         const SplitIndices* split = nullptr);

// Writes features for every record as little-endian float32 rows of
// shape [records, feature_dim] to <out_dir>/embeddings.bin, plus a JSON
// sidecar describing shape, dtype, and the source dataset.
void export_embeddings(const Encoder& enc, const Dataset& dataset,
                       const std::string& out_dir);

// Online + momentum weights in one checkpoint file; load rebuilds both
// encoders bit-exactly.
void save_checkpoint(const std::string& path, const Encoder& online,
                     const Encoder& target);
std::pair<Encoder, Encoder> load_checkpoint(const std::string& path);

enum class AblationAxis { augmentation, cardinality, temporal, patch_size, alpha_dmax };

AblationAxis parse_ablation_axis(const std::string& s);
std::string to_string(AblationAxis axis);

// One grid point: a label for the report plus the full config to run.
struct AblationPoint {
    std::string name;
    RunConfig cfg;
};

// Built-in sweep for an axis, derived from a base config. The
// cardinality axis reads the dataset manifest to size its subsets; the
// temporal axis keeps the total image count fixed by flattening
// timestamps into independent items when views are single-frame.
std::vector<AblationPoint> default_grid(AblationAxis axis,
                                        const RunConfig& base);

// Fixed CSV schema shared by run reports and ablation sweeps.
inline constexpr const char* kCsvHeader =
    "run_id,axis,grid_point,seed,ssl_kind,geo_kind,alpha,d_max,epoch,"
    "loss_ssl,loss_reg,loss_total,knn_acc_macro,linear_acc_macro,"
    "spearman_geo,wallclock_s";

// Stable identifier for one run: hash of the config fingerprint, the
// axis, the grid point, and the seed.
std::string run_digest(const RunConfig& cfg, const std::string& axis,
                       const std::string& grid_point, std::uint64_t seed);

// Every config field as `key=value` lines in a fixed order. Feeds run
// digests and the effective-config artifact.
std::string config_fingerprint(const RunConfig& cfg);

// CSV for a single finished run: one row per epoch with the loss
// columns filled, then a summary row carrying the evaluation metrics.
std::string report_to_csv(const RunConfig& cfg, const RunReport& report,
                          const std::string& axis,
                          const std::string& grid_point);

// Runs every grid point with `seeds` consecutive seeds starting at each
// point's base seed. Returns CSV: one row per (point, seed) plus mean
// and std rows per point. threads > 1 runs the (point, seed) cells
// concurrently; results are position-stable so the CSV is identical
// either way.
std::string run_ablation(AblationAxis axis,
                         const std::vector<AblationPoint>& grid,
                         std::size_t seeds = 5, std::size_t threads = 1);

}  // namespace geossl
