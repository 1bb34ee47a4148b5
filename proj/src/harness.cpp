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

#include "geossl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "geossl/geo.hpp"
#include "geossl/tape.hpp"
#include "geossl/textio.hpp"

namespace geossl {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap map_of(const DenseArray& a) {
    return ConstMatMap(a.data(), static_cast<Eigen::Index>(a.rows()),
                       static_cast<Eigen::Index>(a.cols()));
}

// Seed stream tags; disjoint from the dataset generator's tags so a run
// never aliases the data it trains on.
enum SeedTag : std::uint64_t {
    kTagInit = 0xB1,
    kTagOrder = 0xB2,
    kTagView = 0xB3,
    kTagTemporal = 0xB4,
    kTagSubset = 0xB5,
};

constexpr std::size_t kProbeEpochs = 100;
constexpr std::size_t kKnnNeighbours = 10;
constexpr double kKnnSharpening = 0.9;
constexpr std::size_t kEmbedChunk = 1024;

double scalar_of(Var v) { return v.value().values()[0]; }

std::size_t infer_edge(const Encoder& enc, std::size_t channels) {
    const std::size_t input_dim = enc.cfg.input_dim;
    if (channels == 0 || input_dim % channels != 0) {
        throw std::invalid_argument(
            "embed_records: encoder input does not split into the dataset's "
            "channels");
    }
    const std::size_t per = input_dim / channels;
    const auto edge = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(per))));
    if (edge == 0 || edge * edge != per) {
        throw std::invalid_argument(
            "embed_records: encoder input is not a square patch");
    }
    return edge;
}

// Evaluation view: percentile scaling then a plain resize; training-time
// randomness has no business in metrics.
void write_eval_row(double* out, const Patch& view) {
    for (std::size_t i = 0; i < view.data.size(); ++i) {
        out[i] = view.data[i] / 255.0;
    }
}

struct EmbeddedSplit {
    DenseArray train{DenseArray::zeros({0, 0})};
    DenseArray test{DenseArray::zeros({0, 0})};
    std::vector<std::size_t> train_label;
    std::vector<std::size_t> test_label;
};

EmbeddedSplit embed_split(const Encoder& enc, const Dataset& ds,
                          const SplitIndices& sp) {
    EmbeddedSplit out;
    out.train = embed_records(enc, ds, sp.train);
    out.test = embed_records(enc, ds, sp.test);
    out.train_label.reserve(sp.train.size());
    for (std::size_t rec : sp.train) out.train_label.push_back(ds.manifest.label[rec]);
    out.test_label.reserve(sp.test.size());
    for (std::size_t rec : sp.test) out.test_label.push_back(ds.manifest.label[rec]);
    return out;
}

double macro_accuracy(const std::vector<std::size_t>& truth,
                      const std::vector<std::size_t>& pred,
                      std::size_t classes) {
    std::vector<std::size_t> hit(classes, 0);
    std::vector<std::size_t> seen(classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++seen[truth[i]];
        if (pred[i] == truth[i]) ++hit[truth[i]];
    }
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (seen[c] == 0) continue;
        sum += static_cast<double>(hit[c]) / static_cast<double>(seen[c]);
        ++present;
    }
    if (present == 0) throw std::invalid_argument("macro accuracy: empty test split");
    return sum / static_cast<double>(present);
}

double knn_macro(const EmbeddedSplit& es, std::size_t classes, std::size_t k,
                 double sharpening) {
    const std::size_t n_train = es.train.rows();
    const std::size_t n_test = es.test.rows();
    RowMat sims = map_of(es.test) * map_of(es.train).transpose();
    std::vector<std::size_t> pred(n_test, 0);
    std::vector<std::size_t> idx(n_train);
    std::vector<double> scores(classes, 0.0);
    for (std::size_t i = 0; i < n_test; ++i) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        const double* row = sims.data() + i * n_train;
        // Ties on similarity resolve by training index so rankings never
        // depend on sort internals.
        std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                          [row](std::size_t a, std::size_t b) {
                              if (row[a] != row[b]) return row[a] > row[b];
                              return a < b;
                          });
        std::fill(scores.begin(), scores.end(), 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t t = idx[j];
            scores[es.train_label[t]] += std::exp(row[t] / sharpening);
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (scores[c] > scores[best]) best = c;
        }
        pred[i] = best;
    }
    return macro_accuracy(es.test_label, pred, classes);
}

double probe_macro(const EmbeddedSplit& es, std::size_t classes,
                   std::size_t epochs, double lr, double momentum) {
    const std::size_t n = es.train.rows();
    const std::size_t d = es.train.cols();
    ConstMatMap x = map_of(es.train);
    RowMat w = RowMat::Zero(static_cast<long>(d), static_cast<long>(classes));
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(static_cast<long>(classes));
    RowMat vw = RowMat::Zero(static_cast<long>(d), static_cast<long>(classes));
    Eigen::RowVectorXd vb = Eigen::RowVectorXd::Zero(static_cast<long>(classes));
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        RowMat p = (x * w).rowwise() + b;
        for (long i = 0; i < p.rows(); ++i) {
            const double mx = p.row(i).maxCoeff();
            p.row(i) = (p.row(i).array() - mx).exp();
            p.row(i) /= p.row(i).sum();
        }
        for (std::size_t i = 0; i < n; ++i) {
            p(static_cast<long>(i), static_cast<long>(es.train_label[i])) -= 1.0;
        }
        p /= static_cast<double>(n);
        RowMat gw = x.transpose() * p;
        Eigen::RowVectorXd gb = p.colwise().sum();
        vw = momentum * vw + gw;
        vb = momentum * vb + gb;
        w -= lr * vw;
        b -= lr * vb;
    }
    RowMat logits = (map_of(es.test) * w).rowwise() + b;
    std::vector<std::size_t> pred(es.test.rows(), 0);
    for (long i = 0; i < logits.rows(); ++i) {
        long best = 0;
        for (long c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, best)) best = c;
        }
        pred[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return macro_accuracy(es.test_label, pred, classes);
}

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] < v[b];
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

// Pearson correlation; callers must rule out zero variance first.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

std::optional<double> spearman_from(const DenseArray& emb,
                                    const std::vector<GeoCoordinate>& coords,
                                    double d_max) {
    const std::size_t n = emb.rows();
    RowMat sims = map_of(emb) * map_of(emb).transpose();
    double sum = 0.0;
    std::size_t contributed = 0;
    std::vector<double> geo_d;
    std::vector<double> emb_d;
    for (std::size_t a = 0; a < n; ++a) {
        geo_d.clear();
        emb_d.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            const double d = haversine(coords[a], coords[j]);
            if (d > d_max) continue;
            geo_d.push_back(d);
            emb_d.push_back(1.0 - sims(static_cast<long>(a), static_cast<long>(j)));
        }
        if (geo_d.size() < 2) continue;
        const auto [gmin, gmax] = std::minmax_element(geo_d.begin(), geo_d.end());
        const auto [emin, emax] = std::minmax_element(emb_d.begin(), emb_d.end());
        if (*gmin == *gmax || *emin == *emax) continue;
        sum += pearson(average_ranks(geo_d), average_ranks(emb_d));
        ++contributed;
    }
    if (contributed == 0) return std::nullopt;
    return sum / static_cast<double>(contributed);
}

std::vector<GeoCoordinate> record_coords(const Dataset& ds,
                                         const std::vector<std::size_t>& records) {
    std::vector<GeoCoordinate> out;
    out.reserve(records.size());
    for (std::size_t rec : records) out.push_back(ds.location(rec));
    return out;
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i != 0) row += ',';
        row += cells[i];
    }
    row += '\n';
    return row;
}

std::string digest_label(const RunConfig& cfg, const std::string& axis,
                         const std::string& grid_point,
                         const std::string& seed_label) {
    std::string text = config_fingerprint(cfg);
    text += "\naxis=" + axis;
    text += "\npoint=" + grid_point;
    text += "\nseed=" + seed_label;
    return hex16(fnv1a64(text));
}

std::vector<std::string> metric_cells(const RunConfig& cfg) {
    return {to_string(cfg.loss.ssl_kind), to_string(cfg.loss.geo_kind),
            format_double(cfg.loss.alpha), format_double(cfg.loss.d_max)};
}

}  // namespace

void RunConfig::validate() const {
    if (dataset_dir.empty()) {
        throw std::invalid_argument("run config: dataset_dir is required");
    }
    if (batch_size < 2) {
        throw std::invalid_argument(
            "run config: batch_size must be at least 2 so every view has a "
            "negative");
    }
    if (loss.geo_kind == GeoKind::rank && batch_size < 3) {
        throw std::invalid_argument(
            "run config: rank regularization needs batch_size >= 3");
    }
    if (epochs == 0) throw std::invalid_argument("run config: epochs must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("run config: learning_rate must be positive");
    }
    if (!(optimizer_momentum >= 0.0 && optimizer_momentum < 1.0)) {
        throw std::invalid_argument("run config: optimizer_momentum must be in [0, 1)");
    }
    if (queue_capacity < batch_size) {
        throw std::invalid_argument(
            "run config: queue_capacity must hold at least one batch");
    }
    if (crop_size == 0) throw std::invalid_argument("run config: crop_size must be positive");
    if (hidden_dim == 0 || feature_dim == 0 || projection_dim == 0) {
        throw std::invalid_argument("run config: encoder dims must be positive");
    }
    if (!(loss.alpha >= 0.0 && loss.alpha <= 1.0)) {
        throw std::invalid_argument("run config: alpha must be in [0, 1]");
    }
    if (loss.geo_kind == GeoKind::none && loss.alpha != 1.0) {
        throw std::invalid_argument(
            "run config: alpha must be 1 when the geography term is disabled");
    }
    if (!(loss.d_max > 0.0) || !std::isfinite(loss.d_max)) {
        throw std::invalid_argument("run config: d_max must be positive");
    }
    if (!(loss.tau > 0.0)) throw std::invalid_argument("run config: tau must be positive");
    if (!(loss.epsilon > 0.0)) {
        throw std::invalid_argument("run config: epsilon must be positive");
    }
}

DenseArray embed_records(const Encoder& enc, const Dataset& ds,
                         const std::vector<std::size_t>& records) {
    const DatasetManifest& m = ds.manifest;
    const std::size_t edge = infer_edge(enc, m.channels);
    DenseArray out = DenseArray::zeros({records.size(), enc.cfg.feature_dim});
    for (std::size_t start = 0; start < records.size(); start += kEmbedChunk) {
        const std::size_t n = std::min(kEmbedChunk, records.size() - start);
        DenseArray input = DenseArray::zeros({n, enc.cfg.input_dim});
        for (std::size_t i = 0; i < n; ++i) {
            Patch p = percentile_normalize(ds.patch(records[start + i]), m.percentiles);
            Patch view = resize_patch(p, edge, edge);
            write_eval_row(input.data() + i * enc.cfg.input_dim, view);
        }
        DenseArray feats = encode_features(enc, input);
        std::memcpy(out.data() + start * out.cols(), feats.data(),
                    feats.size() * sizeof(double));
    }
    return out;
}

double knn_evaluate(const Encoder& enc, const Dataset& ds, std::size_t k,
                    double sharpening, const SplitIndices* split) {
    const SplitIndices& sp = split != nullptr ? *split : ds.manifest.random_split;
    if (k == 0) throw std::invalid_argument("knn_evaluate: k must be positive");
    if (k > sp.train.size()) {
        throw std::invalid_argument("knn_evaluate: k exceeds the training set size");
    }
    if (!(sharpening > 0.0)) {
        throw std::invalid_argument("knn_evaluate: sharpening must be positive");
    }
    return knn_macro(embed_split(enc, ds, sp), ds.manifest.classes, k, sharpening);
}

double linear_probe(const Encoder& enc, const Dataset& ds, std::size_t epochs,
                    const SplitIndices* split, double lr, double momentum) {
    const SplitIndices& sp = split != nullptr ? *split : ds.manifest.random_split;
    if (sp.train.empty() || sp.test.empty()) {
        throw std::invalid_argument("linear_probe: split has an empty side");
    }
    if (!(lr > 0.0) || !(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("linear_probe: bad optimizer settings");
    }
    return probe_macro(embed_split(enc, ds, sp), ds.manifest.classes, epochs, lr,
                       momentum);
}

std::optional<double> spearman_alignment(const Encoder& enc, const Dataset& ds,
                                         double d_max, const SplitIndices* split) {
    if (!(d_max > 0.0) || !std::isfinite(d_max)) {
        throw std::invalid_argument("spearman_alignment: d_max must be positive");
    }
    const SplitIndices& sp = split != nullptr ? *split : ds.manifest.random_split;
    DenseArray emb = embed_records(enc, ds, sp.test);
    return spearman_from(emb, record_coords(ds, sp.test), d_max);
}

RunResult pretrain(const RunConfig& cfg) {
    Dataset ds = load_dataset(cfg.dataset_dir);
    return pretrain(cfg, ds);
}

RunResult pretrain(const RunConfig& cfg, const Dataset& ds) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const DatasetManifest& m = ds.manifest;
    if (m.records() == 0) throw std::invalid_argument("pretrain: dataset is empty");
    if (ds.store.size() != m.records() * m.channels * m.height * m.width) {
        throw std::invalid_argument(
            "pretrain: dataset store does not match the manifest shape");
    }
    if (cfg.subset_size > m.locations) {
        throw std::invalid_argument(
            "pretrain: subset_size exceeds the dataset's location count");
    }

    // Pretraining pool: train-side locations of the random split. The
    // split is location-coherent, so dividing by the timestamp count
    // recovers location ids exactly.
    std::vector<std::size_t> train_locs;
    {
        std::vector<char> seen(m.locations, 0);
        for (std::size_t rec : m.random_split.train) seen[rec / m.timestamps] = 1;
        for (std::size_t loc = 0; loc < m.locations; ++loc) {
            if (seen[loc] != 0) train_locs.push_back(loc);
        }
    }
    if (cfg.subset_size > 0 && cfg.subset_size < train_locs.size()) {
        Rng subset_rng(derive_seed(cfg.seed, kTagSubset));
        subset_rng.shuffle(train_locs);
        train_locs.resize(cfg.subset_size);
        std::sort(train_locs.begin(), train_locs.end());
    }

    // Items: whole locations when temporal positives are wanted, else
    // every timestamp flattened into an independent image.
    std::vector<std::size_t> items;
    if (cfg.temporal_views) {
        items = train_locs;
    } else {
        items.reserve(train_locs.size() * m.timestamps);
        for (std::size_t loc : train_locs) {
            for (std::size_t t = 0; t < m.timestamps; ++t) {
                items.push_back(loc * m.timestamps + t);
            }
        }
    }
    if (items.size() < cfg.batch_size) {
        throw std::invalid_argument(
            "pretrain: training pool is smaller than one batch");
    }

    EncoderConfig ecfg;
    ecfg.input_dim = m.channels * cfg.crop_size * cfg.crop_size;
    ecfg.hidden_dim = cfg.hidden_dim;
    ecfg.feature_dim = cfg.feature_dim;
    ecfg.projection_dim = cfg.projection_dim;
    Rng init_rng(derive_seed(cfg.seed, kTagInit));
    Encoder online = Encoder::init(ecfg, init_rng);
    Encoder target = online;
    SgdOptimizer opt(online,
                     SgdConfig{cfg.learning_rate, cfg.optimizer_momentum, 0.0});
    MemoryQueue queue(cfg.queue_capacity, cfg.projection_dim);

    const AugPipeline pipe = cfg.augmentation.specs.empty()
                                 ? geometric_pipeline(cfg.crop_size, cfg.crop_size)
                                 : cfg.augmentation;

    const std::size_t steps_per_epoch = items.size() / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;
    const std::size_t kbatch = cfg.batch_size;

    RunReport report;
    std::size_t global_step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = items;
        Rng order_rng(derive_seed(cfg.seed, kTagOrder, epoch));
        order_rng.shuffle(order);
        double acc_ssl = 0.0;
        double acc_reg = 0.0;
        double acc_total = 0.0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            DenseArray v1 = DenseArray::zeros({kbatch, ecfg.input_dim});
            DenseArray v2 = DenseArray::zeros({kbatch, ecfg.input_dim});
            std::vector<GeoCoordinate> coords(kbatch);
            Rng temporal_rng(derive_seed(cfg.seed, kTagTemporal, global_step));
            for (std::size_t b = 0; b < kbatch; ++b) {
                const std::size_t item = order[s * kbatch + b];
                std::size_t rec1 = item;
                std::size_t rec2 = item;
                if (cfg.temporal_views) {
                    const std::size_t t1 = temporal_rng.uniform_int(m.timestamps);
                    std::size_t t2 = t1;
                    if (m.timestamps > 1) {
                        t2 = temporal_rng.uniform_int(m.timestamps - 1);
                        if (t2 >= t1) ++t2;
                    }
                    rec1 = item * m.timestamps + t1;
                    rec2 = item * m.timestamps + t2;
                }
                Patch base1 = percentile_normalize(ds.patch(rec1), m.percentiles);
                Patch view1 =
                    apply(pipe, base1, derive_seed(cfg.seed, kTagView, global_step, 2 * b));
                Patch base2 = rec2 == rec1
                                  ? base1
                                  : percentile_normalize(ds.patch(rec2), m.percentiles);
                Patch view2 = apply(pipe, base2,
                                    derive_seed(cfg.seed, kTagView, global_step, 2 * b + 1));
                if (view1.channels != m.channels || view1.height != cfg.crop_size ||
                    view1.width != cfg.crop_size || !view1.same_shape(view2)) {
                    throw std::runtime_error(
                        "pretrain: augmentation pipeline must emit crop_size views");
                }
                write_eval_row(v1.data() + b * ecfg.input_dim, view1);
                write_eval_row(v2.data() + b * ecfg.input_dim, view2);
                coords[b] = ds.location(rec1);
            }

            Tape tape;
            EncodeResult q = encode(tape, online, v1, true);
            EncodeResult kenc = encode(tape, target, v2, false);
            EmbeddingBatch eb = make_embedding_batch(q.projections, kenc.projections,
                                                     queue.snapshot());
            Var l_ssl = cfg.loss.ssl_kind == SslKind::infonce
                            ? info_nce(eb, cfg.loss.tau)
                            : consistency(eb);
            Var total = l_ssl;
            double reg_v = 0.0;
            if (cfg.loss.geo_kind != GeoKind::none) {
                GeoBatch gb = pairwise_geo(coords, cfg.loss.d_max);
                Var l_reg = cfg.loss.geo_kind == GeoKind::rank
                                ? rank_reg(eb, gb, cfg.loss)
                                : geo_basic_reg(eb, gb, cfg.loss);
                reg_v = scalar_of(l_reg);
                total = combine(l_ssl, l_reg, cfg.loss.alpha);
            }
            const double ssl_v = scalar_of(l_ssl);
            const double total_v = scalar_of(total);
            if (!std::isfinite(ssl_v) || !std::isfinite(reg_v) || !std::isfinite(total_v)) {
                throw std::runtime_error(
                    "pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                    " step " + std::to_string(s) + " (ssl=" + format_double(ssl_v) +
                    ", reg=" + format_double(reg_v) +
                    ", total=" + format_double(total_v) + ")");
            }

            Gradients grad = tape.backward(total);
            std::vector<DenseArray> grads;
            grads.reserve(q.params.size());
            for (Var p : q.params) grads.push_back(grad.wrt(p));
            opt.step(online, grads);
            ema_update(target, online, momentum_at(global_step, total_steps));
            queue.push(kenc.projections.value());

            acc_ssl += ssl_v;
            acc_reg += reg_v;
            acc_total += total_v;
            ++global_step;
        }
        const auto steps = static_cast<double>(steps_per_epoch);
        report.epochs.push_back(EpochStats{epoch, acc_ssl / steps, acc_reg / steps,
                                           acc_total / steps});
    }

    // End-of-run evaluation on the full random split; the subset only
    // restricted pretraining.
    EmbeddedSplit es = embed_split(online, ds, m.random_split);
    const std::size_t k_eff = std::min(kKnnNeighbours, es.train.rows());
    report.knn_acc_macro = knn_macro(es, m.classes, k_eff, kKnnSharpening);
    report.linear_acc_macro = probe_macro(es, m.classes, kProbeEpochs, 0.5, 0.9);
    report.spearman_geo =
        spearman_from(es.test, record_coords(ds, m.random_split.test), cfg.loss.d_max);
    report.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return RunResult{std::move(online), std::move(target), std::move(report)};
}

void export_embeddings(const Encoder& enc, const Dataset& ds,
                       const std::string& out_dir) {
    static_assert(sizeof(float) == 4);
    const std::size_t n = ds.manifest.records();
    std::vector<std::size_t> records(n);
    std::iota(records.begin(), records.end(), std::size_t{0});
    DenseArray emb = embed_records(enc, ds, records);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    {
        std::ofstream bin(dir / "embeddings.bin", std::ios::binary | std::ios::trunc);
        std::vector<float> row(emb.cols());
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < emb.cols(); ++c) {
                row[c] = static_cast<float>(emb.at(r, c));
            }
            bin.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(float)));
        }
        if (!bin) throw std::runtime_error("export_embeddings: write failed");
    }
    nlohmann::json meta;
    meta["records"] = n;
    meta["dim"] = emb.cols();
    meta["dtype"] = "float32";
    meta["byte_order"] = "little-endian";
    meta["layout"] = "row-major, record index order";
    meta["dataset"] = {{"seed", ds.manifest.seed},
                       {"locations", ds.manifest.locations},
                       {"timestamps", ds.manifest.timestamps},
                       {"classes", ds.manifest.classes}};
    std::ofstream js(dir / "embeddings.json", std::ios::trunc);
    js << meta.dump(2) << "\n";
    if (!js) throw std::runtime_error("export_embeddings: sidecar write failed");
}

void save_checkpoint(const std::string& path, const Encoder& online,
                     const Encoder& target) {
    NamedArrays arrays;
    arrays.emplace_back(
        "meta/dims",
        DenseArray::vector({static_cast<double>(online.cfg.input_dim),
                            static_cast<double>(online.cfg.hidden_dim),
                            static_cast<double>(online.cfg.feature_dim),
                            static_cast<double>(online.cfg.projection_dim)}));
    for (auto& named : encoder_arrays(online, "online/")) {
        arrays.push_back(std::move(named));
    }
    for (auto& named : encoder_arrays(target, "target/")) {
        arrays.push_back(std::move(named));
    }
    save_arrays(path, arrays);
}

std::pair<Encoder, Encoder> load_checkpoint(const std::string& path) {
    NamedArrays arrays = load_arrays(path);
    const DenseArray* dims = nullptr;
    for (const auto& [name, arr] : arrays) {
        if (name == "meta/dims") dims = &arr;
    }
    if (dims == nullptr || dims->size() != 4) {
        throw std::runtime_error("checkpoint: missing meta/dims");
    }
    EncoderConfig cfg;
    cfg.input_dim = static_cast<std::size_t>(dims->values()[0]);
    cfg.hidden_dim = static_cast<std::size_t>(dims->values()[1]);
    cfg.feature_dim = static_cast<std::size_t>(dims->values()[2]);
    cfg.projection_dim = static_cast<std::size_t>(dims->values()[3]);
    Rng scratch(0);
    Encoder online = Encoder::init(cfg, scratch);
    Encoder target = online;
    load_encoder_arrays(online, arrays, "online/");
    load_encoder_arrays(target, arrays, "target/");
    return {std::move(online), std::move(target)};
}

std::string to_string(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::augmentation: return "augmentation";
        case AblationAxis::cardinality: return "cardinality";
        case AblationAxis::temporal: return "temporal";
        case AblationAxis::patch_size: return "patch_size";
        case AblationAxis::alpha_dmax: return "alpha_dmax";
    }
    throw std::invalid_argument("to_string: unknown ablation axis");
}

AblationAxis parse_ablation_axis(const std::string& s) {
    for (AblationAxis axis :
         {AblationAxis::augmentation, AblationAxis::cardinality, AblationAxis::temporal,
          AblationAxis::patch_size, AblationAxis::alpha_dmax}) {
        if (s == to_string(axis)) return axis;
    }
    throw std::invalid_argument(
        "ablation axis '" + s +
        "' is not one of augmentation, cardinality, temporal, patch_size, "
        "alpha_dmax");
}

std::string config_fingerprint(const RunConfig& cfg) {
    std::string text;
    text += "dataset_dir=" + cfg.dataset_dir + "\n";
    text += "ssl_kind=" + to_string(cfg.loss.ssl_kind) + "\n";
    text += "geo_kind=" + to_string(cfg.loss.geo_kind) + "\n";
    text += "alpha=" + format_double(cfg.loss.alpha) + "\n";
    text += "d_max=" + format_double(cfg.loss.d_max) + "\n";
    text += "tau=" + format_double(cfg.loss.tau) + "\n";
    text += "epsilon=" + format_double(cfg.loss.epsilon) + "\n";
    text += "geo_basic_normalization=" +
            to_string(cfg.loss.geo_basic_normalization) + "\n";
    text += "rank_active_pair_normalizer=" +
            std::string(cfg.loss.rank_active_pair_normalizer ? "1" : "0") + "\n";
    text += "batch_size=" + std::to_string(cfg.batch_size) + "\n";
    text += "epochs=" + std::to_string(cfg.epochs) + "\n";
    text += "learning_rate=" + format_double(cfg.learning_rate) + "\n";
    text += "optimizer_momentum=" + format_double(cfg.optimizer_momentum) + "\n";
    text += "queue_capacity=" + std::to_string(cfg.queue_capacity) + "\n";
    text += "temporal_views=" + std::string(cfg.temporal_views ? "on" : "off") + "\n";
    text += "subset_size=" + std::to_string(cfg.subset_size) + "\n";
    text += "crop_size=" + std::to_string(cfg.crop_size) + "\n";
    text += "seed=" + std::to_string(cfg.seed) + "\n";
    text += "hidden_dim=" + std::to_string(cfg.hidden_dim) + "\n";
    text += "feature_dim=" + std::to_string(cfg.feature_dim) + "\n";
    text += "projection_dim=" + std::to_string(cfg.projection_dim) + "\n";
    text += "augmentation=";
    text += cfg.augmentation.specs.empty() ? std::string("default")
                                           : pipeline_to_text(cfg.augmentation);
    text += "\n";
    return text;
}

std::string run_digest(const RunConfig& cfg, const std::string& axis,
                       const std::string& grid_point, std::uint64_t seed) {
    return digest_label(cfg, axis, grid_point, std::to_string(seed));
}

std::string report_to_csv(const RunConfig& cfg, const RunReport& report,
                          const std::string& axis, const std::string& grid_point) {
    if (report.epochs.empty()) {
        throw std::invalid_argument("report_to_csv: report has no epochs");
    }
    const std::string id = run_digest(cfg, axis, grid_point, cfg.seed);
    const std::vector<std::string> kinds = metric_cells(cfg);
    std::string csv = std::string(kCsvHeader) + "\n";
    for (const EpochStats& e : report.epochs) {
        csv += csv_row({id, axis, grid_point, std::to_string(cfg.seed), kinds[0],
                        kinds[1], kinds[2], kinds[3], std::to_string(e.epoch),
                        format_double(e.loss_ssl), format_double(e.loss_reg),
                        format_double(e.loss_total), "", "", "", ""});
    }
    const EpochStats& last = report.epochs.back();
    csv += csv_row({id, axis, grid_point, std::to_string(cfg.seed), kinds[0], kinds[1],
                    kinds[2], kinds[3], std::to_string(last.epoch),
                    format_double(last.loss_ssl), format_double(last.loss_reg),
                    format_double(last.loss_total),
                    format_double(report.knn_acc_macro),
                    format_double(report.linear_acc_macro),
                    report.spearman_geo ? format_double(*report.spearman_geo) : "",
                    format_double(report.wallclock_s)});
    return csv;
}

std::vector<AblationPoint> default_grid(AblationAxis axis, const RunConfig& base) {
    std::vector<AblationPoint> grid;
    switch (axis) {
        case AblationAxis::augmentation: {
            AblationPoint baseline{"geometric", base};
            baseline.cfg.augmentation =
                geometric_pipeline(base.crop_size, base.crop_size);
            grid.push_back(std::move(baseline));
            for (AugTechnique tech :
                 {AugTechnique::brightness, AugTechnique::contrast,
                  AugTechnique::sharpness, AugTechnique::gaussian_blur,
                  AugTechnique::gaussian_noise, AugTechnique::solarize,
                  AugTechnique::posterize, AugTechnique::grayscale,
                  AugTechnique::cutout, AugTechnique::grid_shuffle,
                  AugTechnique::shear, AugTechnique::translate}) {
                AblationPoint pt{technique_name(tech), base};
                AugPipeline pipe = geometric_pipeline(base.crop_size, base.crop_size);
                pipe.specs.push_back(scaled_spec(tech, 0.2));
                pt.cfg.augmentation = std::move(pipe);
                grid.push_back(std::move(pt));
            }
            break;
        }
        case AblationAxis::cardinality: {
            const DatasetManifest m = load_manifest(base.dataset_dir);
            // Location-coherent split: train records / timestamps =
            // train locations.
            const std::size_t pool = m.random_split.train.size() / m.timestamps;
            for (std::size_t den : {std::size_t{8}, std::size_t{4}, std::size_t{2},
                                    std::size_t{1}}) {
                AblationPoint pt{"1/" + std::to_string(den), base};
                pt.cfg.subset_size = std::max<std::size_t>(1, pool / den);
                grid.push_back(std::move(pt));
            }
            break;
        }
        case AblationAxis::temporal: {
            AblationPoint off{"off", base};
            off.cfg.temporal_views = false;
            AblationPoint on{"on", base};
            on.cfg.temporal_views = true;
            grid.push_back(std::move(off));
            grid.push_back(std::move(on));
            break;
        }
        case AblationAxis::patch_size: {
            for (std::size_t edge : {std::size_t{8}, std::size_t{12}, std::size_t{16}}) {
                AblationPoint pt{std::to_string(edge), base};
                pt.cfg.crop_size = edge;
                pt.cfg.augmentation = AugPipeline{};  // re-derive at the new edge
                grid.push_back(std::move(pt));
            }
            break;
        }
        case AblationAxis::alpha_dmax: {
            for (double alpha : {1.0, 0.48}) {
                for (double scale : {1.0, 2.0}) {
                    AblationPoint pt{"", base};
                    pt.cfg.loss.alpha = alpha;
                    pt.cfg.loss.d_max = base.loss.d_max * scale;
                    pt.name = "alpha=" + format_double(alpha) +
                              ",dmax=" + format_double(pt.cfg.loss.d_max);
                    grid.push_back(std::move(pt));
                }
            }
            break;
        }
    }
    return grid;
}

std::string run_ablation(AblationAxis axis, const std::vector<AblationPoint>& grid,
                         std::size_t seeds, std::size_t threads) {
    if (grid.empty()) throw std::invalid_argument("run_ablation: grid is empty");
    if (seeds == 0) throw std::invalid_argument("run_ablation: seeds must be positive");
    if (threads == 0) threads = 1;
    const std::string axis_name = to_string(axis);
    for (const AblationPoint& pt : grid) pt.cfg.validate();

    // One shared load per distinct dataset; runs only read it.
    std::map<std::string, Dataset> data;
    for (const AblationPoint& pt : grid) {
        if (data.find(pt.cfg.dataset_dir) == data.end()) {
            data.emplace(pt.cfg.dataset_dir, load_dataset(pt.cfg.dataset_dir));
        }
    }

    struct Cell {
        std::string row;
        double ssl = 0.0;
        double reg = 0.0;
        double total = 0.0;
        double knn = 0.0;
        double linear = 0.0;
        std::optional<double> spearman;
        double wallclock = 0.0;
    };
    std::vector<Cell> cells(grid.size() * seeds);

    auto work = [&](std::size_t idx) {
        const std::size_t gi = idx / seeds;
        const std::size_t si = idx % seeds;
        RunConfig cfg = grid[gi].cfg;
        cfg.seed = grid[gi].cfg.seed + si;
        RunResult run = pretrain(cfg, data.at(cfg.dataset_dir));
        const EpochStats& last = run.report.epochs.back();
        Cell& cell = cells[idx];
        cell.ssl = last.loss_ssl;
        cell.reg = last.loss_reg;
        cell.total = last.loss_total;
        cell.knn = run.report.knn_acc_macro;
        cell.linear = run.report.linear_acc_macro;
        cell.spearman = run.report.spearman_geo;
        cell.wallclock = run.report.wallclock_s;
        const std::vector<std::string> kinds = metric_cells(cfg);
        cell.row = csv_row(
            {run_digest(cfg, axis_name, grid[gi].name, cfg.seed), axis_name,
             grid[gi].name, std::to_string(cfg.seed), kinds[0], kinds[1], kinds[2],
             kinds[3], std::to_string(last.epoch), format_double(cell.ssl),
             format_double(cell.reg), format_double(cell.total),
             format_double(cell.knn), format_double(cell.linear),
             cell.spearman ? format_double(*cell.spearman) : "",
             format_double(cell.wallclock)});
    };

    const std::size_t jobs = cells.size();
    if (threads <= 1 || jobs <= 1) {
        for (std::size_t idx = 0; idx < jobs; ++idx) work(idx);
    } else {
        const std::size_t workers = std::min(threads, jobs);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t idx = w; idx < jobs; idx += workers) work(idx);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    auto mean_std = [](const std::vector<double>& vals) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double sd =
            vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
        return std::pair<double, double>{mean, sd};
    };

    std::string csv = std::string(kCsvHeader) + "\n";
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        for (std::size_t si = 0; si < seeds; ++si) csv += cells[gi * seeds + si].row;

        std::vector<double> ssl;
        std::vector<double> reg;
        std::vector<double> total;
        std::vector<double> knn;
        std::vector<double> linear;
        std::vector<double> sp;
        std::vector<double> wall;
        for (std::size_t si = 0; si < seeds; ++si) {
            const Cell& cell = cells[gi * seeds + si];
            ssl.push_back(cell.ssl);
            reg.push_back(cell.reg);
            total.push_back(cell.total);
            knn.push_back(cell.knn);
            linear.push_back(cell.linear);
            if (cell.spearman) sp.push_back(*cell.spearman);
            wall.push_back(cell.wallclock);
        }
        const std::vector<std::string> kinds = metric_cells(grid[gi].cfg);
        const std::string epoch_cell = std::to_string(grid[gi].cfg.epochs);
        const char* labels[2] = {"mean", "std"};
        for (int which = 0; which < 2; ++which) {
            auto pick = [&](const std::vector<double>& vals) -> std::string {
                if (vals.empty()) return "";
                const auto [mean, sd] = mean_std(vals);
                return format_double(which == 0 ? mean : sd);
            };
            csv += csv_row({digest_label(grid[gi].cfg, axis_name, grid[gi].name,
                                         labels[which]),
                            axis_name, grid[gi].name, labels[which], kinds[0], kinds[1],
                            kinds[2], kinds[3], epoch_cell, pick(ssl), pick(reg),
                            pick(total), pick(knn), pick(linear), pick(sp), pick(wall)});
        }
    }
    return csv;
}

}  // namespace geossl
