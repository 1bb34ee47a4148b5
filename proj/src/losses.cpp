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

#include "geossl/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "geossl/softrank.hpp"

namespace geossl {

SslKind parse_ssl_kind(const std::string& s) {
    if (s == "infonce") return SslKind::infonce;
    if (s == "consistency") return SslKind::consistency;
    throw std::invalid_argument("unknown ssl_kind: " + s);
}

GeoKind parse_geo_kind(const std::string& s) {
    if (s == "none") return GeoKind::none;
    if (s == "basic") return GeoKind::basic;
    if (s == "rank") return GeoKind::rank;
    throw std::invalid_argument("unknown geo_kind: " + s);
}

GeoBasicNormalization parse_geo_basic_normalization(const std::string& s) {
    if (s == "none") return GeoBasicNormalization::none;
    if (s == "max_geodesic") return GeoBasicNormalization::max_geodesic;
    throw std::invalid_argument("unknown geo_basic_normalization: " + s);
}

std::string to_string(SslKind k) {
    return k == SslKind::infonce ? "infonce" : "consistency";
}

std::string to_string(GeoKind k) {
    switch (k) {
        case GeoKind::none: return "none";
        case GeoKind::basic: return "basic";
        default: return "rank";
    }
}

std::string to_string(GeoBasicNormalization n) {
    return n == GeoBasicNormalization::none ? "none" : "max_geodesic";
}

namespace {

void require_rows_normalized(const DenseArray& m, const char* who) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += m.at(r, c) * m.at(r, c);
        if (std::abs(std::sqrt(s) - 1.0) > 1e-9) {
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(r) +
                                        " is not unit length");
        }
    }
}

std::size_t batch_size(const EmbeddingBatch& batch) { return batch.z.value().rows(); }

Tape& tape_of(const EmbeddingBatch& batch) {
    if (!batch.z.valid()) throw std::invalid_argument("losses: embedding batch has no tape");
    return *batch.z.tape();
}

}  // namespace

EmbeddingBatch make_embedding_batch(Var z, Var z_prime, DenseArray queue) {
    if (!z.valid() || !z_prime.valid() || z.tape() != z_prime.tape()) {
        throw std::invalid_argument("make_embedding_batch: views live on different tapes");
    }
    if (z.value().rank() != 2 || !z.value().same_shape(z_prime.value())) {
        throw std::invalid_argument("make_embedding_batch: view shapes " +
                                    z.value().shape_string() + " vs " +
                                    z_prime.value().shape_string());
    }
    if (queue.size() > 0 && (queue.rank() != 2 || queue.cols() != z.value().cols())) {
        throw std::invalid_argument("make_embedding_batch: queue width does not match embeddings");
    }
    require_rows_normalized(z.value(), "make_embedding_batch(z)");
    require_rows_normalized(z_prime.value(), "make_embedding_batch(z_prime)");
    if (queue.size() > 0) require_rows_normalized(queue, "make_embedding_batch(queue)");
    return EmbeddingBatch{z, z_prime, std::move(queue)};
}

Var info_nce(const EmbeddingBatch& batch, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("info_nce: tau must be positive");
    Tape& tape = tape_of(batch);
    const std::size_t k = batch_size(batch);
    const std::size_t queue_rows = batch.queue.size() > 0 ? batch.queue.rows() : 0;
    if (k == 0) throw std::invalid_argument("info_nce: empty batch");
    if (k - 1 + queue_rows == 0) throw std::invalid_argument("info_nce: no negatives available");

    Var pos = reshape(rowwise_dot(batch.z, batch.z_prime), {k, 1});

    std::vector<Var> parts{pos};
    if (k > 1) {
        // Off-diagonal similarities: other anchors in the batch are negatives.
        Var sims = matmul_nt(batch.z, batch.z);
        std::vector<std::size_t> offdiag;
        offdiag.reserve(k * (k - 1));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                if (j != i) offdiag.push_back(i * k + j);
            }
        }
        parts.push_back(gather(sims, offdiag, {k, k - 1}));
    }
    if (queue_rows > 0) {
        Var queue = tape.constant(batch.queue);
        parts.push_back(matmul_nt(batch.z, queue));
    }
    Var logits = scale(concat_cols(parts), 1.0 / tau);

    const std::size_t total = 1 + (k - 1) + queue_rows;
    std::vector<std::size_t> first_col(k);
    for (std::size_t i = 0; i < k; ++i) first_col[i] = i * total;
    Var pos_logit = gather(logits, first_col, {k});
    return mean_all(sub(logsumexp_rows(logits), pos_logit));
}

Var consistency(const EmbeddingBatch& batch) {
    Tape& tape = tape_of(batch);
    if (batch_size(batch) == 0) throw std::invalid_argument("consistency: empty batch");
    // Rows arrive unit length, so the dot product is the cosine similarity.
    Var target = tape.constant(batch.z_prime.value());
    return neg(mean_all(rowwise_dot(batch.z, target)));
}

Var geo_basic_reg(const EmbeddingBatch& batch, const GeoBatch& gb, const LossConfig& cfg) {
    Tape& tape = tape_of(batch);
    const std::size_t k = batch_size(batch);
    if (k < 2) throw std::invalid_argument("geo_basic_reg: need at least two embeddings");
    if (gb.size() != k) {
        throw std::invalid_argument("geo_basic_reg: geo batch size does not match embeddings");
    }

    const double dist_scale = cfg.geo_basic_normalization == GeoBasicNormalization::max_geodesic
                                  ? 2.0 / (std::numbers::pi * kEarthRadiusKm)
                                  : 1.0;
    DenseArray target = DenseArray::zeros({k, k});
    DenseArray offdiag = DenseArray::zeros({k, k});
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            target.at(i, j) = dist_scale * gb.dist.at(i, j);
            offdiag.at(i, j) = 1.0;
        }
    }

    Var sims = matmul_nt(batch.z, batch.z);
    Var cos_dist = sub(tape.constant(DenseArray::full({k, k}, 1.0)), sims);
    Var diff = mul(sub(cos_dist, tape.constant(std::move(target))),
                   tape.constant(std::move(offdiag)));
    const double denom = static_cast<double>(k) * static_cast<double>(k - 1);
    return scale(sum_all(square(diff)), 1.0 / denom);
}

Var rank_reg(const EmbeddingBatch& batch, const GeoBatch& gb, const LossConfig& cfg) {
    Tape& tape = tape_of(batch);
    const std::size_t k = batch_size(batch);
    if (k < 3) throw std::invalid_argument("rank_reg: ranks need at least two neighbors");
    if (gb.size() != k) {
        throw std::invalid_argument("rank_reg: geo batch size does not match embeddings");
    }

    SoftRankConfig rank_cfg{cfg.epsilon, RankDirection::descending};
    Var sims = matmul_nt(batch.z, batch.z);

    Var total;
    double active_pairs = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<std::size_t> neighbor_cells;
        neighbor_cells.reserve(k - 1);
        std::vector<double> mask_row;
        mask_row.reserve(k - 1);
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            neighbor_cells.push_back(i * k + j);
            mask_row.push_back(gb.mask.at(i, j));
            active_pairs += gb.mask.at(i, j);
        }
        Var sim_ranks = soft_rank_node(gather(sims, neighbor_cells, {k - 1}), rank_cfg);

        const std::vector<std::size_t> geo_ranks = geo_rank(i, gb);
        std::vector<double> geo_as_double(geo_ranks.begin(), geo_ranks.end());
        Var geo_target = tape.constant(DenseArray::vector(std::move(geo_as_double)));
        Var gated = mul(square(sub(sim_ranks, geo_target)),
                        tape.constant(DenseArray::vector(std::move(mask_row))));
        Var anchor_sum = sum_all(gated);
        total = i == 0 ? anchor_sum : add(total, anchor_sum);
    }

    const double denom = cfg.rank_active_pair_normalizer
                             ? std::max(1.0, active_pairs)
                             : static_cast<double>(k) * static_cast<double>(k - 1);
    return scale(total, 1.0 / denom);
}

Var combine(Var l_ssl, Var l_reg, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("combine: alpha must lie in [0, 1]");
    }
    if (alpha == 1.0) return l_ssl;
    if (alpha == 0.0) return l_reg;
    return add(scale(l_ssl, alpha), scale(l_reg, 1.0 - alpha));
}

}  // namespace geossl
