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

#include <string>

#include "geossl/geo.hpp"
#include "geossl/tape.hpp"

namespace geossl {

enum class SslKind { infonce, consistency };
enum class GeoKind { none, basic, rank };
enum class GeoBasicNormalization { none, max_geodesic };

struct LossConfig {
    double alpha = 0.48;
    double d_max = 2500.0;  // kilometers
    double tau = 0.04;
    double epsilon = 1e-3;  // soft-rank strength
    SslKind ssl_kind = SslKind::infonce;
    GeoKind geo_kind = GeoKind::rank;
    GeoBasicNormalization geo_basic_normalization = GeoBasicNormalization::max_geodesic;
    // Divide the rank penalty by the active pair count instead of K(K-1).
    bool rank_active_pair_normalizer = false;
};

SslKind parse_ssl_kind(const std::string& s);
GeoKind parse_geo_kind(const std::string& s);
GeoBasicNormalization parse_geo_basic_normalization(const std::string& s);
std::string to_string(SslKind k);
std::string to_string(GeoKind k);
std::string to_string(GeoBasicNormalization n);

/// One batch of paired embeddings plus detached queue negatives. z and
/// z_prime are (K, D) tape nodes; the queue is (M_q, D) plain data.
/// Rows are unit L2 vectors; make_embedding_batch enforces it to 1e-9.
struct EmbeddingBatch {
    Var z;
    Var z_prime;
    DenseArray queue;
};

EmbeddingBatch make_embedding_batch(Var z, Var z_prime, DenseArray queue);

/// Mean over anchors of -log softmax of the positive logit against the
/// positive plus every negative (other in-batch anchors and the queue),
/// all similarities divided by tau. Stabilized through logsumexp.
Var info_nce(const EmbeddingBatch& batch, double tau);

/// Mean over anchors of the negative similarity to the paired view; the
/// paired view is re-recorded as a constant so it never receives gradient.
Var consistency(const EmbeddingBatch& batch);

/// Mean over ordered pairs i != j of ((1 - z_i.z_j) - target_ij)^2 where
/// the target is the geodesic distance, scaled to [0, 2] by 2/(pi R) under
/// max_geodesic normalization or left in kilometers under none.
Var geo_basic_reg(const EmbeddingBatch& batch, const GeoBatch& gb, const LossConfig& cfg);

/// Rank-alignment penalty: per anchor, the descending soft rank of its
/// neighbor similarities is matched (MSE) against the ascending hard rank
/// of its neighbor geodesics, each term gated by the proximity mask.
/// Ranks are computed over the full neighbor set; the mask gates terms
/// after ranking. Geo ranks carry no gradient.
Var rank_reg(const EmbeddingBatch& batch, const GeoBatch& gb, const LossConfig& cfg);

/// alpha * l_ssl + (1 - alpha) * l_reg; at the endpoints the surviving
/// node is returned as-is so the mixture is exact.
Var combine(Var l_ssl, Var l_reg, double alpha);

}  // namespace geossl
