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
#include <span>
#include <utility>
#include <vector>

#include "geossl/tape.hpp"

namespace geossl {

enum class RankDirection { ascending, descending };

struct SoftRankConfig {
    double epsilon = 1e-3;  // > 0; smaller means closer to hard ranks
    RankDirection direction = RankDirection::ascending;
};

/// Block structure of an isotonic solve. Blocks partition positions
/// 0..n-1 of the solver's input in order; the solution is constant within
/// each block and block means are strictly decreasing.
struct PavBlocks {
    std::vector<std::size_t> sizes;
    std::vector<double> means;

    std::size_t total() const {
        std::size_t n = 0;
        for (std::size_t s : sizes) n += s;
        return n;
    }
};

/// L2 projection of y onto the set of non-increasing vectors,
/// pool-adjacent-violators in a single left-to-right pass.
std::pair<std::vector<double>, PavBlocks> isotonic_l2(std::span<const double> y);

/// Differentiable rank surrogate: each entry approximates the 1-based rank
/// of the corresponding score, exactly when gaps are large relative to
/// epsilon, and collapsing toward the mean rank as ties form. Entries
/// always sum to n(n+1)/2. `blocks_out`, when given, receives the carrier
/// needed by soft_rank_vjp.
std::vector<double> soft_rank(std::span<const double> s, const SoftRankConfig& cfg,
                              PavBlocks* blocks_out = nullptr);

/// Adjoint of the isotonic stage in input coordinates: permute the adjoint
/// into the forward sort order, average within each PAV block, permute
/// back. The full derivative of soft_rank composes this with the identity
/// term and the 1/epsilon and direction factors; soft_rank_node does so.
std::vector<double> soft_rank_vjp(std::span<const double> s, std::span<const double> adjoint,
                                  const PavBlocks& blocks, const SoftRankConfig& cfg);

/// Exact 1-based ranks, ties broken by ascending index.
std::vector<std::size_t> hard_rank(std::span<const double> s, RankDirection direction);

/// Descending stable argsort of v (ties keep ascending index order).
std::vector<std::size_t> argsort_descending(std::span<const double> v);

/// soft_rank as a tape op with its exact VJP registered. Input and output
/// are 1-D.
Var soft_rank_node(Var s, const SoftRankConfig& cfg);

}  // namespace geossl
