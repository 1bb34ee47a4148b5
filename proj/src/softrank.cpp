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

#include "geossl/softrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace geossl {

namespace {

void require_finite(std::span<const double> v, const char* who) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(who) + ": non-finite input");
        }
    }
}

double direction_sign(RankDirection d) {
    return d == RankDirection::ascending ? 1.0 : -1.0;
}

// Average the sorted-order adjoint within each block, in place.
void block_average(std::vector<double>& g_sorted, const PavBlocks& blocks) {
    std::size_t start = 0;
    for (std::size_t b = 0; b < blocks.sizes.size(); ++b) {
        const std::size_t len = blocks.sizes[b];
        double mean = 0.0;
        for (std::size_t t = start; t < start + len; ++t) mean += g_sorted[t];
        mean /= static_cast<double>(len);
        for (std::size_t t = start; t < start + len; ++t) g_sorted[t] = mean;
        start += len;
    }
}

struct SoftRankPlan {
    std::vector<double> output;       // original order
    std::vector<std::size_t> order;   // descending stable argsort of theta
    PavBlocks blocks;
};

// theta = sign * s / epsilon; descending direction is the ascending soft
// rank of the negated scores, so the negation folds into theta.
SoftRankPlan soft_rank_plan(std::span<const double> s, const SoftRankConfig& cfg) {
    require_finite(s, "soft_rank");
    if (cfg.epsilon <= 0.0) throw std::invalid_argument("soft_rank: epsilon must be positive");
    if (s.empty()) throw std::invalid_argument("soft_rank: empty input");
    const std::size_t n = s.size();
    const double sign = direction_sign(cfg.direction);

    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) theta[i] = sign * s[i] / cfg.epsilon;

    SoftRankPlan plan;
    plan.order = argsort_descending(theta);

    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        y[t] = theta[plan.order[t]] - static_cast<double>(n - t);
    }
    auto [iso, blocks] = isotonic_l2(y);
    plan.blocks = std::move(blocks);

    plan.output.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        plan.output[plan.order[t]] = theta[plan.order[t]] - iso[t];
    }
    return plan;
}

}  // namespace

std::vector<std::size_t> argsort_descending(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

std::pair<std::vector<double>, PavBlocks> isotonic_l2(std::span<const double> y) {
    require_finite(y, "isotonic_l2");
    if (y.empty()) throw std::invalid_argument("isotonic_l2: empty input");

    // Stack of blocks as (sum, count); merging keeps means strictly
    // decreasing, which is exactly the non-increasing feasibility condition.
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    sums.reserve(y.size());
    counts.reserve(y.size());
    for (double v : y) {
        sums.push_back(v);
        counts.push_back(1);
        while (sums.size() >= 2) {
            const std::size_t k = sums.size();
            const double prev_mean = sums[k - 2] / static_cast<double>(counts[k - 2]);
            const double top_mean = sums[k - 1] / static_cast<double>(counts[k - 1]);
            if (prev_mean > top_mean) break;
            sums[k - 2] += sums[k - 1];
            counts[k - 2] += counts[k - 1];
            sums.pop_back();
            counts.pop_back();
        }
    }

    PavBlocks blocks;
    blocks.sizes = std::move(counts);
    blocks.means.resize(sums.size());
    std::vector<double> solution(y.size());
    std::size_t start = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        const double mean = sums[b] / static_cast<double>(blocks.sizes[b]);
        blocks.means[b] = mean;
        for (std::size_t t = start; t < start + blocks.sizes[b]; ++t) solution[t] = mean;
        start += blocks.sizes[b];
    }
    return {std::move(solution), std::move(blocks)};
}

std::vector<double> soft_rank(std::span<const double> s, const SoftRankConfig& cfg,
                              PavBlocks* blocks_out) {
    SoftRankPlan plan = soft_rank_plan(s, cfg);
    if (blocks_out != nullptr) *blocks_out = std::move(plan.blocks);
    return std::move(plan.output);
}

std::vector<double> soft_rank_vjp(std::span<const double> s, std::span<const double> adjoint,
                                  const PavBlocks& blocks, const SoftRankConfig& cfg) {
    if (s.size() != adjoint.size() || blocks.total() != s.size() ||
        blocks.sizes.size() != blocks.means.size()) {
        throw std::invalid_argument("soft_rank_vjp: blocks do not match this input");
    }
    require_finite(s, "soft_rank_vjp");
    if (cfg.epsilon <= 0.0) throw std::invalid_argument("soft_rank_vjp: epsilon must be positive");

    const double sign = direction_sign(cfg.direction);
    std::vector<double> theta(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) theta[i] = sign * s[i] / cfg.epsilon;
    const std::vector<std::size_t> order = argsort_descending(theta);

    std::vector<double> g_sorted(adjoint.size());
    for (std::size_t t = 0; t < order.size(); ++t) g_sorted[t] = adjoint[order[t]];
    block_average(g_sorted, blocks);
    std::vector<double> out(adjoint.size());
    for (std::size_t t = 0; t < order.size(); ++t) out[order[t]] = g_sorted[t];
    return out;
}

std::vector<std::size_t> hard_rank(std::span<const double> s, RankDirection direction) {
    require_finite(s, "hard_rank");
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (direction == RankDirection::ascending) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&s](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    } else {
        std::stable_sort(idx.begin(), idx.end(),
                         [&s](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    }
    std::vector<std::size_t> rank(s.size());
    for (std::size_t t = 0; t < idx.size(); ++t) rank[idx[t]] = t + 1;
    return rank;
}

Var soft_rank_node(Var s, const SoftRankConfig& cfg) {
    Tape* tape = s.tape();
    if (tape == nullptr) throw std::invalid_argument("soft_rank_node: empty handle");
    const DenseArray& sv = s.value();
    if (sv.rank() != 1) {
        throw std::invalid_argument("soft_rank_node: expected a 1-D input, got " +
                                    sv.shape_string());
    }
    SoftRankPlan plan = soft_rank_plan(sv.values(), cfg);
    DenseArray out = DenseArray::vector(plan.output);

    const double sign = direction_sign(cfg.direction);
    const double inv_eps = 1.0 / cfg.epsilon;
    auto order = std::move(plan.order);
    auto blocks = std::move(plan.blocks);
    return tape->custom(
        std::move(out), {s},
        [sign, inv_eps, order = std::move(order), blocks = std::move(blocks)](
            const DenseArray& g, std::vector<DenseArray*>& p) {
            // d(soft_rank)/ds = sign/eps * (I - conj(B)) with B the PAV
            // block-averaging matrix conjugated by the forward sort order.
            std::vector<double> g_sorted(g.size());
            for (std::size_t t = 0; t < order.size(); ++t) g_sorted[t] = g[order[t]];
            block_average(g_sorted, blocks);
            for (std::size_t t = 0; t < order.size(); ++t) {
                const std::size_t i = order[t];
                p[0]->data()[i] += sign * inv_eps * (g[i] - g_sorted[t]);
            }
        });
}

}  // namespace geossl
