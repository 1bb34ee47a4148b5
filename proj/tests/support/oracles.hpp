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

// Slow reference implementations, written independently of the library
// code they validate.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace oracles {

// Exact L2 projection onto non-increasing vectors via the min-max mean
// formula: x_i = min over left ends j <= i of (max over right ends
// k >= i of mean(y[j..k])). Cubic time, fine for test sizes.
inline std::vector<double> isotonic_minmax(std::span<const double> y) {
    const std::size_t n = y.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + y[i];
    auto mean = [&prefix](std::size_t a, std::size_t b) {
        return (prefix[b + 1] - prefix[a]) / static_cast<double>(b - a + 1);
    };
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = 0.0;
        bool first_j = true;
        for (std::size_t j = 0; j <= i; ++j) {
            double inner = mean(j, i);
            for (std::size_t k = i; k < n; ++k) inner = std::max(inner, mean(j, k));
            if (first_j || inner < best) {
                best = inner;
                first_j = false;
            }
        }
        x[i] = best;
    }
    return x;
}

// 1-based ranks by pairwise counting; ties resolved by ascending index.
inline std::vector<std::size_t> rank_by_counting(std::span<const double> v, bool ascending) {
    const std::size_t n = v.size();
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ahead = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const bool strictly_before = ascending ? v[j] < v[i] : v[j] > v[i];
            if (strictly_before || (v[j] == v[i] && j < i)) ++ahead;
        }
        rank[i] = ahead + 1;
    }
    return rank;
}

}  // namespace oracles
