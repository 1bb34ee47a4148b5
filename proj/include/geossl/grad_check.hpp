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

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "geossl/tape.hpp"

namespace geossl {

/// Builds a scalar Var from leaves freshly recorded on the given tape.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Max over all coordinates of |analytic - central difference| scaled by
/// max(1, |analytic|). Each function evaluation runs on a fresh tape, so
/// `f` must not retain Vars across calls.
inline double grad_check(const ScalarFn& f, const std::vector<DenseArray>& inputs,
                         double step = 1e-6) {
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

    auto evaluate = [&](const std::vector<DenseArray>& xs) {
        Tape tape;
        std::vector<Var> leaves;
        leaves.reserve(xs.size());
        for (const DenseArray& x : xs) leaves.push_back(tape.input(x));
        double v = f(tape, leaves).scalar_value();
        if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite function value");
        return v;
    };

    // Analytic pass.
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const DenseArray& x : inputs) leaves.push_back(tape.input(x));
    Var root = f(tape, leaves);
    if (!std::isfinite(root.scalar_value())) {
        throw std::runtime_error("grad_check: non-finite function value");
    }
    Gradients grads = tape.backward(root);

    double worst = 0.0;
    std::vector<DenseArray> probe = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const DenseArray& analytic = grads.wrt(leaves[k]);
        for (std::size_t i = 0; i < probe[k].size(); ++i) {
            const double saved = probe[k][i];
            probe[k][i] = saved + step;
            const double fp = evaluate(probe);
            probe[k][i] = saved - step;
            const double fm = evaluate(probe);
            probe[k][i] = saved;
            const double central = (fp - fm) / (2.0 * step);
            const double err = std::abs(analytic[i] - central) / std::max(1.0, std::abs(analytic[i]));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

inline double grad_check(const std::function<Var(Tape&, Var)>& f, const DenseArray& x,
                         double step = 1e-6) {
    return grad_check(
        [&f](Tape& tape, const std::vector<Var>& leaves) { return f(tape, leaves[0]); }, {x}, step);
}

}  // namespace geossl
