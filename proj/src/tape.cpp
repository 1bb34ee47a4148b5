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

#include "geossl/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace geossl {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap as_matrix(const DenseArray& a) {
    if (a.rank() != 2) {
        throw std::invalid_argument("tape: expected a 2-D array, got shape " + a.shape_string());
    }
    return ConstMatMap(a.data(), static_cast<Eigen::Index>(a.rows()),
                       static_cast<Eigen::Index>(a.cols()));
}

MatMap as_matrix(DenseArray& a) {
    return MatMap(a.data(), static_cast<Eigen::Index>(a.rows()),
                  static_cast<Eigen::Index>(a.cols()));
}

void require_same_shape(const DenseArray& a, const DenseArray& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string("tape: ") + op + " shape mismatch " +
                                    a.shape_string() + " vs " + b.shape_string());
    }
}

void check_finite(const DenseArray& a, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
    if (!a.all_finite()) {
        throw std::runtime_error(std::string("tape: non-finite value produced by ") + op);
    }
#else
    (void)a;
#endif
}

Tape* require_same_tape(Var a, Var b, const char* op) {
    if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
        throw std::invalid_argument(std::string("tape: ") + op + " operands live on different tapes");
    }
    return a.tape();
}

}  // namespace

const DenseArray& Var::value() const {
    if (tape_ == nullptr) {
        throw std::logic_error("Var: value() on a default-constructed handle");
    }
    return tape_->value_of(id_);
}

double Var::scalar_value() const {
    const DenseArray& v = value();
    if (v.size() != 1) {
        throw std::logic_error("Var: scalar_value() on shape " + v.shape_string());
    }
    return v[0];
}

const DenseArray& Gradients::wrt(Var v) const {
    if (v.tape() != tape_) {
        throw std::invalid_argument("Gradients: var belongs to a different tape");
    }
    DenseArray& slot = adjoints_[v.id()];
    if (slot.size() == 0 && tape_->value_of(v.id()).size() != 0) {
        slot = DenseArray::zeros(tape_->value_of(v.id()).shape());
    }
    return slot;
}

Var Tape::input(DenseArray value) {
    check_finite(value, "input");
    nodes_.push_back(Node{std::move(value), {}, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::custom(DenseArray value, const std::vector<Var>& parents, BackwardRule rule) {
    check_finite(value, "custom");
    if (!parents.empty() && !rule) {
        throw std::invalid_argument("tape: custom() with parents needs a backward rule");
    }
    std::vector<std::size_t> ids;
    ids.reserve(parents.size());
    for (Var p : parents) {
        if (!p.valid() || p.tape() != this) {
            throw std::invalid_argument("tape: custom() parent lives on a different tape");
        }
        ids.push_back(p.id());
    }
    nodes_.push_back(Node{std::move(value), std::move(ids), std::move(rule)});
    return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var root) const {
    if (!root.valid() || root.tape() != this) {
        throw std::invalid_argument("tape: backward root lives on a different tape");
    }
    if (root.value().size() != 1) {
        throw std::invalid_argument("tape: backward requires a scalar root, got shape " +
                                    root.value().shape_string());
    }
    std::vector<DenseArray> adjoints(nodes_.size());
    std::vector<char> reached(nodes_.size(), 0);
    adjoints[root.id()] = DenseArray::full(root.value().shape(), 1.0);
    reached[root.id()] = 1;

    // Creation order is a topological order, so the reverse sweep sees every
    // node after all of its consumers.
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        const Node& node = nodes_[i];
        if (!reached[i] || node.parents.empty()) continue;
        std::vector<DenseArray*> parent_slots;
        parent_slots.reserve(node.parents.size());
        for (std::size_t pid : node.parents) {
            if (adjoints[pid].size() == 0) {
                adjoints[pid] = DenseArray::zeros(nodes_[pid].value.shape());
            }
            reached[pid] = 1;
            parent_slots.push_back(&adjoints[pid]);
        }
        node.rule(adjoints[i], parent_slots);
    }
    return Gradients(std::move(adjoints), this);
}

namespace {

void axpy(double alpha, const DenseArray& x, DenseArray& y) {
    const double* xs = x.data();
    double* ys = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) ys[i] += alpha * xs[i];
}

}  // namespace

// ---- elementwise ---------------------------------------------------------

Var add(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "add");
    require_same_shape(a.value(), b.value(), "add");
    DenseArray out = a.value();
    axpy(1.0, b.value(), out);
    check_finite(out, "add");
    return t->custom(std::move(out), {a, b},
                     [](const DenseArray& g, std::vector<DenseArray*>& p) {
                         axpy(1.0, g, *p[0]);
                         axpy(1.0, g, *p[1]);
                     });
}

Var sub(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "sub");
    require_same_shape(a.value(), b.value(), "sub");
    DenseArray out = a.value();
    axpy(-1.0, b.value(), out);
    check_finite(out, "sub");
    return t->custom(std::move(out), {a, b},
                     [](const DenseArray& g, std::vector<DenseArray*>& p) {
                         axpy(1.0, g, *p[0]);
                         axpy(-1.0, g, *p[1]);
                     });
}

Var mul(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "mul");
    require_same_shape(a.value(), b.value(), "mul");
    DenseArray out = a.value();
    {
        const double* bs = b.value().data();
        double* os = out.data();
        for (std::size_t i = 0; i < out.size(); ++i) os[i] *= bs[i];
    }
    check_finite(out, "mul");
    std::size_t aid = a.id();
    std::size_t bid = b.id();
    return t->custom(std::move(out), {a, b},
                     [t, aid, bid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& av = t->value_of(aid);
                         const DenseArray& bv = t->value_of(bid);
                         const double* gs = g.data();
                         for (std::size_t i = 0; i < g.size(); ++i) {
                             p[0]->data()[i] += gs[i] * bv[i];
                             p[1]->data()[i] += gs[i] * av[i];
                         }
                     });
}

Var scale(Var a, double c) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: scale on an empty handle");
    DenseArray out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
    check_finite(out, "scale");
    return t->custom(std::move(out), {a},
                     [c](const DenseArray& g, std::vector<DenseArray*>& p) { axpy(c, g, *p[0]); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var exp_op(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: exp on an empty handle");
    DenseArray out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out[i]);
    check_finite(out, "exp");
    // custom() appends exactly one node, so the result id is known up front
    // and the rule can read the op's own output.
    const std::size_t vid = t->node_count();
    return t->custom(std::move(out), {a},
                     [t, vid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& y = t->value_of(vid);
                         for (std::size_t i = 0; i < g.size(); ++i) p[0]->data()[i] += g[i] * y[i];
                     });
}

Var log_op(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: log on an empty handle");
    DenseArray out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] <= 0.0) {
            throw std::domain_error("tape: log of a non-positive value");
        }
        out.data()[i] = std::log(out[i]);
    }
    check_finite(out, "log");
    std::size_t aid = a.id();
    return t->custom(std::move(out), {a},
                     [t, aid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& x = t->value_of(aid);
                         for (std::size_t i = 0; i < g.size(); ++i) p[0]->data()[i] += g[i] / x[i];
                     });
}

Var square(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: square on an empty handle");
    DenseArray out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= out[i];
    check_finite(out, "square");
    std::size_t aid = a.id();
    return t->custom(std::move(out), {a},
                     [t, aid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& x = t->value_of(aid);
                         for (std::size_t i = 0; i < g.size(); ++i) {
                             p[0]->data()[i] += 2.0 * g[i] * x[i];
                         }
                     });
}

Var relu(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: relu on an empty handle");
    DenseArray out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out[i]);
    std::size_t aid = a.id();
    return t->custom(std::move(out), {a},
                     [t, aid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& x = t->value_of(aid);
                         for (std::size_t i = 0; i < g.size(); ++i) {
                             if (x[i] > 0.0) p[0]->data()[i] += g[i];
                         }
                     });
}

// ---- matrix products -----------------------------------------------------

Var matmul(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "matmul");
    ConstMatMap am = as_matrix(a.value());
    ConstMatMap bm = as_matrix(b.value());
    if (am.cols() != bm.rows()) {
        throw std::invalid_argument("tape: matmul inner dimensions " + a.value().shape_string() +
                                    " vs " + b.value().shape_string());
    }
    DenseArray out = DenseArray::zeros({a.value().rows(), b.value().cols()});
    as_matrix(out).noalias() = am * bm;
    check_finite(out, "matmul");
    std::size_t aid = a.id();
    std::size_t bid = b.id();
    return t->custom(std::move(out), {a, b},
                     [t, aid, bid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         ConstMatMap gm = as_matrix(g);
                         ConstMatMap am = as_matrix(t->value_of(aid));
                         ConstMatMap bm = as_matrix(t->value_of(bid));
                         as_matrix(*p[0]).noalias() += gm * bm.transpose();
                         as_matrix(*p[1]).noalias() += am.transpose() * gm;
                     });
}

Var matmul_nt(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "matmul_nt");
    ConstMatMap am = as_matrix(a.value());
    ConstMatMap bm = as_matrix(b.value());
    if (am.cols() != bm.cols()) {
        throw std::invalid_argument("tape: matmul_nt column counts " + a.value().shape_string() +
                                    " vs " + b.value().shape_string());
    }
    DenseArray out = DenseArray::zeros({a.value().rows(), b.value().rows()});
    as_matrix(out).noalias() = am * bm.transpose();
    check_finite(out, "matmul_nt");
    std::size_t aid = a.id();
    std::size_t bid = b.id();
    return t->custom(std::move(out), {a, b},
                     [t, aid, bid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         ConstMatMap gm = as_matrix(g);
                         ConstMatMap am = as_matrix(t->value_of(aid));
                         ConstMatMap bm = as_matrix(t->value_of(bid));
                         as_matrix(*p[0]).noalias() += gm * bm;
                         as_matrix(*p[1]).noalias() += gm.transpose() * am;
                     });
}

// ---- reductions ----------------------------------------------------------

Var sum_all(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: sum_all on an empty handle");
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
    DenseArray out = DenseArray::scalar(s);
    check_finite(out, "sum_all");
    return t->custom(std::move(out), {a},
                     [](const DenseArray& g, std::vector<DenseArray*>& p) {
                         double gv = g[0];
                         for (std::size_t i = 0; i < p[0]->size(); ++i) p[0]->data()[i] += gv;
                     });
}

Var mean_all(Var a) {
    if (a.size() == 0) throw std::invalid_argument("tape: mean_all of an empty array");
    return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

Var sum_rows(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: sum_rows on an empty handle");
    ConstMatMap am = as_matrix(a.value());
    const std::size_t rows = a.value().rows();
    const std::size_t cols = a.value().cols();
    DenseArray out = DenseArray::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r) out.data()[r] = am.row(static_cast<Eigen::Index>(r)).sum();
    check_finite(out, "sum_rows");
    return t->custom(std::move(out), {a},
                     [rows, cols](const DenseArray& g, std::vector<DenseArray*>& p) {
                         for (std::size_t r = 0; r < rows; ++r) {
                             double gv = g[r];
                             double* row = p[0]->data() + r * cols;
                             for (std::size_t c = 0; c < cols; ++c) row[c] += gv;
                         }
                     });
}

Var logsumexp_rows(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: logsumexp_rows on an empty handle");
    const DenseArray& av = a.value();
    if (av.rank() != 2) {
        throw std::invalid_argument("tape: logsumexp_rows expects a 2-D array, got " +
                                    av.shape_string());
    }
    const std::size_t rows = av.rows();
    const std::size_t cols = av.cols();
    if (cols == 0) throw std::invalid_argument("tape: logsumexp_rows of zero-width rows");
    DenseArray out = DenseArray::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = av.data() + r * cols;
        double m = row[0];
        for (std::size_t c = 1; c < cols; ++c) m = std::max(m, row[c]);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(row[c] - m);
        out.data()[r] = m + std::log(s);
    }
    check_finite(out, "logsumexp_rows");
    std::size_t aid = a.id();
    const std::size_t vid = t->node_count();
    return t->custom(std::move(out), {a},
                     [t, aid, vid, rows, cols](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& x = t->value_of(aid);
                         const DenseArray& y = t->value_of(vid);
                         for (std::size_t r = 0; r < rows; ++r) {
                             const double* row = x.data() + r * cols;
                             double* grow = p[0]->data() + r * cols;
                             for (std::size_t c = 0; c < cols; ++c) {
                                 grow[c] += g[r] * std::exp(row[c] - y[r]);
                             }
                         }
                     });
}

Var l2_normalize_rows(Var a) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: l2_normalize_rows on an empty handle");
    const DenseArray& av = a.value();
    if (av.rank() != 2) {
        throw std::invalid_argument("tape: l2_normalize_rows expects a 2-D array, got " +
                                    av.shape_string());
    }
    const std::size_t rows = av.rows();
    const std::size_t cols = av.cols();
    DenseArray out = av;
    std::vector<double> norms(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = av.data() + r * cols;
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * row[c];
        double n = std::sqrt(s);
        if (n == 0.0) {
            throw std::domain_error("tape: l2_normalize_rows on a zero row");
        }
        norms[r] = n;
        double* orow = out.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) orow[c] /= n;
    }
    check_finite(out, "l2_normalize_rows");
    const std::size_t vid = t->node_count();
    return t->custom(std::move(out), {a},
                     [t, vid, rows, cols, norms](const DenseArray& g, std::vector<DenseArray*>& p) {
                         // d/dx (x / |x|) applied to row vectors:
                         // (g - (g . y) y) / |x| with y the normalized row.
                         const DenseArray& y = t->value_of(vid);
                         for (std::size_t r = 0; r < rows; ++r) {
                             const double* yrow = y.data() + r * cols;
                             const double* grow = g.data() + r * cols;
                             double gy = 0.0;
                             for (std::size_t c = 0; c < cols; ++c) gy += grow[c] * yrow[c];
                             double* prow = p[0]->data() + r * cols;
                             for (std::size_t c = 0; c < cols; ++c) {
                                 prow[c] += (grow[c] - gy * yrow[c]) / norms[r];
                             }
                         }
                     });
}

Var rowwise_dot(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "rowwise_dot");
    require_same_shape(a.value(), b.value(), "rowwise_dot");
    if (a.value().rank() != 2) {
        throw std::invalid_argument("tape: rowwise_dot expects 2-D arrays, got " +
                                    a.value().shape_string());
    }
    const std::size_t rows = a.value().rows();
    const std::size_t cols = a.value().cols();
    DenseArray out = DenseArray::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* ar = a.value().data() + r * cols;
        const double* br = b.value().data() + r * cols;
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += ar[c] * br[c];
        out.data()[r] = s;
    }
    check_finite(out, "rowwise_dot");
    std::size_t aid = a.id();
    std::size_t bid = b.id();
    return t->custom(std::move(out), {a, b},
                     [t, aid, bid, rows, cols](const DenseArray& g, std::vector<DenseArray*>& p) {
                         const DenseArray& av = t->value_of(aid);
                         const DenseArray& bv = t->value_of(bid);
                         for (std::size_t r = 0; r < rows; ++r) {
                             const double* ar = av.data() + r * cols;
                             const double* br = bv.data() + r * cols;
                             double* pa = p[0]->data() + r * cols;
                             double* pb = p[1]->data() + r * cols;
                             for (std::size_t c = 0; c < cols; ++c) {
                                 pa[c] += g[r] * br[c];
                                 pb[c] += g[r] * ar[c];
                             }
                         }
                     });
}

Var dot(Var a, Var b) {
    Tape* t = require_same_tape(a, b, "dot");
    require_same_shape(a.value(), b.value(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i] * b.value()[i];
    DenseArray out = DenseArray::scalar(s);
    check_finite(out, "dot");
    std::size_t aid = a.id();
    std::size_t bid = b.id();
    return t->custom(std::move(out), {a, b},
                     [t, aid, bid](const DenseArray& g, std::vector<DenseArray*>& p) {
                         axpy(g[0], t->value_of(bid), *p[0]);
                         axpy(g[0], t->value_of(aid), *p[1]);
                     });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("tape: concat_cols of nothing");
    Tape* t = parts[0].tape();
    std::size_t rows = parts[0].value().rows();
    std::size_t total_cols = 0;
    for (Var p : parts) {
        if (p.tape() != t) throw std::invalid_argument("tape: concat_cols across tapes");
        if (p.value().rank() != 2 || p.value().rows() != rows) {
            throw std::invalid_argument("tape: concat_cols row mismatch, got " +
                                        p.value().shape_string());
        }
        total_cols += p.value().cols();
    }
    DenseArray out = DenseArray::zeros({rows, total_cols});
    std::vector<std::size_t> widths;
    widths.reserve(parts.size());
    std::size_t offset = 0;
    for (Var p : parts) {
        const std::size_t w = p.value().cols();
        widths.push_back(w);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* src = p.value().data() + r * w;
            double* dst = out.data() + r * total_cols + offset;
            std::copy(src, src + w, dst);
        }
        offset += w;
    }
    return t->custom(std::move(out), parts,
                     [rows, total_cols, widths](const DenseArray& g, std::vector<DenseArray*>& p) {
                         std::size_t offset = 0;
                         for (std::size_t k = 0; k < widths.size(); ++k) {
                             const std::size_t w = widths[k];
                             for (std::size_t r = 0; r < rows; ++r) {
                                 const double* src = g.data() + r * total_cols + offset;
                                 double* dst = p[k]->data() + r * w;
                                 for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
                             }
                             offset += w;
                         }
                     });
}

Var gather(Var a, const std::vector<std::size_t>& indices, std::vector<std::size_t> out_shape) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: gather on an empty handle");
    if (indices.size() != shape_product(out_shape)) {
        throw std::invalid_argument("tape: gather index count does not match output shape");
    }
    const DenseArray& av = a.value();
    std::vector<double> vals(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= av.size()) {
            throw std::out_of_range("tape: gather index " + std::to_string(indices[i]) +
                                    " out of range for " + std::to_string(av.size()) + " elements");
        }
        vals[i] = av[indices[i]];
    }
    DenseArray out(std::move(out_shape), std::move(vals));
    return t->custom(std::move(out), {a},
                     [indices](const DenseArray& g, std::vector<DenseArray*>& p) {
                         for (std::size_t i = 0; i < indices.size(); ++i) {
                             p[0]->data()[indices[i]] += g[i];
                         }
                     });
}

Var reshape(Var a, std::vector<std::size_t> shape) {
    Tape* t = a.tape();
    if (t == nullptr) throw std::invalid_argument("tape: reshape on an empty handle");
    if (shape_product(shape) != a.value().size()) {
        throw std::invalid_argument("tape: reshape size mismatch for " + a.value().shape_string());
    }
    DenseArray out(std::move(shape), std::vector<double>(a.value().values().begin(),
                                                         a.value().values().end()));
    return t->custom(std::move(out), {a},
                     [](const DenseArray& g, std::vector<DenseArray*>& p) { axpy(1.0, g, *p[0]); });
}

Var add_rowvec(Var a, Var row) {
    Tape* t = require_same_tape(a, row, "add_rowvec");
    const DenseArray& av = a.value();
    const DenseArray& rv = row.value();
    if (av.rank() != 2 || rv.rank() != 1 || rv.size() != av.cols()) {
        throw std::invalid_argument("tape: add_rowvec shapes " + av.shape_string() + " vs " +
                                    rv.shape_string());
    }
    const std::size_t rows = av.rows();
    const std::size_t cols = av.cols();
    DenseArray out = av;
    for (std::size_t r = 0; r < rows; ++r) {
        double* orow = out.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) orow[c] += rv[c];
    }
    check_finite(out, "add_rowvec");
    return t->custom(std::move(out), {a, row},
                     [rows, cols](const DenseArray& g, std::vector<DenseArray*>& p) {
                         axpy(1.0, g, *p[0]);
                         for (std::size_t r = 0; r < rows; ++r) {
                             const double* grow = g.data() + r * cols;
                             for (std::size_t c = 0; c < cols; ++c) p[1]->data()[c] += grow[c];
                         }
                     });
}

}  // namespace geossl
