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

#include <functional>
#include <vector>

#include "geossl/array.hpp"

namespace geossl {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const DenseArray& value() const;
    const std::vector<std::size_t>& shape() const { return value().shape(); }
    std::size_t size() const { return value().size(); }
    double scalar_value() const;

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Adjoints for every node reached from the backward root.
class Gradients {
public:
    /// Adjoint of `v`; zero array of matching shape if `v` is not on any
    /// path to the root.
    const DenseArray& wrt(Var v) const;

private:
    friend class Tape;
    Gradients(std::vector<DenseArray> adjoints, const Tape* tape)
        : adjoints_(std::move(adjoints)), tape_(tape) {}

    mutable std::vector<DenseArray> adjoints_;
    const Tape* tape_;
};

/// Eager reverse-mode tape over DenseArray values. One tape per training
/// step; record as you execute, then call backward() on a scalar root.
/// Node values are immutable once recorded, so concurrent reads are safe;
/// recording and backward belong to a single logical thread.
class Tape {
public:
    /// Backward rule: accumulate into `adjoints[parent]` given the node's
    /// own adjoint. Parent slots are pre-allocated to zeros.
    using BackwardRule =
        std::function<void(const DenseArray& self_adjoint, std::vector<DenseArray*>& parent_adjoints)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Record an input (leaf) value.
    Var input(DenseArray value);

    /// Record a value that participates in the graph but is conceptually a
    /// constant (detached data, labels, masks). Mechanically identical to
    /// input(); gradients for it are simply never queried.
    Var constant(DenseArray value) { return input(std::move(value)); }

    /// Record an op result with a custom backward rule. This is the
    /// registration point for ops whose VJP is not a composition of
    /// primitives (soft rank uses it).
    Var custom(DenseArray value, const std::vector<Var>& parents, BackwardRule rule);

    /// Reverse sweep from a scalar root; returns adjoints for every node.
    /// Multiple paths accumulate by addition.
    Gradients backward(Var root) const;

    const DenseArray& value_of(std::size_t id) const { return nodes_[id].value; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        DenseArray value;
        std::vector<std::size_t> parents;
        BackwardRule rule;  // empty for leaves
    };

    std::vector<Node> nodes_;
};

// ---- primitive ops -------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var neg(Var a);
Var exp_op(Var a);
Var log_op(Var a);
Var square(Var a);
Var relu(Var a);

/// (m x k) * (k x n)
Var matmul(Var a, Var b);
/// a * b^T written without materializing the transpose: (m x k) * (n x k)^T.
/// matmul_nt(z, z) is the similarity matrix of row-normalized embeddings.
Var matmul_nt(Var a, Var b);

Var sum_all(Var a);
Var mean_all(Var a);
/// Row sums of a 2-D array (axis = 1); result has shape (rows).
Var sum_rows(Var a);
/// Row-wise logsumexp of a 2-D array, shift-stabilized; shape (rows).
Var logsumexp_rows(Var a);
/// Rows scaled to unit L2 norm; a zero row is an error.
Var l2_normalize_rows(Var a);
/// Row-wise dot products of two equal-shape 2-D arrays; shape (rows).
Var rowwise_dot(Var a, Var b);
/// 1-D dot product, scalar result.
Var dot(Var a, Var b);
/// Column-wise concatenation of 2-D arrays with equal row counts.
Var concat_cols(const std::vector<Var>& parts);
/// out.flat[t] = a.flat[indices[t]]; duplicate indices accumulate adjoints.
Var gather(Var a, const std::vector<std::size_t>& indices, std::vector<std::size_t> out_shape);
/// Same data, new shape; sizes must agree.
Var reshape(Var a, std::vector<std::size_t> shape);
/// Adds a length-n vector to every row of an (m x n) array.
Var add_rowvec(Var a, Var row);

}  // namespace geossl
