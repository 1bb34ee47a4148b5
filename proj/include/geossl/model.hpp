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
#include <utility>
#include <vector>

#include "geossl/array.hpp"
#include "geossl/rng.hpp"
#include "geossl/tape.hpp"

namespace geossl {

struct EncoderConfig {
    std::size_t input_dim = 0;       // flattened patch length
    std::size_t hidden_dim = 64;
    std::size_t feature_dim = 48;    // backbone output, used for evaluation
    std::size_t projection_dim = 32; // head output, used by the losses
};

/// Two-hidden-layer MLP backbone plus a linear projection head. Parameters
/// live here as plain arrays; each training step records them on a fresh
/// tape. Weight layout: x row vectors, so layer output = x W + b.
struct Encoder {
    EncoderConfig cfg;
    std::vector<DenseArray> params;

    static const std::vector<std::string>& param_names();  // parallel to params
    static Encoder init(const EncoderConfig& cfg, Rng& rng);
};

/// Forward pass recorded on a tape. `params` holds the leaves in
/// Encoder::param_names() order when trainable, or constants otherwise.
/// features are raw backbone rows (D); projections are unit rows (D_proj).
struct EncodeResult {
    std::vector<Var> params;
    Var features;
    Var projections;
};

EncodeResult encode(Tape& tape, const Encoder& enc, const DenseArray& input, bool trainable);

/// Evaluation helper: backbone features, rows L2-normalized, no tape kept.
DenseArray encode_features(const Encoder& enc, const DenseArray& input);

/// target <- m * target + (1 - m) * online, elementwise over all params.
void ema_update(Encoder& target, const Encoder& online, double m);

/// Cosine ramp from 0.996 at step 0 to 1.0 at step = total_steps.
double momentum_at(std::size_t step, std::size_t total_steps);

struct SgdConfig {
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 0.0;
};

/// SGD with classical momentum: v <- mu v + (g + wd p); p <- p - lr v.
class SgdOptimizer {
public:
    SgdOptimizer(const Encoder& enc, SgdConfig cfg);
    void step(Encoder& enc, const std::vector<DenseArray>& grads);
    const SgdConfig& config() const { return cfg_; }

private:
    SgdConfig cfg_;
    std::vector<DenseArray> velocity_;
};

/// Fixed-capacity FIFO ring of detached unit-norm embeddings. Starts
/// empty and grows to capacity, then evicts oldest-first.
class MemoryQueue {
public:
    MemoryQueue(std::size_t capacity, std::size_t dim);

    /// Appends each row of a (K, dim) array; K must not exceed capacity.
    void push(const DenseArray& embeddings);

    /// Current contents, oldest retained row first; shape (size, dim).
    DenseArray snapshot() const;

    std::size_t size() const { return filled_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t cursor_ = 0;
    std::size_t filled_ = 0;
    std::vector<double> storage_;
};

using NamedArrays = std::vector<std::pair<std::string, DenseArray>>;

/// Binary checkpoint of named float64 arrays; round-trips bit-exactly.
void save_arrays(const std::string& path, const NamedArrays& arrays);
NamedArrays load_arrays(const std::string& path);

NamedArrays encoder_arrays(const Encoder& enc, const std::string& prefix);
void load_encoder_arrays(Encoder& enc, const NamedArrays& arrays, const std::string& prefix);

}  // namespace geossl
