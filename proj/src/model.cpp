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

#include "geossl/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace geossl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");
static_assert(sizeof(double) == 8);

const std::vector<std::string>& Encoder::param_names() {
    static const std::vector<std::string> names = {"w1", "b1", "w2", "b2",
                                                   "w3", "b3", "wp", "bp"};
    return names;
}

Encoder Encoder::init(const EncoderConfig& cfg, Rng& rng) {
    if (cfg.input_dim == 0 || cfg.hidden_dim == 0 || cfg.feature_dim == 0 ||
        cfg.projection_dim == 0) {
        throw std::invalid_argument("Encoder: all dimensions must be positive");
    }
    auto he_matrix = [&rng](std::size_t fan_in, std::size_t fan_out) {
        DenseArray w = DenseArray::zeros({fan_in, fan_out});
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, stddev);
        return w;
    };
    // Biases get a small random jitter rather than zeros: with narrow
    // layers a fully dead relu column would otherwise leave an exact zero
    // row, which the normalizer rejects.
    auto jitter = [&rng](std::size_t n) {
        DenseArray b = DenseArray::zeros({n});
        for (std::size_t i = 0; i < n; ++i) b[i] = rng.normal(0.0, 0.01);
        return b;
    };
    Encoder enc;
    enc.cfg = cfg;
    enc.params.push_back(he_matrix(cfg.input_dim, cfg.hidden_dim));
    enc.params.push_back(jitter(cfg.hidden_dim));
    enc.params.push_back(he_matrix(cfg.hidden_dim, cfg.hidden_dim));
    enc.params.push_back(jitter(cfg.hidden_dim));
    enc.params.push_back(he_matrix(cfg.hidden_dim, cfg.feature_dim));
    enc.params.push_back(jitter(cfg.feature_dim));
    enc.params.push_back(he_matrix(cfg.feature_dim, cfg.projection_dim));
    enc.params.push_back(jitter(cfg.projection_dim));
    return enc;
}

EncodeResult encode(Tape& tape, const Encoder& enc, const DenseArray& input, bool trainable) {
    if (input.rank() != 2 || input.cols() != enc.cfg.input_dim) {
        throw std::invalid_argument("encode: input shape " + input.shape_string() +
                                    " does not match input_dim " +
                                    std::to_string(enc.cfg.input_dim));
    }
    EncodeResult out;
    out.params.reserve(enc.params.size());
    for (const DenseArray& p : enc.params) {
        out.params.push_back(trainable ? tape.input(p) : tape.constant(p));
    }
    Var x = tape.constant(input);
    Var h1 = relu(add_rowvec(matmul(x, out.params[0]), out.params[1]));
    Var h2 = relu(add_rowvec(matmul(h1, out.params[2]), out.params[3]));
    out.features = add_rowvec(matmul(h2, out.params[4]), out.params[5]);
    Var head = add_rowvec(matmul(out.features, out.params[6]), out.params[7]);
    out.projections = l2_normalize_rows(head);
    return out;
}

DenseArray encode_features(const Encoder& enc, const DenseArray& input) {
    Tape tape;
    EncodeResult r = encode(tape, enc, input, false);
    DenseArray features = r.features.value();
    for (std::size_t row = 0; row < features.rows(); ++row) {
        double s = 0.0;
        for (std::size_t c = 0; c < features.cols(); ++c) {
            s += features.at(row, c) * features.at(row, c);
        }
        const double norm = std::sqrt(s);
        if (norm == 0.0) throw std::domain_error("encode_features: zero feature row");
        for (std::size_t c = 0; c < features.cols(); ++c) features.at(row, c) /= norm;
    }
    return features;
}

void ema_update(Encoder& target, const Encoder& online, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("ema_update: m must lie in [0, 1]");
    if (target.params.size() != online.params.size()) {
        throw std::invalid_argument("ema_update: parameter structure mismatch");
    }
    for (std::size_t k = 0; k < target.params.size(); ++k) {
        DenseArray& t = target.params[k];
        const DenseArray& o = online.params[k];
        if (!t.same_shape(o)) throw std::invalid_argument("ema_update: shape mismatch");
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = m * t[i] + (1.0 - m) * o[i];
    }
}

double momentum_at(std::size_t step, std::size_t total_steps) {
    if (total_steps == 0 || step > total_steps) {
        throw std::invalid_argument("momentum_at: step out of range");
    }
    const double phase = std::numbers::pi * static_cast<double>(step) /
                         static_cast<double>(total_steps);
    return 1.0 - (1.0 - 0.996) * (std::cos(phase) + 1.0) / 2.0;
}

SgdOptimizer::SgdOptimizer(const Encoder& enc, SgdConfig cfg) : cfg_(cfg) {
    velocity_.reserve(enc.params.size());
    for (const DenseArray& p : enc.params) velocity_.push_back(DenseArray::zeros(p.shape()));
}

void SgdOptimizer::step(Encoder& enc, const std::vector<DenseArray>& grads) {
    if (grads.size() != enc.params.size()) {
        throw std::invalid_argument("SgdOptimizer: gradient count mismatch");
    }
    for (std::size_t k = 0; k < enc.params.size(); ++k) {
        DenseArray& p = enc.params[k];
        DenseArray& v = velocity_[k];
        const DenseArray& g = grads[k];
        if (!p.same_shape(g)) throw std::invalid_argument("SgdOptimizer: gradient shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = cfg_.momentum * v[i] + (g[i] + cfg_.weight_decay * p[i]);
            p[i] -= cfg_.lr * v[i];
        }
    }
}

MemoryQueue::MemoryQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), storage_(capacity * dim, 0.0) {
    if (capacity == 0 || dim == 0) {
        throw std::invalid_argument("MemoryQueue: capacity and dim must be positive");
    }
}

void MemoryQueue::push(const DenseArray& embeddings) {
    if (embeddings.rank() != 2 || embeddings.cols() != dim_) {
        throw std::invalid_argument("MemoryQueue: expected (K, " + std::to_string(dim_) +
                                    "), got " + embeddings.shape_string());
    }
    const std::size_t k = embeddings.rows();
    if (k > capacity_) throw std::invalid_argument("MemoryQueue: push exceeds capacity");
    for (std::size_t r = 0; r < k; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) s += embeddings.at(r, c) * embeddings.at(r, c);
        if (std::abs(std::sqrt(s) - 1.0) > 1e-9) {
            throw std::invalid_argument("MemoryQueue: row " + std::to_string(r) +
                                        " is not unit length");
        }
        std::memcpy(storage_.data() + cursor_ * dim_, embeddings.data() + r * dim_,
                    dim_ * sizeof(double));
        cursor_ = (cursor_ + 1) % capacity_;
        filled_ = std::min(filled_ + 1, capacity_);
    }
}

DenseArray MemoryQueue::snapshot() const {
    DenseArray out = DenseArray::zeros({filled_, dim_});
    if (filled_ == 0) return out;
    // Before wrap-around the cursor equals the fill level, so the oldest
    // retained row starts at the cursor in both regimes modulo size.
    const std::size_t start = filled_ < capacity_ ? 0 : cursor_;
    for (std::size_t r = 0; r < filled_; ++r) {
        const std::size_t src = (start + r) % capacity_;
        std::memcpy(out.data() + r * dim_, storage_.data() + src * dim_, dim_ * sizeof(double));
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'L', 'C'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_arrays(const std::string& path, const NamedArrays& arrays) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, arr] : arrays) {
        if (name.size() > 0xFFFF) throw std::invalid_argument("checkpoint: name too long");
        write_pod(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::uint8_t>(arr.rank()));
        for (std::size_t e : arr.shape()) write_pod(os, static_cast<std::uint64_t>(e));
        os.write(reinterpret_cast<const char*>(arr.data()),
                 static_cast<std::streamsize>(arr.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

NamedArrays load_arrays(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint8_t>(is);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = read_pod<std::uint32_t>(is);
    NamedArrays arrays;
    arrays.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto name_len = read_pod<std::uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndim = read_pod<std::uint8_t>(is);
        std::vector<std::size_t> shape(ndim);
        for (auto& e : shape) e = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
        const std::size_t n = shape_product(shape);
        std::vector<double> data(n);
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated array data in " + path);
        arrays.emplace_back(std::move(name), DenseArray(std::move(shape), std::move(data)));
    }
    return arrays;
}

NamedArrays encoder_arrays(const Encoder& enc, const std::string& prefix) {
    NamedArrays out;
    const auto& names = Encoder::param_names();
    for (std::size_t k = 0; k < enc.params.size(); ++k) {
        out.emplace_back(prefix + names[k], enc.params[k]);
    }
    return out;
}

void load_encoder_arrays(Encoder& enc, const NamedArrays& arrays, const std::string& prefix) {
    const auto& names = Encoder::param_names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const std::string want = prefix + names[k];
        bool found = false;
        for (const auto& [name, arr] : arrays) {
            if (name != want) continue;
            if (!arr.same_shape(enc.params[k])) {
                throw std::runtime_error("checkpoint: shape mismatch for " + want);
            }
            enc.params[k] = arr;
            found = true;
            break;
        }
        if (!found) throw std::runtime_error("checkpoint: missing array " + want);
    }
}

}  // namespace geossl
