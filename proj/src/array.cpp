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

#include "geossl/array.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace geossl {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_)) {
        throw std::invalid_argument("DenseArray: data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_string());
    }
}

DenseArray DenseArray::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    return DenseArray(std::move(shape), std::vector<double>(n, 0.0));
}

DenseArray DenseArray::full(std::vector<std::size_t> shape, double value) {
    std::size_t n = shape_product(shape);
    return DenseArray(std::move(shape), std::vector<double>(n, value));
}

DenseArray DenseArray::scalar(double value) {
    return DenseArray({1}, {value});
}

DenseArray DenseArray::vector(std::vector<double> data) {
    std::size_t n = data.size();
    return DenseArray({n}, std::move(data));
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return DenseArray({rows, cols}, std::move(data));
}

bool DenseArray::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string DenseArray::shape_string() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ", ";
        os << shape_[i];
    }
    os << ")";
    return os.str();
}

}  // namespace geossl
