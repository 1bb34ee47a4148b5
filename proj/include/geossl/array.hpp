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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace geossl {

/// Dense row-major float64 array of arbitrary rank (rank 1-4 in practice).
/// Values are immutable once a node owns them; the container itself is a
/// plain value type.
class DenseArray {
public:
    DenseArray() = default;
    DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

    static DenseArray zeros(std::vector<std::size_t> shape);
    static DenseArray full(std::vector<std::size_t> shape, double value);
    static DenseArray scalar(double value);
    static DenseArray vector(std::vector<double> data);
    static DenseArray matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }

    std::size_t rows() const { return shape_[0]; }
    std::size_t cols() const { return shape_[1]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-D access
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_string() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace geossl
