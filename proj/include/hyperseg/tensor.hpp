//*****************************************************************************
// Copyright 2026 The HyperSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//*****************************************************************************

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hyperseg {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major N-d array of doubles. Image-like tensors use the axis order
// (channel, x, y): a C x W x H tensor stores pixel (x, y) of channel c at
// (c * W + x) * H + y.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    // Rank-2 identity.
    static Tensor eye(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const;
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t flat) noexcept { return data_[flat]; }
    double operator[](std::size_t flat) const noexcept { return data_[flat]; }

    // Bounds-checked multi-index access.
    double& at(std::initializer_list<std::size_t> index);
    double at(std::initializer_list<std::size_t> index) const;

    // Unchecked accessors for the common ranks.
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * shape_[1] + j]; }
    double& operator()(std::size_t c, std::size_t x, std::size_t y) noexcept {
        return data_[(c * shape_[1] + x) * shape_[2] + y];
    }
    double operator()(std::size_t c, std::size_t x, std::size_t y) const noexcept {
        return data_[(c * shape_[1] + x) * shape_[2] + y];
    }

    // Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const;

    // Contiguous view of one index along axis 0 (e.g. one channel or one tile).
    std::span<double> slab(std::size_t i);
    std::span<const double> slab(std::size_t i) const;

    bool all_finite() const noexcept;
    // Throws NumericError naming `what` if any entry is NaN/Inf.
    void require_finite(const std::string& what) const;

    double frobenius_norm() const noexcept;
    double squared_norm() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Concatenate along axis 0; all trailing extents must match.
Tensor concat0(std::span<const Tensor> parts);
// Channels [begin, end) along axis 0.
Tensor slice0(const Tensor& t, std::size_t begin, std::size_t end);

// Mode-n unfolding. Row i holds every entry whose `mode` index is i; columns
// enumerate the remaining axes in increasing axis order, last axis fastest.
Tensor unfold(const Tensor& t, std::size_t mode);
Tensor fold(const Tensor& m, std::size_t mode, const Shape& shape);

Tensor matmul(const Tensor& a, const Tensor& b);
// a^T b without materialising the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);

}  // namespace hyperseg
