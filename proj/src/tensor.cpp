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

#include "hyperseg/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hyperseg/errors.hpp"

namespace hyperseg {

std::size_t shape_product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto e : shape_) {
        if (e == 0) {
            throw ArgumentError("tensor extents must be positive, got " + shape_to_string(shape_));
        }
    }
    data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto e : shape_) {
        if (e == 0) {
            throw ArgumentError("tensor extents must be positive, got " + shape_to_string(shape_));
        }
    }
    if (shape_product(shape_) != data_.size()) {
        throw ArgumentError("shape " + shape_to_string(shape_) + " does not match " +
                            std::to_string(data_.size()) + " elements");
    }
}

Tensor Tensor::eye(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        t(i, i) = 1.0;
    }
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ArgumentError("axis " + std::to_string(axis) + " out of range for rank " +
                            std::to_string(shape_.size()));
    }
    return shape_[axis];
}

namespace {

std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> index) {
    if (index.size() != shape.size()) {
        throw ArgumentError("index rank mismatch");
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= shape[axis]) {
            throw ArgumentError("index out of range on axis " + std::to_string(axis));
        }
        flat = flat * shape[axis] + i;
        ++axis;
    }
    return flat;
}

}  // namespace

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[flat_index(shape_, index)]; }

double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[flat_index(shape_, index)]; }

Tensor Tensor::reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
}

std::span<double> Tensor::slab(std::size_t i) {
    const std::size_t n = data_.size() / extent(0);
    if (i >= shape_[0]) {
        throw ArgumentError("slab index out of range");
    }
    return std::span<double>(data_).subspan(i * n, n);
}

std::span<const double> Tensor::slab(std::size_t i) const {
    const std::size_t n = data_.size() / extent(0);
    if (i >= shape_[0]) {
        throw ArgumentError("slab index out of range");
    }
    return std::span<const double>(data_).subspan(i * n, n);
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void Tensor::require_finite(const std::string& what) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw NumericError(what + ": non-finite value at flat index " + std::to_string(i) +
                               " of tensor " + shape_to_string(shape_));
        }
    }
}

double Tensor::squared_norm() const noexcept {
    double s = 0.0;
    for (double v : data_) {
        s += v * v;
    }
    return s;
}

double Tensor::frobenius_norm() const noexcept { return std::sqrt(squared_norm()); }

Tensor concat0(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw ArgumentError("concat0: nothing to concatenate");
    }
    Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
    std::size_t lead = 0;
    std::vector<double> data;
    for (const auto& p : parts) {
        if (p.rank() != tail.size() + 1 || !std::equal(tail.begin(), tail.end(), p.shape().begin() + 1)) {
            throw ArgumentError("concat0: trailing extents differ: " + shape_to_string(parts[0].shape()) +
                                " vs " + shape_to_string(p.shape()));
        }
        lead += p.extent(0);
        data.insert(data.end(), p.storage().begin(), p.storage().end());
    }
    Shape shape{lead};
    shape.insert(shape.end(), tail.begin(), tail.end());
    return Tensor(std::move(shape), std::move(data));
}

Tensor slice0(const Tensor& t, std::size_t begin, std::size_t end) {
    if (begin >= end || end > t.extent(0)) {
        throw ArgumentError("slice0: bad range [" + std::to_string(begin) + "," + std::to_string(end) + ")");
    }
    const std::size_t n = t.size() / t.extent(0);
    Shape shape = t.shape();
    shape[0] = end - begin;
    return Tensor(std::move(shape),
                  std::vector<double>(t.storage().begin() + begin * n, t.storage().begin() + end * n));
}

// With row-major storage, an index (i_0..i_{N-1}) splits into outer (axes
// before mode), the mode index, and inner (axes after mode). The column of
// the unfolding is outer * inner_size + inner, which cycles the remaining
// axes in increasing order with the last axis fastest.
Tensor unfold(const Tensor& t, std::size_t mode) {
    if (mode >= t.rank()) {
        throw ArgumentError("unfold: mode " + std::to_string(mode) + " out of range for rank " +
                            std::to_string(t.rank()));
    }
    const auto& s = t.shape();
    std::size_t outer = 1;
    for (std::size_t a = 0; a < mode; ++a) outer *= s[a];
    std::size_t inner = 1;
    for (std::size_t a = mode + 1; a < s.size(); ++a) inner *= s[a];
    const std::size_t n = s[mode];

    Tensor m({n, outer * inner});
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = t.data().data() + (o * n + i) * inner;
            double* dst = m.data().data() + i * outer * inner + o * inner;
            std::copy(src, src + inner, dst);
        }
    }
    return m;
}

Tensor fold(const Tensor& m, std::size_t mode, const Shape& shape) {
    if (mode >= shape.size()) {
        throw ArgumentError("fold: mode out of range");
    }
    std::size_t outer = 1;
    for (std::size_t a = 0; a < mode; ++a) outer *= shape[a];
    std::size_t inner = 1;
    for (std::size_t a = mode + 1; a < shape.size(); ++a) inner *= shape[a];
    const std::size_t n = shape[mode];
    if (m.rank() != 2 || m.extent(0) != n || m.extent(1) != outer * inner) {
        throw ArgumentError("fold: matrix " + shape_to_string(m.shape()) + " incompatible with shape " +
                            shape_to_string(shape));
    }
    Tensor t(shape);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = m.data().data() + i * outer * inner + o * inner;
            double* dst = t.data().data() + (o * n + i) * inner;
            std::copy(src, src + inner, dst);
        }
    }
    return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
        throw ArgumentError("matmul: incompatible " + shape_to_string(a.shape()) + " x " +
                            shape_to_string(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c.data().data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            const double* brow = b.data().data() + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aip * brow[j];
            }
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(0) != b.extent(0)) {
        throw ArgumentError("matmul_tn: incompatible " + shape_to_string(a.shape()) + "^T x " +
                            shape_to_string(b.shape()));
    }
    const std::size_t k = a.extent(0), m = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b.data().data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = a(p, i);
            if (api == 0.0) continue;
            double* crow = c.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += api * brow[j];
            }
        }
    }
    return c;
}

Tensor transpose(const Tensor& m) {
    if (m.rank() != 2) {
        throw ArgumentError("transpose: rank-2 tensor required");
    }
    Tensor t({m.extent(1), m.extent(0)});
    for (std::size_t i = 0; i < m.extent(0); ++i) {
        for (std::size_t j = 0; j < m.extent(1); ++j) {
            t(j, i) = m(i, j);
        }
    }
    return t;
}

}  // namespace hyperseg
