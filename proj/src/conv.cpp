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

#include "hyperseg/conv.hpp"

#include <algorithm>

#include "hyperseg/errors.hpp"

namespace hyperseg {
namespace {

struct ConvDims {
    std::size_t in_c, out_c, k, w, h;
};

ConvDims check_conv(const Tensor& input, const Tensor& weights, std::size_t dilation) {
    if (input.rank() != 3) {
        throw ArgumentError("conv2d: input must be C x W x H, got " + shape_to_string(input.shape()));
    }
    if (weights.rank() != 4 || weights.extent(2) != weights.extent(3) || weights.extent(2) % 2 == 0) {
        throw ArgumentError("conv2d: weights must be out x in x k x k with odd k, got " +
                            shape_to_string(weights.shape()));
    }
    if (weights.extent(1) != input.extent(0)) {
        throw ArgumentError("conv2d: weights expect " + std::to_string(weights.extent(1)) + " input channels, got " +
                            std::to_string(input.extent(0)));
    }
    if (dilation == 0) {
        throw ArgumentError("conv2d: dilation must be positive");
    }
    return {input.extent(0), weights.extent(0), weights.extent(2), input.extent(1), input.extent(2)};
}

// Output range [lo, hi) along one axis for which in = out + offset is valid.
inline void valid_range(long offset, std::size_t n, std::size_t& lo, std::size_t& hi) {
    const long ln = static_cast<long>(n);
    lo = static_cast<std::size_t>(std::clamp(-offset, 0L, ln));
    hi = static_cast<std::size_t>(std::clamp(ln - offset, 0L, ln));
}

}  // namespace

Tensor conv2d_same(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t dilation) {
    const auto d = check_conv(input, weights, dilation);
    if (bias.size() != d.out_c) {
        throw ArgumentError("conv2d: bias length " + std::to_string(bias.size()) + " != " + std::to_string(d.out_c));
    }
    const long half = static_cast<long>(d.k / 2);
    const std::size_t plane = d.w * d.h;
    Tensor out({d.out_c, d.w, d.h});
    for (std::size_t o = 0; o < d.out_c; ++o) {
        double* dst = out.data().data() + o * plane;
        std::fill(dst, dst + plane, bias[o]);
        for (std::size_t i = 0; i < d.in_c; ++i) {
            const double* src = input.data().data() + i * plane;
            for (std::size_t kx = 0; kx < d.k; ++kx) {
                const long dx = (static_cast<long>(kx) - half) * static_cast<long>(dilation);
                std::size_t x0, x1;
                valid_range(dx, d.w, x0, x1);
                for (std::size_t ky = 0; ky < d.k; ++ky) {
                    const double wv = weights[((o * d.in_c + i) * d.k + kx) * d.k + ky];
                    if (wv == 0.0) continue;
                    const long dy = (static_cast<long>(ky) - half) * static_cast<long>(dilation);
                    std::size_t y0, y1;
                    valid_range(dy, d.h, y0, y1);
                    for (std::size_t x = x0; x < x1; ++x) {
                        double* row = dst + x * d.h;
                        const double* srow = src + (static_cast<long>(x) + dx) * static_cast<long>(d.h) + dy;
                        for (std::size_t y = y0; y < y1; ++y) row[y] += wv * srow[y];
                    }
                }
            }
        }
    }
    return out;
}

ConvGrads conv2d_same_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                               std::size_t dilation, bool need_input_grad) {
    const auto d = check_conv(input, weights, dilation);
    if (grad_out.shape() != Shape{d.out_c, d.w, d.h}) {
        throw ArgumentError("conv2d_backward: upstream gradient shape " + shape_to_string(grad_out.shape()));
    }
    const long half = static_cast<long>(d.k / 2);
    const std::size_t plane = d.w * d.h;
    ConvGrads g;
    g.weights = Tensor(weights.shape());
    g.bias = Tensor({d.out_c});
    if (need_input_grad) g.input = Tensor(input.shape());

    for (std::size_t o = 0; o < d.out_c; ++o) {
        const double* go = grad_out.data().data() + o * plane;
        double b = 0.0;
        for (std::size_t p = 0; p < plane; ++p) b += go[p];
        g.bias[o] = b;
        for (std::size_t i = 0; i < d.in_c; ++i) {
            const double* src = input.data().data() + i * plane;
            double* gin = need_input_grad ? g.input.data().data() + i * plane : nullptr;
            for (std::size_t kx = 0; kx < d.k; ++kx) {
                const long dx = (static_cast<long>(kx) - half) * static_cast<long>(dilation);
                std::size_t x0, x1;
                valid_range(dx, d.w, x0, x1);
                for (std::size_t ky = 0; ky < d.k; ++ky) {
                    const std::size_t widx = ((o * d.in_c + i) * d.k + kx) * d.k + ky;
                    const double wv = weights[widx];
                    const long dy = (static_cast<long>(ky) - half) * static_cast<long>(dilation);
                    std::size_t y0, y1;
                    valid_range(dy, d.h, y0, y1);
                    double acc = 0.0;
                    for (std::size_t x = x0; x < x1; ++x) {
                        const double* grow = go + x * d.h;
                        const long shift = (static_cast<long>(x) + dx) * static_cast<long>(d.h) + dy;
                        const double* srow = src + shift;
                        for (std::size_t y = y0; y < y1; ++y) acc += grow[y] * srow[y];
                        if (gin != nullptr && wv != 0.0) {
                            double* girow = gin + shift;
                            for (std::size_t y = y0; y < y1; ++y) girow[y] += wv * grow[y];
                        }
                    }
                    g.weights[widx] += acc;
                }
            }
        }
    }
    return g;
}

Tensor avg_pool(const Tensor& input, std::size_t factor) {
    if (input.rank() != 3 || factor == 0) {
        throw ArgumentError("avg_pool: C x W x H input and positive factor required");
    }
    if (factor == 1) return input;
    const std::size_t c = input.extent(0), w = input.extent(1), h = input.extent(2);
    if (w % factor != 0 || h % factor != 0) {
        throw ArgumentError("avg_pool: extents " + shape_to_string(input.shape()) + " not divisible by " +
                            std::to_string(factor));
    }
    const std::size_t ow = w / factor, oh = h / factor;
    const double scale = 1.0 / static_cast<double>(factor * factor);
    Tensor out({c, ow, oh});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t y = 0; y < h; ++y) out(ch, x / factor, y / factor) += input(ch, x, y) * scale;
    return out;
}

}  // namespace hyperseg
