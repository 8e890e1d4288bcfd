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

#include "hyperseg/resize.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "hyperseg/errors.hpp"

namespace hyperseg {

ResizeMethod parse_resize_method(std::string_view name) {
    if (name == "nearest") return ResizeMethod::Nearest;
    if (name == "bilinear") return ResizeMethod::Bilinear;
    throw ArgumentError("unknown resize method '" + std::string(name) + "'");
}

namespace {

struct Tap {
    std::size_t lo;
    std::size_t hi;
    double frac;  // weight of hi
};

std::vector<Tap> axis_taps(std::size_t in, std::size_t out, ResizeMethod method) {
    std::vector<Tap> taps(out);
    for (std::size_t d = 0; d < out; ++d) {
        if (method == ResizeMethod::Nearest) {
            const std::size_t s = std::min(in - 1, d * in / out);
            taps[d] = {s, s, 0.0};
        } else {
            const double pos = out == 1 ? 0.0 : static_cast<double>(d) * static_cast<double>(in - 1) /
                                                     static_cast<double>(out - 1);
            const std::size_t lo = std::min(in - 1, static_cast<std::size_t>(std::floor(pos)));
            const std::size_t hi = std::min(in - 1, lo + 1);
            taps[d] = {lo, hi, pos - static_cast<double>(lo)};
        }
    }
    return taps;
}

}  // namespace

Tensor resize2d(const Tensor& t, std::size_t out_w, std::size_t out_h, ResizeMethod method) {
    if (t.rank() < 2) {
        throw ArgumentError("resize2d: need at least two spatial axes, got " + shape_to_string(t.shape()));
    }
    if (out_w == 0 || out_h == 0) {
        throw ArgumentError("resize2d: target extents must be positive");
    }
    const std::size_t r = t.rank();
    const std::size_t in_w = t.extent(r - 2);
    const std::size_t in_h = t.extent(r - 1);
    if (in_w == out_w && in_h == out_h) {
        return t;
    }
    const std::size_t planes = t.size() / (in_w * in_h);
    Shape shape = t.shape();
    shape[r - 2] = out_w;
    shape[r - 1] = out_h;
    Tensor out(shape);

    const auto tx = axis_taps(in_w, out_w, method);
    const auto ty = axis_taps(in_h, out_h, method);
    for (std::size_t p = 0; p < planes; ++p) {
        const double* src = t.data().data() + p * in_w * in_h;
        double* dst = out.data().data() + p * out_w * out_h;
        for (std::size_t x = 0; x < out_w; ++x) {
            const Tap& a = tx[x];
            const double* row_lo = src + a.lo * in_h;
            const double* row_hi = src + a.hi * in_h;
            for (std::size_t y = 0; y < out_h; ++y) {
                const Tap& b = ty[y];
                if (method == ResizeMethod::Nearest) {
                    dst[x * out_h + y] = row_lo[b.lo];
                } else {
                    const double top = row_lo[b.lo] + b.frac * (row_lo[b.hi] - row_lo[b.lo]);
                    const double bot = row_hi[b.lo] + b.frac * (row_hi[b.hi] - row_hi[b.lo]);
                    dst[x * out_h + y] = top + a.frac * (bot - top);
                }
            }
        }
    }
    return out;
}

}  // namespace hyperseg
