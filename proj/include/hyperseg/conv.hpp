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

#include "hyperseg/tensor.hpp"

namespace hyperseg {

// "Same" 2-D convolution over C x W x H inputs with an odd square kernel.
// weights: out x in x k x k, indexed (o, i, kx, ky); bias: out.
// Zero padding of dilation * (k / 2) keeps the spatial extents unchanged.
Tensor conv2d_same(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t dilation);

struct ConvGrads {
    Tensor input;    // dL/dinput
    Tensor weights;  // dL/dweights
    Tensor bias;     // dL/dbias
};

// Reverse pass of conv2d_same for upstream gradient `grad_out` (out x W x H).
ConvGrads conv2d_same_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                               std::size_t dilation, bool need_input_grad = true);

// Non-overlapping average pooling by an integer factor on the spatial axes.
Tensor avg_pool(const Tensor& input, std::size_t factor);

}  // namespace hyperseg
