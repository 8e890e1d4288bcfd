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
#include <string_view>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

enum class ResizeMethod { Nearest, Bilinear };

ResizeMethod parse_resize_method(std::string_view name);

// Resizes the two trailing (x, y) axes of a tensor of rank >= 2 to
// (out_w, out_h). Leading axes are untouched.
//
// Nearest:  src = floor(dst * in / out), which is exact block replication for
//           integer upscale factors.
// Bilinear: align-corners convention, src = dst * (in - 1) / (out - 1), so the
//           first and last samples coincide with the input corners. A target
//           extent of 1 samples coordinate 0.
//
// Equal source and target extents return the input unchanged.
Tensor resize2d(const Tensor& t, std::size_t out_w, std::size_t out_h, ResizeMethod method);

}  // namespace hyperseg
