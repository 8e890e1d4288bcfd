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

#include <filesystem>
#include <string>
#include <string_view>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

// 8-bit PNG <-> tensors. Colour images decode to 3 x W x H in [0, 1]; masks
// decode to 1 x W x H with 1 wherever the grey level is >= 128.
Tensor decode_png_rgb(std::string_view bytes);
Tensor decode_png_mask(std::string_view bytes);
Tensor load_png_rgb(const std::filesystem::path& path);
Tensor load_png_mask(const std::filesystem::path& path);

// Values are clamped to [0, 1] and rounded to 8 bits. A rank-3 tensor with 3
// channels is written as RGB, one channel (or a W x H matrix) as grey.
std::string encode_png(const Tensor& image);
// Binary mask: value >= 0.5 -> 255, else 0.
std::string encode_png_mask(const Tensor& mask);
void save_png(const Tensor& image, const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace hyperseg
