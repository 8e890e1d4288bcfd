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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

// Binary tensor container:
//   "HSEG" | version u16 | rank u16 | rank x extent u64 | product(extents) x f64
// All integers and floats little-endian.
inline constexpr std::uint16_t kTensorFormatVersion = 1;

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(std::string_view bytes);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

// Whole-file helpers shared by the JSON sidecars.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hyperseg
