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

#include "hyperseg/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hyperseg/errors.hpp"

namespace hyperseg {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'E', 'G'};

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint16_t>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint16_t>;
    if (pos + sizeof(T) > bytes.size()) {
        throw FormatError("tensor container truncated at byte " + std::to_string(pos));
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<U>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += sizeof(T);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
}

}  // namespace

std::string encode_tensor(const Tensor& t) {
    std::string out(kMagic, 4);
    put_le<std::uint16_t>(out, kTensorFormatVersion);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.rank()));
    for (auto e : t.shape()) put_le<std::uint64_t>(out, e);
    out.reserve(out.size() + 8 * t.size());
    for (double v : t.data()) put_le<double>(out, v);
    return out;
}

Tensor decode_tensor(std::string_view bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a tensor container (bad magic)");
    }
    std::size_t pos = 4;
    const auto version = get_le<std::uint16_t>(bytes, pos);
    if (version != kTensorFormatVersion) {
        throw FormatError("unsupported tensor container version " + std::to_string(version));
    }
    const auto rank = get_le<std::uint16_t>(bytes, pos);
    Shape shape(rank);
    for (auto& e : shape) {
        e = get_le<std::uint64_t>(bytes, pos);
        if (e == 0) throw FormatError("tensor container has a zero extent");
    }
    const std::size_t n = shape_product(shape);
    if ((bytes.size() - pos) / 8 != n || (bytes.size() - pos) % 8 != 0) {
        throw FormatError("tensor container payload size does not match shape " + shape_to_string(shape));
    }
    std::vector<double> data(n);
    for (auto& v : data) v = get_le<double>(bytes, pos);
    return Tensor(std::move(shape), std::move(data));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("cannot open " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("short write to " + path.string());
    }
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) { write_file(path, encode_tensor(t)); }

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

}  // namespace hyperseg
