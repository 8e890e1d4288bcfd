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

#include "hyperseg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <boost/beast/core/detail/base64.hpp>
#include <png.h>

#include "hyperseg/errors.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {
namespace {

// Decodes into interleaved 8-bit samples of the requested libpng format.
std::vector<unsigned char> decode_png(std::string_view bytes, png_uint_32 format, std::size_t& w, std::size_t& h) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw FormatError(std::string("PNG decode failed: ") + image.message);
    }
    image.format = format;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw FormatError(std::string("PNG decode failed: ") + image.message);
    }
    w = image.width;
    h = image.height;
    if (w == 0 || h == 0) {
        throw FormatError("PNG has zero extent");
    }
    return buffer;
}

unsigned char to_byte(double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string encode(const std::vector<unsigned char>& pixels, std::size_t w, std::size_t h, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
        throw FormatError(std::string("PNG encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
        throw FormatError(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace

Tensor decode_png_rgb(std::string_view bytes) {
    std::size_t w = 0, h = 0;
    const auto px = decode_png(bytes, PNG_FORMAT_RGB, w, h);
    Tensor t({3, w, h});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) t(c, x, y) = px[(y * w + x) * 3 + c] / 255.0;
    return t;
}

Tensor decode_png_mask(std::string_view bytes) {
    std::size_t w = 0, h = 0;
    const auto px = decode_png(bytes, PNG_FORMAT_GRAY, w, h);
    Tensor t({1, w, h});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) t(0, x, y) = px[y * w + x] >= 128 ? 1.0 : 0.0;
    return t;
}

Tensor load_png_rgb(const std::filesystem::path& path) { return decode_png_rgb(read_file(path)); }

Tensor load_png_mask(const std::filesystem::path& path) { return decode_png_mask(read_file(path)); }

std::string encode_png(const Tensor& image) {
    Tensor t = image.rank() == 2 ? image.reshaped({1, image.extent(0), image.extent(1)}) : image;
    if (t.rank() != 3 || (t.extent(0) != 1 && t.extent(0) != 3)) {
        throw ArgumentError("encode_png: expected 1 or 3 channel image, got " + shape_to_string(image.shape()));
    }
    const std::size_t c = t.extent(0), w = t.extent(1), h = t.extent(2);
    std::vector<unsigned char> px(c * w * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) px[(y * w + x) * c + ch] = to_byte(t(ch, x, y));
    return encode(px, w, h, c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY);
}

std::string encode_png_mask(const Tensor& mask) {
    Tensor t = mask.rank() == 2 ? mask.reshaped({1, mask.extent(0), mask.extent(1)}) : mask;
    if (t.rank() != 3 || t.extent(0) != 1) {
        throw ArgumentError("encode_png_mask: expected a single-channel mask, got " + shape_to_string(mask.shape()));
    }
    const std::size_t w = t.extent(1), h = t.extent(2);
    std::vector<unsigned char> px(w * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) px[y * w + x] = t(0, x, y) >= 0.5 ? 255 : 0;
    return encode(px, w, h, PNG_FORMAT_GRAY);
}

void save_png(const Tensor& image, const std::filesystem::path& path) { write_file(path, encode_png(image)); }

std::string base64_encode(std::string_view bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::string base64_decode(std::string_view text) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::decoded_size(text.size()), '\0');
    const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
    // The decoder stops at the first '='; only padding may follow.
    if (text.substr(read).find_first_not_of('=') != std::string_view::npos || text.size() - read > 2) {
        throw FormatError("invalid base64 payload");
    }
    out.resize(written);
    return out;
}

}  // namespace hyperseg
