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
#include <optional>
#include <string>
#include <vector>

#include "hyperseg/backbone.hpp"
#include "hyperseg/tensor.hpp"
#include "hyperseg/tucker.hpp"

namespace hyperseg {

// Tiling of a w x h image into backbone-sized tiles after resizing it up to
// the next integer multiple of the tile size.
struct TileGrid {
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t tile_w = 0;
    std::size_t tile_h = 0;
    std::size_t padded_w = 0;
    std::size_t padded_h = 0;
    std::size_t tile_count = 0;

    friend bool operator==(const TileGrid&, const TileGrid&) = default;
};

TileGrid tile_grid(std::size_t w, std::size_t h, std::size_t tile_w, std::size_t tile_h);

// C x padded_w x padded_h -> T x C x tile_w x tile_h. Tile t covers grid cell
// (row = t / cols, col = t % cols), i.e. x in [col*tile_w, (col+1)*tile_w).
Tensor stack_tiles(const Tensor& image, const TileGrid& grid);
// Exact inverse of stack_tiles: T x D x tile_w x tile_h -> D x padded_w x padded_h.
Tensor reassemble_tiles(const Tensor& tiles, const TileGrid& grid);

struct FeatureStack {
    Tensor features;  // depth x w x h at the source image's native extents
    std::size_t depth = 0;
    std::string backbone_id;
    std::string plan_id;
    std::size_t tile_count = 0;
};

struct ExtractOptions {
    // Frozen factors (one per tap). When absent the factors are fitted on the
    // current image's tiles.
    std::optional<std::vector<DepthFactor>> factors;
    // Worker threads for the per-tile backbone pass; 0 picks hardware concurrency.
    std::size_t threads = 0;
};

// Resize to the padded grid (bilinear), run every tile through the backbone,
// compress the tap layers along depth, reassemble and resize back to (w, h).
FeatureStack tessellate_extract(const Tensor& image, const Backbone& backbone, const CompressionPlan& plan,
                                const ExtractOptions& options = {});

// Per-tap uncompressed hypercolumn layers at native resolution (no depth
// compression); used by the compression report.
std::vector<Tensor> tessellate_layers(const Tensor& image, const Backbone& backbone, std::size_t threads = 0);

}  // namespace hyperseg
