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

#include "hyperseg/tessellation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "hyperseg/errors.hpp"
#include "hyperseg/resize.hpp"

namespace hyperseg {

TileGrid tile_grid(std::size_t w, std::size_t h, std::size_t tile_w, std::size_t tile_h) {
    if (w == 0 || h == 0 || tile_w == 0 || tile_h == 0) {
        throw ArgumentError("tile_grid: all extents must be positive");
    }
    TileGrid g;
    g.cols = (w + tile_w - 1) / tile_w;
    g.rows = (h + tile_h - 1) / tile_h;
    g.tile_w = tile_w;
    g.tile_h = tile_h;
    g.padded_w = tile_w * g.cols;
    g.padded_h = tile_h * g.rows;
    g.tile_count = g.cols * g.rows;
    return g;
}

Tensor stack_tiles(const Tensor& image, const TileGrid& grid) {
    if (image.rank() != 3 || image.extent(1) != grid.padded_w || image.extent(2) != grid.padded_h) {
        throw ArgumentError("stack_tiles: image " + shape_to_string(image.shape()) + " does not match padded grid " +
                            std::to_string(grid.padded_w) + "x" + std::to_string(grid.padded_h));
    }
    const std::size_t c = image.extent(0);
    Tensor out({grid.tile_count, c, grid.tile_w, grid.tile_h});
    double* dst = out.data().data();
    for (std::size_t t = 0; t < grid.tile_count; ++t) {
        const std::size_t x0 = (t % grid.cols) * grid.tile_w;
        const std::size_t y0 = (t / grid.cols) * grid.tile_h;
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t x = 0; x < grid.tile_w; ++x) {
                const double* src = &image.storage()[(ch * grid.padded_w + x0 + x) * grid.padded_h + y0];
                dst = std::copy(src, src + grid.tile_h, dst);
            }
        }
    }
    return out;
}

Tensor reassemble_tiles(const Tensor& tiles, const TileGrid& grid) {
    if (tiles.rank() != 4 || tiles.extent(0) != grid.tile_count || tiles.extent(2) != grid.tile_w ||
        tiles.extent(3) != grid.tile_h) {
        throw ArgumentError("reassemble_tiles: tiles " + shape_to_string(tiles.shape()) + " do not match grid of " +
                            std::to_string(grid.tile_count) + " tiles of " + std::to_string(grid.tile_w) + "x" +
                            std::to_string(grid.tile_h));
    }
    const std::size_t d = tiles.extent(1);
    Tensor out({d, grid.padded_w, grid.padded_h});
    const double* src = tiles.data().data();
    for (std::size_t t = 0; t < grid.tile_count; ++t) {
        const std::size_t x0 = (t % grid.cols) * grid.tile_w;
        const std::size_t y0 = (t / grid.cols) * grid.tile_h;
        for (std::size_t ch = 0; ch < d; ++ch) {
            for (std::size_t x = 0; x < grid.tile_w; ++x) {
                double* dst = &out.storage()[(ch * grid.padded_w + x0 + x) * grid.padded_h + y0];
                std::copy(src, src + grid.tile_h, dst);
                src += grid.tile_h;
            }
        }
    }
    return out;
}

namespace {

// Runs fn(i) for i in [0, n) on a small pool; each index writes only its own
// slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct TiledLayers {
    TileGrid grid;
    std::vector<std::vector<Tensor>> per_tile;  // [tile][tap]
};

TiledLayers run_backbone_on_tiles(const Tensor& image, const Backbone& backbone, std::size_t threads) {
    if (image.rank() != 3 || image.empty()) {
        throw ArgumentError("tessellate_extract: expected a nonempty C x W x H image");
    }
    TiledLayers out;
    out.grid = tile_grid(image.extent(1), image.extent(2), backbone.input_width(), backbone.input_height());
    const Tensor padded = resize2d(image, out.grid.padded_w, out.grid.padded_h, ResizeMethod::Bilinear);
    const Tensor tiles = stack_tiles(padded, out.grid);
    const Shape tile_shape{image.extent(0), out.grid.tile_w, out.grid.tile_h};
    out.per_tile.resize(out.grid.tile_count);
    parallel_for(out.grid.tile_count, threads, [&](std::size_t t) {
        const auto slab = tiles.slab(t);
        out.per_tile[t] = backbone.tap_features(Tensor(tile_shape, std::vector<double>(slab.begin(), slab.end())));
    });
    return out;
}

Tensor assemble(const std::vector<Tensor>& per_tile, const TileGrid& grid, std::size_t w, std::size_t h) {
    const Tensor stacked = concat0(per_tile).reshaped(
        {grid.tile_count, per_tile.front().extent(0), grid.tile_w, grid.tile_h});
    return resize2d(reassemble_tiles(stacked, grid), w, h, ResizeMethod::Bilinear);
}

}  // namespace

FeatureStack tessellate_extract(const Tensor& image, const Backbone& backbone, const CompressionPlan& plan,
                                const ExtractOptions& options) {
    auto tiled = run_backbone_on_tiles(image, backbone, options.threads);
    const std::vector<DepthFactor> factors =
        options.factors ? *options.factors : fit_factors(tiled.per_tile, plan);

    std::vector<Tensor> compressed(tiled.grid.tile_count);
    parallel_for(tiled.grid.tile_count, options.threads,
                 [&](std::size_t t) { compressed[t] = compress_with_factors(tiled.per_tile[t], factors); });
    tiled.per_tile.clear();

    FeatureStack fs;
    fs.features = assemble(compressed, tiled.grid, image.extent(1), image.extent(2));
    fs.depth = fs.features.extent(0);
    fs.backbone_id = backbone.id();
    fs.plan_id = plan.id();
    fs.tile_count = tiled.grid.tile_count;
    if (fs.depth != plan.total_compressed_depth()) {
        throw ArgumentError("tessellate_extract: factors give depth " + std::to_string(fs.depth) +
                            " but plan expects " + std::to_string(plan.total_compressed_depth()));
    }
    fs.features.require_finite("tessellate_extract");
    return fs;
}

std::vector<Tensor> tessellate_layers(const Tensor& image, const Backbone& backbone, std::size_t threads) {
    auto tiled = run_backbone_on_tiles(image, backbone, threads);
    std::vector<Tensor> out;
    const std::size_t taps = backbone.tap_points().size();
    for (std::size_t k = 0; k < taps; ++k) {
        std::vector<Tensor> tap;
        for (auto& t : tiled.per_tile) tap.push_back(std::move(t[k]));
        out.push_back(assemble(tap, tiled.grid, image.extent(1), image.extent(2)));
    }
    return out;
}

}  // namespace hyperseg
