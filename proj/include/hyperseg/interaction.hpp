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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

struct Point {
    std::size_t x = 0;
    std::size_t y = 0;
    friend auto operator<=>(const Point&, const Point&) = default;
};

enum class Polarity { Positive, Negative };

std::string_view polarity_name(Polarity p);  // "pos" / "neg"
Polarity parse_polarity(std::string_view name);

struct Click {
    Point at;
    Polarity polarity = Polarity::Positive;
    friend bool operator==(const Click&, const Click&) = default;
};

// Exact Euclidean distance from every pixel of a w x h grid to the nearest
// click, as a W x H tensor. Computed with the two-pass lower-envelope squared
// distance transform, then a square root. With no clicks every entry is the
// image diagonal sqrt(w^2 + h^2).
Tensor distance_map(const std::vector<Point>& clicks, std::size_t w, std::size_t h);

// W x H binary raster with 1 at each click. Throws ArgumentError for
// coordinates outside the grid.
Tensor rasterize_clicks(const std::vector<Point>& clicks, std::size_t w, std::size_t h);

// Immutable positive/negative click sets with their rasters and diffusion
// maps. Click sets are kept sorted and duplicate-free, so the state depends
// only on the sets and not on the order clicks arrived in.
class ClickState {
public:
    ClickState() = default;
    ClickState(std::size_t width, std::size_t height, std::vector<Point> positive = {},
               std::vector<Point> negative = {});

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    const std::vector<Point>& positive() const { return positive_; }
    const std::vector<Point>& negative() const { return negative_; }
    std::size_t click_count() const { return positive_.size() + negative_.size(); }
    bool contains(Point p, Polarity polarity) const;

    // New state with the click added. Throws ArgumentError if p is outside the
    // frame or already clicked with the other polarity.
    ClickState with_click(Point p, Polarity polarity) const;
    // New state without any click at p.
    ClickState without_click(Point p) const;

    const Tensor& positive_mask() const { return pos_mask_; }
    const Tensor& negative_mask() const { return neg_mask_; }
    const Tensor& positive_distance() const { return pos_dist_; }
    const Tensor& negative_distance() const { return neg_dist_; }

    std::vector<Click> clicks() const;
    // UTF-8 JSON array of {x, y, polarity}.
    std::string to_json() const;
    static ClickState from_json(std::string_view json, std::size_t width, std::size_t height);

    friend bool operator==(const ClickState& a, const ClickState& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.positive_ == b.positive_ &&
               a.negative_ == b.negative_;
    }

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<Point> positive_;
    std::vector<Point> negative_;
    Tensor pos_mask_, neg_mask_, pos_dist_, neg_dist_;
};

struct ClickSimConfig {
    std::size_t min_positive_margin = 3;  // distance from the object boundary
    std::size_t min_negative_margin = 3;  // background band inner edge
    std::size_t max_negative_margin = 40; // background band outer edge
    std::size_t min_separation = 5;       // between any two clicks
};

// Samples n_pos clicks inside and n_neg clicks outside the object of a binary
// W x H (or 1 x W x H) mask, deterministically for a seed. When the margins
// leave too few candidates they are relaxed by halving (integer, down to 0)
// while the outer band is doubled; if even then the object or background has
// fewer admissible pixels than requested, fewer clicks are returned.
// Throws ArgumentError if the mask is all foreground or all background, or if
// a count is outside [1, 15].
ClickState simulate_clicks(const Tensor& gt, std::uint64_t seed, std::size_t n_pos, std::size_t n_neg,
                           const ClickSimConfig& config = {});

}  // namespace hyperseg
