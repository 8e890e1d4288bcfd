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

#include "hyperseg/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "hyperseg/errors.hpp"

namespace hyperseg {

std::string_view polarity_name(Polarity p) { return p == Polarity::Positive ? "pos" : "neg"; }

Polarity parse_polarity(std::string_view name) {
    if (name == "pos") return Polarity::Positive;
    if (name == "neg") return Polarity::Negative;
    throw ArgumentError("polarity must be \"pos\" or \"neg\", got \"" + std::string(name) + "\"");
}

namespace {

constexpr double kFar = 1e20;

// 1-D squared distance transform over the lower envelope of parabolas rooted
// at (q, f[q]). `stride` walks a row or a column of the W x H grid in place.
void edt_1d(double* f, std::size_t n, std::size_t stride, std::vector<double>& d, std::vector<std::size_t>& v,
            std::vector<double>& z) {
    d.resize(n);
    v.resize(n);
    z.resize(n + 1);
    std::size_t k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto at = [&](std::size_t q) { return f[q * stride]; };
    for (std::size_t q = 1; q < n; ++q) {
        const double fq = at(q) + static_cast<double>(q * q);
        auto intersect = [&](std::size_t p) {
            return (fq - (at(p) + static_cast<double>(p * p))) / (2.0 * static_cast<double>(q - p));
        };
        double s = intersect(v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q)) ++k;
        const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
        d[q] = dq * dq + at(v[k]);
    }
    for (std::size_t q = 0; q < n; ++q) f[q * stride] = d[q];
}

void check_in_frame(Point p, std::size_t w, std::size_t h) {
    if (p.x >= w || p.y >= h) {
        throw ArgumentError("click (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside " +
                            std::to_string(w) + "x" + std::to_string(h) + " frame");
    }
}

void normalise(std::vector<Point>& pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

}  // namespace

Tensor distance_map(const std::vector<Point>& clicks, std::size_t w, std::size_t h) {
    if (w == 0 || h == 0) {
        throw ArgumentError("distance_map: extents must be positive");
    }
    if (clicks.empty()) {
        return Tensor({w, h}, std::sqrt(static_cast<double>(w * w + h * h)));
    }
    Tensor t({w, h}, kFar);
    for (const auto& p : clicks) {
        check_in_frame(p, w, h);
        t(p.x, p.y) = 0.0;
    }
    std::vector<double> d, z;
    std::vector<std::size_t> v;
    double* base = t.data().data();
    for (std::size_t x = 0; x < w; ++x) edt_1d(base + x * h, h, 1, d, v, z);
    for (std::size_t y = 0; y < h; ++y) edt_1d(base + y, w, h, d, v, z);
    for (auto& e : t.data()) e = std::sqrt(e);
    return t;
}

Tensor rasterize_clicks(const std::vector<Point>& clicks, std::size_t w, std::size_t h) {
    Tensor t({w, h});
    for (const auto& p : clicks) {
        check_in_frame(p, w, h);
        t(p.x, p.y) = 1.0;
    }
    return t;
}

ClickState::ClickState(std::size_t width, std::size_t height, std::vector<Point> positive, std::vector<Point> negative)
    : width_(width), height_(height), positive_(std::move(positive)), negative_(std::move(negative)) {
    normalise(positive_);
    normalise(negative_);
    for (const auto& p : positive_) {
        if (std::binary_search(negative_.begin(), negative_.end(), p)) {
            throw ArgumentError("click (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                ") is both positive and negative");
        }
    }
    pos_mask_ = rasterize_clicks(positive_, width_, height_);
    neg_mask_ = rasterize_clicks(negative_, width_, height_);
    pos_dist_ = distance_map(positive_, width_, height_);
    neg_dist_ = distance_map(negative_, width_, height_);
}

bool ClickState::contains(Point p, Polarity polarity) const {
    const auto& set = polarity == Polarity::Positive ? positive_ : negative_;
    return std::binary_search(set.begin(), set.end(), p);
}

ClickState ClickState::with_click(Point p, Polarity polarity) const {
    check_in_frame(p, width_, height_);
    auto pos = positive_;
    auto neg = negative_;
    (polarity == Polarity::Positive ? pos : neg).push_back(p);
    return ClickState(width_, height_, std::move(pos), std::move(neg));
}

ClickState ClickState::without_click(Point p) const {
    auto pos = positive_;
    auto neg = negative_;
    std::erase(pos, p);
    std::erase(neg, p);
    return ClickState(width_, height_, std::move(pos), std::move(neg));
}

std::vector<Click> ClickState::clicks() const {
    std::vector<Click> out;
    for (const auto& p : positive_) out.push_back({p, Polarity::Positive});
    for (const auto& p : negative_) out.push_back({p, Polarity::Negative});
    return out;
}

std::string ClickState::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : clicks()) {
        arr.push_back({{"x", c.at.x}, {"y", c.at.y}, {"polarity", polarity_name(c.polarity)}});
    }
    return arr.dump();
}

ClickState ClickState::from_json(std::string_view json, std::size_t width, std::size_t height) {
    std::vector<Point> pos, neg;
    try {
        const auto arr = nlohmann::json::parse(json);
        if (!arr.is_array()) throw FormatError("click list must be a JSON array");
        for (const auto& c : arr) {
            const Point p{c.at("x").get<std::size_t>(), c.at("y").get<std::size_t>()};
            (parse_polarity(c.at("polarity").get<std::string>()) == Polarity::Positive ? pos : neg).push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("click list: ") + e.what());
    }
    return ClickState(width, height, std::move(pos), std::move(neg));
}

namespace {

Tensor as_plane(const Tensor& gt) {
    if (gt.rank() == 3 && gt.extent(0) == 1) return gt.reshaped({gt.extent(1), gt.extent(2)});
    if (gt.rank() == 2) return gt;
    throw ArgumentError("simulate_clicks: expected W x H or 1 x W x H mask, got " + shape_to_string(gt.shape()));
}

double dist2(Point a, Point b) {
    const double dx = static_cast<double>(a.x) - static_cast<double>(b.x);
    const double dy = static_cast<double>(a.y) - static_cast<double>(b.y);
    return dx * dx + dy * dy;
}

}  // namespace

ClickState simulate_clicks(const Tensor& gt, std::uint64_t seed, std::size_t n_pos, std::size_t n_neg,
                           const ClickSimConfig& config) {
    if (n_pos < 1 || n_pos > 15 || n_neg < 1 || n_neg > 15) {
        throw ArgumentError("simulate_clicks: click counts must lie in [1, 15]");
    }
    const Tensor mask = as_plane(gt);
    const std::size_t w = mask.extent(0), h = mask.extent(1);
    std::vector<Point> fg, bg;
    for (std::size_t x = 0; x < w; ++x)
        for (std::size_t y = 0; y < h; ++y) (mask(x, y) >= 0.5 ? fg : bg).push_back({x, y});
    if (fg.empty() || bg.empty()) {
        throw ArgumentError("simulate_clicks: mask must contain both foreground and background");
    }
    const Tensor to_bg = distance_map(bg, w, h);  // inside depth of foreground pixels
    const Tensor to_fg = distance_map(fg, w, h);  // distance of background pixels to the object

    std::mt19937_64 rng(seed);
    std::vector<Point> chosen_pos, chosen_neg;
    const double diagonal = std::sqrt(static_cast<double>(w * w + h * h));

    auto separated = [&](Point p, double sep) {
        for (const auto* set : {&chosen_pos, &chosen_neg}) {
            for (const auto& q : *set) {
                if (q == p || dist2(p, q) < sep * sep) return false;
            }
        }
        return true;
    };

    auto fill = [&](std::vector<Point>& chosen, std::size_t want, bool positive) {
        std::size_t d_pos = config.min_positive_margin;
        std::size_t d_neg_min = config.min_negative_margin;
        double d_neg_max = static_cast<double>(config.max_negative_margin);
        std::size_t d_sep = config.min_separation;
        while (chosen.size() < want) {
            std::vector<Point> cands;
            for (const auto& p : positive ? fg : bg) {
                if (positive) {
                    if (to_bg(p.x, p.y) >= static_cast<double>(d_pos)) cands.push_back(p);
                } else {
                    const double d = to_fg(p.x, p.y);
                    if (d >= static_cast<double>(d_neg_min) && d <= d_neg_max) cands.push_back(p);
                }
            }
            std::shuffle(cands.begin(), cands.end(), rng);
            for (const auto& p : cands) {
                if (chosen.size() == want) break;
                if (separated(p, static_cast<double>(d_sep))) chosen.push_back(p);
            }
            if (chosen.size() == want) break;
            const bool exhausted = d_pos == 0 && d_neg_min == 0 && d_sep == 0 && d_neg_max >= diagonal;
            if (exhausted) break;
            d_pos /= 2;
            d_neg_min /= 2;
            d_sep /= 2;
            d_neg_max *= 2.0;
        }
    };
    fill(chosen_pos, n_pos, true);
    fill(chosen_neg, n_neg, false);
    return ClickState(w, h, std::move(chosen_pos), std::move(chosen_neg));
}

}  // namespace hyperseg
