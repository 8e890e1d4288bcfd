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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hyperseg/errors.hpp"
#include "hyperseg/interaction.hpp"
#include "oracles.hpp"

namespace hyperseg {
namespace {

using testing::oracle::brute_force_distance;

std::vector<Point> random_clicks(std::mt19937_64& rng, std::size_t w, std::size_t h, std::size_t n) {
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({rng() % w, rng() % h});
    return out;
}

TEST(DistanceMap, CornerClickOnThreeByThree) {
    const Tensor d = distance_map({{0, 0}}, 3, 3);
    EXPECT_DOUBLE_EQ(d(2, 2), 2.0 * std::sqrt(2.0));
    EXPECT_NEAR(d(2, 2), 2.8284271, 1e-7);
}

TEST(DistanceMap, ZeroAtClicks) {
    std::mt19937_64 rng(1);
    const auto clicks = random_clicks(rng, 12, 9, 6);
    const Tensor d = distance_map(clicks, 12, 9);
    for (const auto& c : clicks) EXPECT_EQ(d(c.x, c.y), 0.0);
}

TEST(DistanceMap, EmptyUsesDiagonalSentinel) {
    const Tensor d = distance_map({}, 3, 4);
    for (double v : d.data()) EXPECT_EQ(v, 5.0);
}

TEST(DistanceMap, MatchesBruteForceExactly) {
    std::mt19937_64 rng(2);
    const Tensor d = distance_map(random_clicks(rng, 16, 16, 5), 16, 16);
    rng.seed(2);
    EXPECT_EQ(d, brute_force_distance(random_clicks(rng, 16, 16, 5), 16, 16));
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t w = 1 + rng() % 32, h = 1 + rng() % 32;
        const auto clicks = random_clicks(rng, w, h, 1 + rng() % 12);
        ASSERT_EQ(distance_map(clicks, w, h), brute_force_distance(clicks, w, h)) << w << "x" << h;
    }
}

TEST(DistanceMap, LipschitzAndMonotoneUnderNewClicks) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t w = 2 + rng() % 20, h = 2 + rng() % 20;
        auto clicks = random_clicks(rng, w, h, 1 + rng() % 5);
        const Tensor d = distance_map(clicks, w, h);
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t y = 0; y < h; ++y) {
                if (x + 1 < w) ASSERT_LE(std::abs(d(x, y) - d(x + 1, y)), 1.0 + 1e-12);
                if (y + 1 < h) ASSERT_LE(std::abs(d(x, y) - d(x, y + 1)), 1.0 + 1e-12);
                if (x + 1 < w && y + 1 < h) ASSERT_LE(std::abs(d(x, y) - d(x + 1, y + 1)), std::sqrt(2.0) + 1e-12);
            }
        clicks.push_back({rng() % w, rng() % h});
        const Tensor d2 = distance_map(clicks, w, h);
        for (std::size_t i = 0; i < d.size(); ++i) ASSERT_LE(d2[i], d[i]);
    }
}

TEST(Rasterize, EmptySingleAndDuplicate) {
    EXPECT_EQ(rasterize_clicks({}, 4, 4).squared_norm(), 0.0);
    const Tensor one = rasterize_clicks({{1, 2}}, 4, 4);
    EXPECT_EQ(one.squared_norm(), 1.0);
    EXPECT_EQ(one(1, 2), 1.0);
    EXPECT_EQ(rasterize_clicks({{1, 2}, {1, 2}}, 4, 4), one);
    EXPECT_THROW(rasterize_clicks({{4, 0}}, 4, 4), ArgumentError);
}

TEST(ClickState, OrderIndependentAndImmutable) {
    const ClickState a(8, 8, {{1, 1}, {5, 2}}, {{7, 7}});
    const ClickState b = ClickState(8, 8).with_click({7, 7}, Polarity::Negative).with_click({5, 2}, Polarity::Positive)
                             .with_click({1, 1}, Polarity::Positive);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.positive_distance(), b.positive_distance());
    const ClickState c = a.without_click({5, 2});
    EXPECT_EQ(a.positive().size(), 2u);
    EXPECT_EQ(c.positive().size(), 1u);
    EXPECT_EQ(c.with_click({5, 2}, Polarity::Positive), a);
}

TEST(ClickState, InvariantsHold) {
    const ClickState s(6, 5, {{0, 0}, {3, 4}}, {{5, 1}});
    EXPECT_EQ(s.positive_mask()(3, 4), 1.0);
    EXPECT_EQ(s.negative_mask().squared_norm(), 1.0);
    for (std::size_t x = 0; x < 6; ++x)
        for (std::size_t y = 0; y < 5; ++y) {
            EXPECT_EQ(s.positive_distance()(x, y) == 0.0, s.positive_mask()(x, y) == 1.0);
        }
    EXPECT_THROW(ClickState(4, 4, {{1, 1}}, {{1, 1}}), ArgumentError);
    EXPECT_THROW(s.with_click({6, 0}, Polarity::Positive), ArgumentError);
}

TEST(ClickState, JsonRoundTrip) {
    const ClickState s(6, 5, {{0, 0}, {3, 4}}, {{5, 1}});
    EXPECT_EQ(s.to_json(),
              R"([{"polarity":"pos","x":0,"y":0},{"polarity":"pos","x":3,"y":4},{"polarity":"neg","x":5,"y":1}])");
    EXPECT_EQ(ClickState::from_json(s.to_json(), 6, 5), s);
    EXPECT_THROW(ClickState::from_json("[{\"x\":1}]", 6, 5), FormatError);
}

Tensor disk_mask(std::size_t n, double r) {
    Tensor m({n, n});
    const double c = (static_cast<double>(n) - 1.0) / 2.0;
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) m(x, y) = std::hypot(x - c, y - c) <= r ? 1.0 : 0.0;
    return m;
}

TEST(SimulateClicks, PolarityMatchesGroundTruth) {
    const Tensor gt = disk_mask(48, 12.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = simulate_clicks(gt, seed, 1 + seed % 15, 15 - seed % 15);
        for (const auto& p : s.positive()) EXPECT_EQ(gt(p.x, p.y), 1.0);
        for (const auto& p : s.negative()) EXPECT_EQ(gt(p.x, p.y), 0.0);
    }
}

TEST(SimulateClicks, DeterministicForSeed) {
    const Tensor gt = disk_mask(32, 8.0);
    EXPECT_EQ(simulate_clicks(gt, 99, 5, 5), simulate_clicks(gt, 99, 5, 5));
    EXPECT_NE(simulate_clicks(gt, 99, 5, 5), simulate_clicks(gt, 100, 5, 5));
}

TEST(SimulateClicks, CenteredDiskMarginsAgainstDistanceOracle) {
    const Tensor gt = disk_mask(64, 20.0);
    std::vector<Point> fg, bg;
    for (std::size_t x = 0; x < 64; ++x)
        for (std::size_t y = 0; y < 64; ++y) (gt(x, y) == 1.0 ? fg : bg).push_back({x, y});
    const Tensor depth = brute_force_distance(bg, 64, 64);
    const Tensor reach = brute_force_distance(fg, 64, 64);
    const auto s = simulate_clicks(gt, 7, 15, 15);
    EXPECT_EQ(s.positive().size(), 15u);
    EXPECT_EQ(s.negative().size(), 15u);
    for (const auto& p : s.positive()) EXPECT_GE(depth(p.x, p.y), 3.0);
    for (const auto& p : s.negative()) {
        EXPECT_GE(reach(p.x, p.y), 3.0);
        EXPECT_LE(reach(p.x, p.y), 40.0);
    }
    const auto all = s.clicks();
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
            EXPECT_GE(std::hypot(double(all[i].at.x) - double(all[j].at.x), double(all[i].at.y) - double(all[j].at.y)),
                      5.0);
}

TEST(SimulateClicks, RelaxesOnThinObjects) {
    Tensor gt({16, 16});
    for (std::size_t x = 2; x < 14; ++x) gt(x, 8) = 1.0;  // one-pixel line: no pixel is 3 px deep
    const auto s = simulate_clicks(gt, 1, 4, 4);
    EXPECT_EQ(s.positive().size(), 4u);
    for (const auto& p : s.positive()) EXPECT_EQ(gt(p.x, p.y), 1.0);
}

TEST(SimulateClicks, DegenerateMasksRejected) {
    EXPECT_THROW(simulate_clicks(Tensor({8, 8}, 1.0), 1, 1, 1), ArgumentError);
    EXPECT_THROW(simulate_clicks(Tensor({8, 8}, 0.0), 1, 1, 1), ArgumentError);
    EXPECT_THROW(simulate_clicks(disk_mask(16, 4), 1, 0, 1), ArgumentError);
    EXPECT_THROW(simulate_clicks(disk_mask(16, 4), 1, 1, 16), ArgumentError);
}

}  // namespace
}  // namespace hyperseg
