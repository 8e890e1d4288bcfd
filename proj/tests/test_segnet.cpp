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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hyperseg/errors.hpp"
#include "gradcheck.hpp"
#include "hyperseg/segnet.hpp"

namespace hyperseg {
namespace {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(shape);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

Tensor disk(std::size_t w, std::size_t h, double r) {
    Tensor m({w, h});
    for (std::size_t x = 0; x < w; ++x)
        for (std::size_t y = 0; y < h; ++y)
            m(x, y) = std::hypot(x - (w - 1) / 2.0, y - (h - 1) / 2.0) <= r ? 1.0 : 0.0;
    return m;
}

TrainingSample make_sample(const NetConfig& cfg, std::size_t w, std::size_t h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TrainingSample s;
    s.target = disk(w, h, std::min(w, h) / 3.0);
    const auto clicks = simulate_clicks(s.target, seed, 2, 2);
    s.context = ContextBundle::make(random_tensor({3, w, h}, rng), random_tensor({3, w, h}, rng), clicks);
    s.features = random_tensor({cfg.feature_depth, w, h}, rng, -1.0, 1.0);
    return s;
}

TEST(NetConfig, DeskShapeContract) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 1);
    const auto s = make_sample(cfg, 32, 32, 2);
    const auto p = forward(s.context, s.features, params);
    EXPECT_EQ(p.soft_maps.shape(), (Shape{3, 32, 32}));
    EXPECT_EQ(p.binary_masks.shape(), (Shape{3, 32, 32}));
}

TEST(NetConfig, FullScaleDepths) {
    const auto cfg = NetConfig::full_scale();
    EXPECT_EQ(cfg.layer_input_depths(), (std::vector<std::size_t>{746, 80, 80, 80, 80, 80, 80, 80, 80, 80}));
    EXPECT_EQ(cfg.layer_output_depths(), (std::vector<std::size_t>{70, 70, 70, 70, 70, 70, 70, 70, 70, 6}));
    EXPECT_NO_THROW(NetworkParams::zeros(cfg).validate());
    EXPECT_EQ(NetConfig::from_json(cfg.to_json()), cfg);
}

TEST(NetConfig, Validation) {
    auto cfg = NetConfig::desk();
    cfg.dilations.pop_back();
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = NetConfig::desk();
    cfg.num_heads = 0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = NetConfig::desk();
    cfg.num_layers = 1;
    cfg.dilations = {1};
    EXPECT_THROW(cfg.validate(), ArgumentError);
    EXPECT_THROW(NetConfig::from_json("{"), FormatError);
}

TEST(Forward, ZeroParamsGiveOneHalf) {
    const auto cfg = NetConfig::desk();
    const auto s = make_sample(cfg, 20, 12, 3);
    const auto p = forward(s.context, s.features, NetworkParams::zeros(cfg));
    for (double v : p.soft_maps.data()) EXPECT_EQ(v, 0.5);
    for (double v : p.binary_masks.data()) EXPECT_EQ(v, 1.0);
}

TEST(Forward, EveryLayerKeepsFullResolution) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 4);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
        const std::size_t w = 9 + rng() % 40, h = 9 + rng() % 40;
        const auto s = make_sample(cfg, w, h, 10 + t);
        const auto trace = forward_trace(s.context, s.features, params);
        ASSERT_EQ(trace.outputs.size(), cfg.num_layers);
        for (std::size_t l = 0; l < cfg.num_layers; ++l) {
            EXPECT_EQ(trace.outputs[l].extent(1), w);
            EXPECT_EQ(trace.outputs[l].extent(2), h);
            EXPECT_EQ(trace.outputs[l].extent(0), cfg.layer_output_depths()[l]);
            EXPECT_EQ(trace.inputs[l].extent(0), cfg.layer_input_depths()[l]);
        }
    }
}

TEST(Forward, DeterministicAndBounded) {
    const auto cfg = NetConfig::desk();
    auto params = NetworkParams::init(cfg, 6);
    for (auto& l : params.layers)
        for (auto& v : l.weights.data()) v *= 50.0;  // drive the sigmoid into saturation
    const auto s = make_sample(cfg, 24, 24, 7);
    const auto a = forward(s.context, s.features, params);
    EXPECT_EQ(a.soft_maps, forward(s.context, s.features, params).soft_maps);
    for (std::size_t i = 0; i < a.soft_maps.size(); ++i) {
        ASSERT_GE(a.soft_maps[i], 0.0);
        ASSERT_LE(a.soft_maps[i], 1.0);
        ASSERT_EQ(a.binary_masks[i], a.soft_maps[i] >= 0.5 ? 1.0 : 0.0);
    }
}

TEST(Forward, ShapeMismatchRejected) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 8);
    const auto s = make_sample(cfg, 16, 16, 9);
    EXPECT_THROW(forward(s.context, Tensor({cfg.feature_depth, 16, 15}), params), ArgumentError);
    EXPECT_THROW(forward(s.context, Tensor({cfg.feature_depth + 1, 16, 16}), params), ArgumentError);
    auto broken = params;
    broken.layers[2].weights = Tensor({1, 1, 3, 3});
    EXPECT_THROW(forward(s.context, s.features, broken), ArgumentError);
    EXPECT_THROW(ContextBundle::make(Tensor({3, 8, 8}), Tensor({3, 8, 7}), ClickState(8, 8)), ArgumentError);
    EXPECT_THROW(ContextBundle::make(Tensor({3, 8, 8}), std::nullopt, ClickState(8, 9)), ArgumentError);
}

TEST(Forward, ContextChannelOrder) {
    std::mt19937_64 rng(10);
    const Tensor frame = random_tensor({3, 6, 5}, rng);
    const ClickState clicks(6, 5, {{1, 1}}, {{4, 3}});
    const auto ctx = ContextBundle::make(frame, std::nullopt, clicks);
    const Tensor c = ctx.stacked();
    ASSERT_EQ(c.shape(), (Shape{10, 6, 5}));
    EXPECT_EQ(c(0, 2, 3), frame(0, 2, 3));
    EXPECT_EQ(c(3, 2, 3), frame(0, 2, 3));  // previous frame duplicates the current one
    EXPECT_EQ(c(6, 1, 1), 1.0);
    EXPECT_EQ(c(7, 4, 3), 1.0);
    EXPECT_NEAR(c(8, 4, 1), 3.0 / std::sqrt(61.0), 1e-15);
    EXPECT_NEAR(c(9, 4, 1), 2.0 / std::sqrt(61.0), 1e-15);
}

// A unit impulse in one feature channel changes exactly the output pixels
// within the theoretical receptive field when every nonlinearity is removed.
TEST(Forward, ReceptiveFieldImpulse) {
    const auto cfg = NetConfig::desk();
    const std::size_t rf = cfg.receptive_field();
    EXPECT_EQ(rf, 1u + 2u * (1 + 2 + 4 + 8 + 1));
    const auto params = NetworkParams::init(cfg, 11);
    const std::size_t n = rf + 14, cx = n / 2, cy = n / 2 - 3;
    auto s = make_sample(cfg, n, n, 12);
    ForwardOptions linear;
    linear.linear = true;
    const auto base = forward(s.context, s.features, params, linear).soft_maps;
    s.features(5, cx, cy) += 1.0;
    const auto bumped = forward(s.context, s.features, params, linear).soft_maps;
    const long half = static_cast<long>(rf / 2);
    for (std::size_t m = 0; m < cfg.num_heads; ++m)
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) {
                const bool inside = std::abs(long(x) - long(cx)) <= half && std::abs(long(y) - long(cy)) <= half;
                const bool changed = bumped(m, x, y) != base(m, x, y);
                ASSERT_EQ(changed, inside) << m << " " << x << " " << y;
            }
}

TEST(Gradients, FiniteDifferencesOnRandomParameters) {
    const auto cfg = NetConfig::desk();
    for (std::uint64_t seed : {13, 31}) {
        const auto params = NetworkParams::init(cfg, seed);
        const auto sample = make_sample(cfg, 14, 12, seed + 1);
        const auto report = testing::finite_difference_check(sample, params, {}, 30, seed + 2);
        ASSERT_EQ(report.probes.size(), 30u);
        for (const auto& p : report.probes) {
            EXPECT_LT(p.rel_error, 1e-4) << "layer " << p.layer << (p.bias ? " bias " : " weight ") << p.index
                                         << " numeric " << p.numeric << " analytic " << p.analytic;
        }
        EXPECT_LT(report.skipped, 30u);
    }
}

TEST(Gradients, FiniteDifferencesAcrossDelta) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 40);
    const auto sample = make_sample(cfg, 12, 12, 41);
    for (double delta : {0.5, 2.0}) {
        LossSpec spec;
        spec.delta = delta;
        const auto report = testing::finite_difference_check(sample, params, spec, 10, 42);
        EXPECT_LT(report.max_rel_error(), 1e-4) << "delta " << delta;
    }
}

TEST(Gradients, ZeroLossGivesZeroGradients) {
    const auto cfg = NetConfig::desk();
    TrainingSample s = make_sample(cfg, 10, 10, 16);
    s.context = ContextBundle::make(s.context.frame, std::nullopt, ClickState(10, 10));
    s.target = Tensor({10, 10}, 0.5);
    const auto g = gradients(s, NetworkParams::zeros(cfg));
    EXPECT_EQ(g.loss, 0.0);
    for (const auto& l : g.grads) {
        EXPECT_EQ(l.weights.squared_norm(), 0.0);
        EXPECT_EQ(l.bias.squared_norm(), 0.0);
    }
}

TEST(Gradients, JaccardWeightScalesLinearly) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 17);
    const auto s = make_sample(cfg, 12, 12, 18);
    LossSpec one{1.0, 1.0, 0.0, 0.0}, two{1.0, 2.0, 0.0, 0.0};
    const auto a = gradients(s, params, one), b = gradients(s, params, two);
    for (std::size_t l = 0; l < cfg.num_layers; ++l)
        for (std::size_t i = 0; i < a.grads[l].weights.size(); ++i)
            ASSERT_NEAR(b.grads[l].weights[i], 2.0 * a.grads[l].weights[i], 1e-12 * (1 + std::abs(a.grads[l].weights[i])));
}

TEST(Gradients, BatchIsMeanOfSingletons) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 19);
    const std::vector<TrainingSample> batch{make_sample(cfg, 12, 10, 20), make_sample(cfg, 12, 10, 21)};
    const auto both = gradients(batch, params);
    const auto g0 = gradients(batch[0], params), g1 = gradients(batch[1], params);
    EXPECT_NEAR(both.loss, 0.5 * (g0.loss + g1.loss), 1e-14);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        for (std::size_t i = 0; i < both.grads[l].weights.size(); ++i)
            ASSERT_NEAR(both.grads[l].weights[i], 0.5 * (g0.grads[l].weights[i] + g1.grads[l].weights[i]), 1e-14);
        for (std::size_t i = 0; i < both.grads[l].bias.size(); ++i)
            ASSERT_NEAR(both.grads[l].bias[i], 0.5 * (g0.grads[l].bias[i] + g1.grads[l].bias[i]), 1e-14);
    }
}

TEST(Gradients, NonFiniteParamsReportLayer) {
    const auto cfg = NetConfig::desk();
    auto params = NetworkParams::init(cfg, 22);
    params.layers[2].bias[0] = NAN;
    try {
        gradients(make_sample(cfg, 8, 8, 23), params);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos) << e.what();
    }
}

TEST(RankHeads, DefaultAndRerank) {
    std::mt19937_64 rng(24);
    SegmentationProposals one{random_tensor({1, 5, 5}, rng), Tensor({1, 5, 5})};
    EXPECT_EQ(rank_heads(one), (std::vector<std::size_t>{1}));
    SegmentationProposals p{random_tensor({4, 7, 6}, rng), Tensor({4, 7, 6})};
    EXPECT_EQ(rank_heads(p), (std::vector<std::size_t>{1, 2, 3, 4}));
    const ClickState clicks(7, 6, {{1, 1}, {3, 3}}, {{6, 5}});
    std::vector<std::pair<double, std::size_t>> direct;
    for (std::size_t m = 1; m <= 4; ++m) {
        const Tensor s = p.soft(m);
        direct.push_back({(1 - s(1, 1)) + (1 - s(3, 3)) + s(6, 5), m});
    }
    std::sort(direct.begin(), direct.end());
    std::vector<std::size_t> expect;
    for (auto [v, m] : direct) expect.push_back(m);
    EXPECT_EQ(rank_heads(p, &clicks), expect);
    EXPECT_THROW(p.soft(5), ArgumentError);
    EXPECT_THROW(p.mask(0), ArgumentError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    const auto params = NetworkParams::init(NetConfig::desk(), 25);
    const auto dir = std::filesystem::temp_directory_path() / "hyperseg_net_ckpt_test";
    std::filesystem::remove_all(dir);
    params.save(dir);
    EXPECT_EQ(NetworkParams::load(dir), params);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(NetworkParams::load(dir), NotFoundError);
}

TEST(Checkpoint, InitIsSeeded) {
    const auto cfg = NetConfig::desk();
    EXPECT_EQ(NetworkParams::init(cfg, 3), NetworkParams::init(cfg, 3));
    EXPECT_NE(NetworkParams::init(cfg, 3), NetworkParams::init(cfg, 4));
    const auto p = NetworkParams::init(cfg, 3);
    const double bound = std::sqrt(6.0 / 26.0);
    for (double v : p.layers[0].weights.data()) EXPECT_LE(std::abs(v), bound);
    EXPECT_EQ(p.parameter_count(), 12u * 26 + 12 + 4 * (12u * 22 * 9 + 12) + 3u * 22 * 9 + 3);
}

TEST(Checkpoint, InitGivesHeadsTheSameStart) {
    const auto p = NetworkParams::init(NetConfig::desk(), 11);
    const auto& out = p.layers.back().weights;
    const auto first = out.slab(0);
    for (std::size_t m = 1; m < out.extent(0); ++m) {
        const auto other = out.slab(m);
        EXPECT_TRUE(std::equal(first.begin(), first.end(), other.begin()));
    }
    const auto& hidden = p.layers[1].weights;
    EXPECT_FALSE(std::equal(hidden.slab(0).begin(), hidden.slab(0).end(), hidden.slab(1).begin()));
}

}  // namespace
}  // namespace hyperseg
