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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <httplib.h>
#include <json.hpp>

#include "gradcheck.hpp"
#include "hyperseg/backbone.hpp"
#include "hyperseg/image_io.hpp"
#include "hyperseg/interaction.hpp"
#include "hyperseg/losses.hpp"
#include "hyperseg/segnet.hpp"
#include "hyperseg/service.hpp"
#include "hyperseg/tessellation.hpp"
#include "hyperseg/trainer.hpp"
#include "hyperseg/tucker.hpp"
#include "oracles.hpp"

namespace hyperseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace testing::oracle;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

Tensor normal_tensor(const Shape& shape, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Tensor t(shape);
    for (auto& v : t.data()) v = n(rng);
    return t;
}

Tensor uniform_tensor(const Shape& shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(shape);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

Tensor bernoulli_mask(std::size_t w, std::size_t h, std::mt19937_64& rng, double p) {
    std::bernoulli_distribution b(p);
    Tensor t({w, h});
    for (auto& v : t.data()) v = b(rng) ? 1.0 : 0.0;
    return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

// ---- criteria ----------------------------------------------------------------

void tucker_exactness(Outcome& o) {
    std::mt19937_64 rng(101);
    double worst_rel = 0.0, worst_full = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Tensor c = normal_tensor({8, 5, 5}, rng);
        Eigen::MatrixXd m(8, 25);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 25; ++j) m(i, j) = c[std::size_t(i * 25 + j)];
        const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
        const std::size_t rank = 1 + std::size_t(t) % 7;
        double discarded = 0.0;
        for (long i = long(rank); i < s.size(); ++i) discarded += s(i) * s(i);
        auto error_sq = [&](std::size_t r) {
            const auto res = depth_tucker(c, r);
            const Tensor back = reconstruct_from_core(res.core, res.factor);
            double e = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) e += (c[i] - back[i]) * (c[i] - back[i]);
            return e;
        };
        worst_rel = std::max(worst_rel, std::abs(error_sq(rank) - discarded) / discarded);
        worst_full = std::max(worst_full, std::sqrt(error_sq(8)));
    }
    o.require(worst_rel < 1e-8, "truncated error vs discarded spectrum");
    o.require(worst_full < 1e-9, "full-rank error");
    o.detail << "50 tensors, max relative gap " << worst_rel << ", max full-rank error " << worst_full;
}

void rank_allocation(Outcome& o) {
    const std::vector<std::size_t> depths{64, 128, 256, 512, 512};
    const auto plan = CompressionPlan::halving(depths);
    o.require(plan.total_compressed_depth() == 736, "total depth");
    o.detail << "halved [64,128,256,512,512] -> " << plan.total_compressed_depth();
}

void tessellation(Outcome& o) {
    const auto g = tile_grid(1920, 1080, 224, 224);
    o.require(g.tile_count == 45 && g.padded_w == 2016 && g.padded_h == 1120, "1920x1080 grid");
    std::mt19937_64 rng(102);
    int round_trips = 0;
    for (int t = 0; t < 200; ++t) {
        const auto grid = tile_grid(1 + rng() % 40, 1 + rng() % 40, 1 + rng() % 12, 1 + rng() % 12);
        const Tensor x = normal_tensor({1 + rng() % 4, grid.padded_w, grid.padded_h}, rng);
        round_trips += bit_equal(reassemble_tiles(stack_tiles(x, grid), grid), x);
    }
    o.require(round_trips == 200, "stack/reassemble round trip");
    const auto b = Backbone::toy_vgg({});
    const auto plan = CompressionPlan::halving(b.tap_depths());
    int single = 0;
    for (int t = 0; t < 3; ++t) {
        const Tensor img = uniform_tensor({3, 32, 32}, rng);
        const auto fs = tessellate_extract(img, b, plan);
        single += fs.tile_count == 1 && bit_equal(fs.features, compress_stack(b.tap_features(img), plan).first);
    }
    o.require(single == 3, "single tile equals direct path");
    o.detail << g.cols << "x" << g.rows << " = " << g.tile_count << " tiles, padded " << g.padded_w << "x"
             << g.padded_h << "; round trips " << round_trips << "/200; single-tile " << single << "/3 bit-exact";
}

void distance_transform(Outcome& o) {
    std::mt19937_64 rng(103);
    int exact = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t w = 1 + rng() % 32, h = 1 + rng() % 32;
        std::vector<Point> clicks;
        const std::size_t n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i) clicks.push_back({rng() % w, rng() % h});
        exact += distance_map(clicks, w, h) == brute_force_distance(clicks, w, h);
    }
    const double d22 = distance_map({{0, 0}}, 3, 3)(2, 2);
    o.require(exact == 100, "fast transform vs brute force");
    o.require(d22 == 2.0 * std::sqrt(2.0), "D(2,2)");
    o.detail << exact << "/100 exact, D(2,2) = " << d22;
}

void loss_unit_values(Outcome& o) {
    const double j = jaccard_loss(Tensor({4, 1}, {1, 1, 0, 0}), Tensor({4, 1}, {1, 0, 1, 0}));
    o.require(j == 2.0 / 3.0, "jaccard 2/3");
    Tensor f({3, 3}), y({3, 3});
    f(1, 1) = 0.6;
    y(1, 1) = 1.6;
    const double phl = boundary_phl(y, f, 1.0);
    o.require(std::abs(phl - (std::sqrt(2.0) - 1.0)) <= 1e-12, "pseudo-Huber single point");
    const auto w = diversity_weights(6);
    o.require(w == std::vector<double>{0.32, 0.16, 0.08, 0.04, 0.02, 0.01}, "diversity weights");

    std::mt19937_64 rng(104);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Tensor target = bernoulli_mask(12, 10, rng, 0.5);
        const Tensor heads = uniform_tensor({3, 12, 10}, rng);
        const ClickState clicks(12, 10, {{1, 2}, {3, 4}}, {{11, 9}});
        const auto b = total_loss(target, heads, clicks);
        double best = INFINITY, diversity = 0.0, boundary = 0.0;
        for (std::size_t m = 0; m < 3; ++m) {
            const Tensor fm = slice0(heads, m, m + 1).reshaped({12, 10});
            const double jm = jaccard_loss(fm, target);
            const double cm = interactive_context_loss(clicks.positive_mask(), clicks.negative_mask(), fm);
            best = std::min(best, jm + cm);
            diversity += 0.01 * std::pow(2.0, double(2 - m)) * jm;
            boundary += boundary_phl(target, fm, 1.0);
        }
        worst = std::max(worst, std::abs(b.total - (best + diversity + boundary)));
    }
    o.require(worst <= 1e-12, "total loss recomposition");
    o.detail << "jaccard " << j << ", phl " << phl << ", weights ok, recomposition gap " << worst;
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
    s.context = ContextBundle::make(uniform_tensor({3, w, h}, rng), uniform_tensor({3, w, h}, rng), clicks);
    s.features = uniform_tensor({cfg.feature_depth, w, h}, rng, -1.0, 1.0);
    return s;
}

void gradient_check(Outcome& o) {
    const auto cfg = NetConfig::desk();
    o.require(cfg.num_layers == 6, "six-layer desk config");
    const auto params = NetworkParams::init(cfg, 105);
    const auto sample = make_sample(cfg, 14, 12, 106);
    const auto report = testing::finite_difference_check(sample, params, {}, 24, 107, 1e-5);
    o.require(report.probes.size() >= 20, "at least 20 probes");
    o.require(report.max_rel_error() < 1e-4, "relative error");
    o.detail << report.probes.size() << " parameters, max relative error " << report.max_rel_error() << " ("
             << report.skipped << " draws resampled at regime changes)";
}

void full_resolution(Outcome& o) {
    const auto cfg = NetConfig::desk();
    const auto params = NetworkParams::init(cfg, 108);
    std::mt19937_64 rng(109);
    int ok = 0;
    for (int t = 0; t < 5; ++t) {
        const std::size_t w = 9 + rng() % 40, h = 9 + rng() % 40;
        const auto s = make_sample(cfg, w, h, 110 + std::uint64_t(t));
        const auto trace = forward_trace(s.context, s.features, params);
        bool all = trace.outputs.size() == cfg.num_layers;
        for (const auto& out : trace.outputs) all = all && out.extent(1) == w && out.extent(2) == h;
        ok += all;
    }
    o.require(ok == 5, "layer extents");

    // The first layer is 1x1; every later 3x3 layer widens the field by 2 * dilation.
    std::size_t dilation_sum = 0;
    for (std::size_t l = 1; l < cfg.dilations.size(); ++l) dilation_sum += cfg.dilations[l];
    const std::size_t rf = 1 + 2 * dilation_sum;
    const std::size_t n = rf + 14, cx = n / 2, cy = n / 2 - 3;
    auto s = make_sample(cfg, n, n, 120);
    ForwardOptions linear;
    linear.linear = true;
    const auto base = forward(s.context, s.features, params, linear).soft_maps;
    s.features(5, cx, cy) += 1.0;
    const auto bumped = forward(s.context, s.features, params, linear).soft_maps;
    const long half = long(rf / 2);
    std::size_t mismatches = 0;
    for (std::size_t m = 0; m < cfg.num_heads; ++m)
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) {
                const bool inside = std::abs(long(x) - long(cx)) <= half && std::abs(long(y) - long(cy)) <= half;
                mismatches += (bumped(m, x, y) != base(m, x, y)) != inside;
            }
    o.require(rf == cfg.receptive_field(), "receptive field formula");
    o.require(mismatches == 0, "impulse footprint");
    o.detail << ok << "/5 sizes keep W x H; impulse footprint " << rf << "x" << rf << ", " << mismatches
             << " mismatched pixels";
}

void training_sanity(Outcome& o) {
    TrainConfig single;
    single.steps = 500;
    single.optimizer = OptimizerKind::Adam;
    single.learning_rate = 3e-4;
    single.num_scenes = 1;
    single.eval_every = 100;
    const auto a = train(single);
    const double miou = a.curve.back().miou;
    o.require(miou >= 0.95, "single-scene head-1 mIOU");

    TrainConfig eight;
    eight.steps = 200;
    eight.num_scenes = 8;
    const auto b = train(eight);
    const double first = b.curve.front().loss, last = b.curve.back().loss;
    o.require(last < first, "8-scene loss decrease");
    o.detail << "single scene 500 steps: head-1 mIOU " << miou << "; 8 scenes 200 steps (" << optimizer_name(eight.optimizer)
             << " " << eight.learning_rate << "): loss " << first << " -> " << last << ", min-head counts [";
    for (std::size_t m = 0; m < b.min_head_counts.size(); ++m) o.detail << (m ? "," : "") << b.min_head_counts[m];
    o.detail << "]";
}

void metrics_oracle(Outcome& o) {
    std::mt19937_64 rng(111);
    std::vector<Tensor> pred, gt;
    double si = 0.0, sb = 0.0;
    int exact = 0;
    for (int t = 0; t < 100; ++t) {
        pred.push_back(bernoulli_mask(16, 16, rng, 0.2 + 0.006 * t));
        gt.push_back(bernoulli_mask(16, 16, rng, 0.7 - 0.005 * t));
        const double ti = iou_oracle(foreground(pred.back()), foreground(gt.back()));
        const double tb = iou_oracle(dilate_oracle(outer_boundary_oracle(pred.back()), 16, 16),
                                     dilate_oracle(outer_boundary_oracle(gt.back()), 16, 16));
        exact += iou(pred.back(), gt.back()) == ti && boundary_iou(pred.back(), gt.back()) == tb;
        si += ti;
        sb += tb;
    }
    o.require(exact == 100, "per-pair values");
    o.require(miou(pred, gt) == si / 100.0 && mbiou(pred, gt) == sb / 100.0, "means");
    o.require(miou(pred, pred) == 1.0 && mbiou(pred, pred) == 1.0, "identical masks");
    o.detail << exact << "/100 pairs exact, mIOU " << si / 100.0 << ", mBIOU " << sb / 100.0;
}

class LocalServer {
public:
    LocalServer(const fs::path& store, std::shared_ptr<const CheckpointRegistry> reg)
        : service_(ServiceOptions{store, 256u << 20, 1, false}, std::move(reg)), http_(service_) {
        port_ = http_.bind("127.0.0.1", 0);
        thread_ = std::thread([this] { http_.listen(); });
    }
    ~LocalServer() {
        http_.stop();
        thread_.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }
    SessionService& service() { return service_; }

private:
    SessionService service_;
    HttpServer http_;
    int port_ = 0;
    std::thread thread_;
};

void service_determinism(Outcome& o) {
    const fs::path store = fs::temp_directory_path() / "hyperseg_acceptance_store";
    fs::remove_all(store);
    auto reg = std::make_shared<CheckpointRegistry>();
    reg->add(std::make_shared<const Model>(Model::create("desk-acceptance", ToyVggConfig{}, NetConfig::desk(), 7)));
    LocalServer server(store, reg);
    auto client = server.client();

    SceneOptions so;
    so.min_size = so.max_size = 28;
    const auto scene = generate_scene(2024, so);
    const std::string frame = base64_encode(encode_png(scene.frame_curr));
    const auto clicks = simulate_clicks(scene.gt_mask, 5, 3, 2);
    std::vector<json> bodies;
    for (const auto& p : clicks.positive()) bodies.push_back({{"x", p.x}, {"y", p.y}, {"polarity", "pos"}});
    for (const auto& p : clicks.negative()) bodies.push_back({{"x", p.x}, {"y", p.y}, {"polarity", "neg"}});

    auto session = [&](const std::vector<json>& order) {
        auto r = client.Post("/v1/sessions", json{{"frame_png_base64", frame}}.dump(), "application/json");
        if (!r || r->status != 201) throw std::runtime_error("session create failed");
        const std::string id = json::parse(r->body).at("session_id");
        for (const auto& b : order) {
            auto c = client.Post("/v1/sessions/" + id + "/clicks", b.dump(), "application/json");
            if (!c || c->status != 200) throw std::runtime_error("click failed");
        }
        return id;
    };
    auto masks = [&](const std::string& id) {
        std::vector<std::string> out;
        for (int head = 1; head <= 3; ++head)
            for (const char* format : {"png", "tensor"}) {
                auto r = client.Get("/v1/sessions/" + id + "/mask?head=" + std::to_string(head) + "&format=" + format);
                out.push_back(r && r->status == 200 ? r->body : std::string("error"));
            }
        return out;
    };

    const std::string a = session(bodies);
    const auto reference = masks(a);
    std::vector<json> reversed(bodies.rbegin(), bodies.rend());
    std::vector<json> shuffled = bodies;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
    int orders = 0;
    for (const auto& order : {reversed, shuffled}) orders += masks(session(order)) == reference;
    o.require(orders == 2, "click order");

    server.service().evict_all();
    const bool hit = masks(a) == reference;
    server.service().evict_all();
    fs::remove(store / a / "features.hseg");
    const bool miss = masks(a) == reference;
    o.require(hit, "reload with cached features");
    o.require(miss, "reload with re-extracted features");
    o.detail << "6 payloads per session; " << orders << "/2 click orders identical; cache hit "
             << (hit ? "identical" : "different") << "; cache miss " << (miss ? "identical" : "different");
    fs::remove_all(store);
}

struct Criterion {
    const char* name;
    double limit_seconds;  // 0: no runtime bound
    std::function<void(Outcome&)> run;
};

}  // namespace
}  // namespace hyperseg

int main() {
    using namespace hyperseg;
    const std::vector<Criterion> criteria{
        {"tucker-exactness", 5, tucker_exactness},
        {"rank-allocation", 0, rank_allocation},
        {"tessellation", 10, tessellation},
        {"distance-transform", 5, distance_transform},
        {"loss-unit-values", 0, loss_unit_values},
        {"gradient-check", 60, gradient_check},
        {"full-resolution", 0, full_resolution},
        {"training-sanity", 600, training_sanity},
        {"metrics-oracle", 0, metrics_oracle},
        {"service-determinism", 0, service_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0 && seconds >= c.limit_seconds) o.require(false, "runtime over limit");
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail.str() << " [" << seconds << " s";
        if (c.limit_seconds > 0) std::cout << ", limit " << c.limit_seconds << " s";
        std::cout << "]" << std::endl;
    }
    std::cout << (criteria.size() - std::size_t(failures)) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
