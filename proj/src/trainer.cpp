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

#include "hyperseg/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include <json.hpp>

#include "hyperseg/errors.hpp"
#include "hyperseg/image_io.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

long uniform_int(std::mt19937_64& rng, long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); }

// Object and background description; render() places the object at an offset.
struct SceneModel {
    std::size_t w = 0, h = 0;
    Tensor background;  // 3 x W x H
    bool ellipse = true;
    double cx = 0, cy = 0, rx = 0, ry = 0, angle = 0;
    std::vector<std::pair<double, double>> polygon;  // vertices relative to the centre
    std::array<double, 3> color{};
    double stripe_freq = 0, stripe_angle = 0;
    int dx = 0, dy = 0;

    bool inside(double u, double v) const {
        if (ellipse) {
            const double c = std::cos(angle), s = std::sin(angle);
            const double a = (u * c + v * s) / rx, b = (-u * s + v * c) / ry;
            return a * a + b * b <= 1.0;
        }
        bool in = false;
        for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
            const auto [xi, yi] = polygon[i];
            const auto [xj, yj] = polygon[j];
            if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) in = !in;
        }
        return in;
    }

    std::pair<Tensor, Tensor> render(double ox, double oy) const {
        Tensor frame = background;
        Tensor mask({w, h});
        const double c = std::cos(stripe_angle), s = std::sin(stripe_angle);
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t y = 0; y < h; ++y) {
                const double u = static_cast<double>(x) - (cx + ox), v = static_cast<double>(y) - (cy + oy);
                if (!inside(u, v)) continue;
                mask(x, y) = 1.0;
                const double stripe = std::sin((u * c + v * s) * stripe_freq) > 0.0 ? 0.12 : -0.12;
                for (std::size_t ch = 0; ch < 3; ++ch) frame(ch, x, y) = std::clamp(color[ch] + stripe, 0.0, 1.0);
            }
        return {std::move(frame), std::move(mask)};
    }
};

SceneModel build_scene(std::uint64_t seed, const SceneOptions& opt) {
    if (opt.min_size < 8 || opt.max_size < opt.min_size || !(opt.min_area > 0.0) || !(opt.max_area > opt.min_area)) {
        throw ArgumentError("scene options: invalid size or area range");
    }
    std::mt19937_64 rng(seed);
    SceneModel sc;
    sc.w = static_cast<std::size_t>(uniform_int(rng, long(opt.min_size), long(opt.max_size)));
    sc.h = static_cast<std::size_t>(uniform_int(rng, long(opt.min_size), long(opt.max_size)));

    std::array<double, 3> bg{};
    for (auto& c : bg) c = uniform(rng, 0.2, 0.8);
    const double f1 = uniform(rng, 0.1, 0.5), f2 = uniform(rng, 0.1, 0.5);
    const double p1 = uniform(rng, 0.0, 6.3), p2 = uniform(rng, 0.0, 6.3);
    sc.background = Tensor({3, sc.w, sc.h});
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t x = 0; x < sc.w; ++x)
            for (std::size_t y = 0; y < sc.h; ++y) {
                const double pattern = 0.15 * std::sin(f1 * double(x) + p1 + double(ch)) * std::cos(f2 * double(y) + p2);
                sc.background(ch, x, y) = std::clamp(bg[ch] + pattern + uniform(rng, -0.06, 0.06), 0.0, 1.0);
            }
    do {
        for (auto& c : sc.color) c = uniform(rng, 0.05, 0.95);
    } while (std::abs(sc.color[0] - bg[0]) + std::abs(sc.color[1] - bg[1]) + std::abs(sc.color[2] - bg[2]) < 0.6);
    sc.stripe_freq = uniform(rng, 0.5, 1.5);
    sc.stripe_angle = uniform(rng, 0.0, std::numbers::pi);
    sc.dx = static_cast<int>(uniform_int(rng, -opt.max_motion, opt.max_motion));
    sc.dy = static_cast<int>(uniform_int(rng, -opt.max_motion, opt.max_motion));

    const double side = static_cast<double>(std::min(sc.w, sc.h));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        sc.ellipse = rng() % 2 == 0;
        const double r = uniform(rng, 0.15, 0.42) * side;
        sc.rx = r * uniform(rng, 0.6, 1.0);
        sc.ry = r * uniform(rng, 0.6, 1.0);
        sc.angle = uniform(rng, 0.0, std::numbers::pi);
        sc.polygon.clear();
        if (!sc.ellipse) {
            const int k = static_cast<int>(uniform_int(rng, 5, 8));
            std::vector<double> angles;
            for (int i = 0; i < k; ++i) angles.push_back(uniform(rng, 0.0, 2.0 * std::numbers::pi));
            std::sort(angles.begin(), angles.end());
            for (double a : angles) {
                const double rr = r * uniform(rng, 0.7, 1.0);
                sc.polygon.push_back({rr * std::cos(a), rr * std::sin(a)});
            }
        }
        sc.cx = uniform(rng, r * 0.8, static_cast<double>(sc.w) - 1.0 - r * 0.8);
        sc.cy = uniform(rng, r * 0.8, static_cast<double>(sc.h) - 1.0 - r * 0.8);
        const auto [frame, mask] = sc.render(0.0, 0.0);
        double area = 0.0;
        for (double v : mask.data()) area += v;
        const double frac = area / static_cast<double>(sc.w * sc.h);
        if (frac >= opt.min_area && frac <= opt.max_area) return sc;
    }
    throw NumericError("scene generator: no admissible object for seed " + std::to_string(seed));
}

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, const SceneOptions& options) {
    const SceneModel sc = build_scene(seed, options);
    SyntheticScene out;
    auto [curr, mask] = sc.render(0.0, 0.0);
    out.frame_curr = std::move(curr);
    out.gt_mask = std::move(mask);
    out.frame_prev = sc.render(-sc.dx, -sc.dy).first;
    out.dx = sc.dx;
    out.dy = sc.dy;
    out.seed = seed;
    return out;
}

SyntheticClip generate_clip(std::uint64_t seed, std::size_t frames, const SceneOptions& options) {
    if (frames == 0) throw ArgumentError("generate_clip: at least one frame is required");
    const SceneModel sc = build_scene(seed, options);
    SyntheticClip clip;
    const long mid = static_cast<long>(frames) / 2;
    for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(static_cast<long>(k) - mid);
        auto [frame, mask] = sc.render(t * sc.dx, t * sc.dy);
        clip.frames.push_back(std::move(frame));
        clip.masks.push_back(std::move(mask));
    }
    return clip;
}

void write_synthetic_dataset(const std::filesystem::path& root, std::size_t clips, std::size_t frames_per_clip,
                             std::uint64_t seed) {
    if (clips == 0) throw ArgumentError("write_synthetic_dataset: at least one clip is required");
    for (std::size_t c = 0; c < clips; ++c) {
        char clip_name[32], frame_name[32];
        std::snprintf(clip_name, sizeof clip_name, "clip%03zu", c);
        const auto clip = generate_clip(seed + c, frames_per_clip);
        for (std::size_t f = 0; f < frames_per_clip; ++f) {
            std::snprintf(frame_name, sizeof frame_name, "%05zu.png", f);
            save_png(clip.frames[f], root / clip_name / "frames" / frame_name);
            write_file(root / clip_name / "masks" / frame_name, encode_png_mask(clip.masks[f]));
        }
    }
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    throw ArgumentError("optimizer must be \"sgd\" or \"adam\", got \"" + std::string(name) + "\"");
}

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ArgumentError(std::string("train config: ") + what);
    };
    need(steps >= 1, "steps must be positive");
    need(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    need(batch_size >= 1, "batch_size must be positive");
    need(delta > 0.0, "delta must be positive");
    need(num_heads >= 1, "num_heads must be positive");
    need(eval_every >= 1, "eval_every must be positive");
    need(num_scenes >= 1, "num_scenes must be positive");
    need(hidden_depth >= 1, "hidden_depth must be positive");
    need(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, "Adam betas must lie in [0, 1)");
    need(adam_epsilon > 0.0, "adam_epsilon must be positive");
}

std::string TrainConfig::to_json() const {
    const nlohmann::json j{{"steps", steps},
                           {"learning_rate", learning_rate},
                           {"optimizer", optimizer_name(optimizer)},
                           {"adam_beta1", adam_beta1},
                           {"adam_beta2", adam_beta2},
                           {"adam_epsilon", adam_epsilon},
                           {"batch_size", batch_size},
                           {"delta", delta},
                           {"num_heads", num_heads},
                           {"seed", seed},
                           {"eval_every", eval_every},
                           {"num_scenes", num_scenes},
                           {"scene_seed", scene_seed},
                           {"hidden_depth", hidden_depth},
                           {"threads", threads}};
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(std::string_view text) {
    TrainConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw FormatError("train config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "steps") c.steps = value.get<std::size_t>();
            else if (key == "learning_rate") c.learning_rate = value.get<double>();
            else if (key == "optimizer") c.optimizer = parse_optimizer(value.get<std::string>());
            else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
            else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
            else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
            else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
            else if (key == "delta") c.delta = value.get<double>();
            else if (key == "num_heads") c.num_heads = value.get<std::size_t>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "eval_every") c.eval_every = value.get<std::size_t>();
            else if (key == "num_scenes") c.num_scenes = value.get<std::size_t>();
            else if (key == "scene_seed") c.scene_seed = value.get<std::uint64_t>();
            else if (key == "hidden_depth") c.hidden_depth = value.get<std::size_t>();
            else if (key == "threads") c.threads = value.get<std::size_t>();
            else throw FormatError("train config: unknown key \"" + key + "\"");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double beta1, double beta2, double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Optimizer::step(NetworkParams& params, const std::vector<LayerParams>& grads) {
    if (grads.size() != params.layers.size()) throw ArgumentError("optimizer: gradient/parameter layer mismatch");
    if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t l = 0; l < grads.size(); ++l) {
            for (std::size_t i = 0; i < grads[l].weights.size(); ++i) params.layers[l].weights[i] -= lr_ * grads[l].weights[i];
            for (std::size_t i = 0; i < grads[l].bias.size(); ++i) params.layers[l].bias[i] -= lr_ * grads[l].bias[i];
        }
        return;
    }
    if (m_.empty()) {
        m_ = NetworkParams::zeros(params.config).layers;
        v_ = m_;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    };
    for (std::size_t l = 0; l < grads.size(); ++l) {
        update(params.layers[l].weights, grads[l].weights, m_[l].weights, v_[l].weights);
        update(params.layers[l].bias, grads[l].bias, m_[l].bias, v_[l].bias);
    }
}

namespace {

struct PreparedScene {
    SyntheticScene scene;
    Tensor features;
};

LossPoint evaluate_fixed(const std::vector<TrainingSample>& samples, const NetworkParams& params, const LossSpec& spec,
                         std::size_t step) {
    LossPoint p;
    p.step = step;
    for (const auto& s : samples) {
        const auto proposals = forward(s.context, s.features, params);
        p.loss += total_loss(s.target, proposals.soft_maps, s.context.pos_clicks, s.context.neg_clicks, spec).total;
        p.miou += iou(proposals.mask(1), s.target);
    }
    p.loss /= static_cast<double>(samples.size());
    p.miou /= static_cast<double>(samples.size());
    return p;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::function<void(const LossPoint&)>& on_eval) {
    config.validate();
    NetConfig net = NetConfig::desk();
    net.num_heads = config.num_heads;
    net.hidden_depth = config.hidden_depth;
    TrainResult result{Model::create("desk-s" + std::to_string(config.seed), ToyVggConfig{}, net, config.seed), {}, {}, {}};
    Model& model = result.model;
    result.min_head_counts.assign(config.num_heads, 0);

    std::vector<PreparedScene> scenes;
    std::vector<TrainingSample> eval_set;
    for (std::size_t i = 0; i < config.num_scenes; ++i) {
        PreparedScene p{generate_scene(config.scene_seed + i), {}};
        p.features = model.extract(p.scene.frame_curr, config.threads).features;
        const auto clicks = simulate_clicks(p.scene.gt_mask, p.scene.seed * 7919 + 17, 5, 5);
        eval_set.push_back({ContextBundle::make(p.scene.frame_curr, p.scene.frame_prev, clicks), p.features,
                            p.scene.gt_mask});
        scenes.push_back(std::move(p));
    }

    LossSpec spec;
    spec.delta = config.delta;
    Optimizer opt(config.optimizer, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    auto record = [&](std::size_t step) {
        result.curve.push_back(evaluate_fixed(eval_set, model.network, spec, step));
        if (on_eval) on_eval(result.curve.back());
    };
    record(0);
    for (std::size_t step = 1; step <= config.steps; ++step) {
        std::vector<TrainingSample> batch;
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const auto& p = scenes[rng() % scenes.size()];
            const std::size_t n_pos = 1 + rng() % 15, n_neg = 1 + rng() % 15;
            const auto clicks = simulate_clicks(p.scene.gt_mask, rng(), n_pos, n_neg);
            batch.push_back({ContextBundle::make(p.scene.frame_curr, p.scene.frame_prev, clicks), p.features,
                             p.scene.gt_mask});
        }
        GradientResult g;
        try {
            g = gradients(batch, model.network, spec);
        } catch (const NumericError& e) {
            throw NumericError("training diverged at step " + std::to_string(step) + ": " + e.what());
        }
        result.step_losses.push_back(g.loss);
        for (const auto& b : g.breakdowns) ++result.min_head_counts[b.min_head_index - 1];
        opt.step(model.network, g.grads);
        if (step % config.eval_every == 0 || step == config.steps) record(step);
    }
    return result;
}

void save_training(const TrainResult& result, const TrainConfig& config, const std::filesystem::path& dir) {
    result.model.save(dir);
    write_file(dir / "train_config.json", config.to_json());
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : result.curve) curve.push_back({{"step", p.step}, {"loss", p.loss}, {"miou", p.miou}});
    const nlohmann::json doc{{"curve", curve},
                             {"step_losses", result.step_losses},
                             {"min_head_counts", result.min_head_counts}};
    write_file(dir / "loss_curve.json", doc.dump(2));
}

MetricReport evaluate(const std::filesystem::path& root, const Predictor& predictor, const EvalOptions& options) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw NotFoundError("dataset root " + root.string() + " does not exist");
    std::set<fs::path> clips;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::is_directory(e.path() / "frames")) clips.insert(e.path());

    std::vector<ImageScore> scores;
    std::size_t index = 0;
    for (const auto& clip : clips) {
        std::set<fs::path> frames;
        for (const auto& e : fs::directory_iterator(clip / "frames"))
            if (e.is_regular_file() && e.path().extension() == ".png") frames.insert(e.path());
        std::optional<Tensor> prev;
        for (const auto& frame_path : frames) {
            ImageScore score;
            score.id = clip.filename().string() + "/" + frame_path.stem().string();
            const std::uint64_t click_seed = options.seed + index++;
            try {
                EvalItem item;
                item.id = score.id;
                item.frame_path = frame_path;
                item.frame = load_png_rgb(frame_path);
                item.prev_frame = prev && prev->shape() == item.frame.shape() ? *prev : item.frame;
                prev = item.frame;
                const auto mask_path = clip / "masks" / frame_path.filename();
                if (!fs::exists(mask_path)) throw NotFoundError("missing mask " + mask_path.string());
                const Tensor gt3 = load_png_mask(mask_path);
                const Tensor gt = gt3.reshaped({gt3.extent(1), gt3.extent(2)});
                if (gt.extent(0) != item.frame.extent(1) || gt.extent(1) != item.frame.extent(2)) {
                    throw FormatError("mask extents differ from frame");
                }
                item.clicks = simulate_clicks(gt, click_seed, options.positive_clicks, options.negative_clicks);
                Tensor pred = predictor(item);
                if (pred.rank() == 3 && pred.extent(0) == 1) pred = pred.reshaped({pred.extent(1), pred.extent(2)});
                score.iou = iou(pred, gt);
                score.biou = boundary_iou(pred, gt);
            } catch (const std::exception& e) {
                score.error = e.what();
            }
            scores.push_back(std::move(score));
        }
    }
    if (scores.empty()) throw ArgumentError("dataset " + root.string() + " contains no frames");
    return MetricReport::from_scores(std::move(scores));
}

Predictor model_predictor(const Model& model, std::size_t head, std::size_t threads) {
    if (head < 1 || head > model.network.config.num_heads) {
        throw ArgumentError("head " + std::to_string(head) + " outside [1, " +
                            std::to_string(model.network.config.num_heads) + "]");
    }
    return [&model, head, threads](const EvalItem& item) {
        const auto features = model.extract(item.frame, threads).features;
        return model.predict(item.frame, item.prev_frame, item.clicks, features).mask(head);
    };
}

}  // namespace hyperseg
