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

#include "hyperseg/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include <json.hpp>

#include "hyperseg/conv.hpp"
#include "hyperseg/errors.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {

NetConfig NetConfig::desk() { return NetConfig{}; }

NetConfig NetConfig::full_scale() {
    NetConfig c;
    c.feature_depth = 736;
    c.hidden_depth = 70;
    c.num_layers = 10;
    c.num_heads = 6;
    c.dilations = {1, 1, 2, 4, 8, 16, 32, 64, 128, 1};
    return c;
}

void NetConfig::validate() const {
    if (num_layers < 2) throw ArgumentError("NetConfig: at least two layers are required");
    if (dilations.size() != num_layers) {
        throw ArgumentError("NetConfig: " + std::to_string(dilations.size()) + " dilations for " +
                            std::to_string(num_layers) + " layers");
    }
    if (context_depth == 0 || feature_depth == 0 || hidden_depth == 0 || num_heads == 0) {
        throw ArgumentError("NetConfig: depths and head count must be positive");
    }
    if (first_kernel % 2 == 0 || kernel % 2 == 0) throw ArgumentError("NetConfig: kernel sizes must be odd");
    for (auto d : dilations)
        if (d == 0) throw ArgumentError("NetConfig: dilations must be positive");
}

std::vector<std::size_t> NetConfig::layer_input_depths() const {
    std::vector<std::size_t> out(num_layers, hidden_depth + context_depth);
    out[0] = feature_depth + context_depth;
    return out;
}

std::vector<std::size_t> NetConfig::layer_output_depths() const {
    std::vector<std::size_t> out(num_layers, hidden_depth);
    out.back() = num_heads;
    return out;
}

std::size_t NetConfig::receptive_field() const {
    std::size_t rf = 1;
    for (std::size_t l = 0; l < num_layers; ++l) rf += 2 * dilations[l] * (kernel_size(l) / 2);
    return rf;
}

std::string NetConfig::to_json() const {
    const nlohmann::json j{{"context_depth", context_depth}, {"feature_depth", feature_depth},
                           {"hidden_depth", hidden_depth},   {"num_layers", num_layers},
                           {"num_heads", num_heads},         {"dilations", dilations},
                           {"first_kernel", first_kernel},   {"kernel", kernel}};
    return j.dump(2);
}

NetConfig NetConfig::from_json(std::string_view text) {
    NetConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.context_depth = j.value("context_depth", c.context_depth);
        c.feature_depth = j.value("feature_depth", c.feature_depth);
        c.hidden_depth = j.value("hidden_depth", c.hidden_depth);
        c.num_layers = j.value("num_layers", c.num_layers);
        c.num_heads = j.value("num_heads", c.num_heads);
        c.dilations = j.value("dilations", c.dilations);
        c.first_kernel = j.value("first_kernel", c.first_kernel);
        c.kernel = j.value("kernel", c.kernel);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("network config: ") + e.what());
    }
    c.validate();
    return c;
}

NetworkParams NetworkParams::zeros(const NetConfig& config) {
    config.validate();
    NetworkParams p;
    p.config = config;
    const auto in = config.layer_input_depths();
    const auto out = config.layer_output_depths();
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const std::size_t k = config.kernel_size(l);
        p.layers.push_back({Tensor({out[l], in[l], k, k}), Tensor({out[l]})});
    }
    return p;
}

NetworkParams NetworkParams::init(const NetConfig& config, std::uint64_t seed) {
    NetworkParams p = zeros(config);
    std::mt19937_64 rng(seed);
    for (auto& layer : p.layers) {
        const auto& s = layer.weights.shape();
        const double bound = std::sqrt(6.0 / static_cast<double>(s[1] * s[2] * s[3]));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : layer.weights.data()) v = u(rng);
    }
    // Heads start identical; the tie rule and the diversity weights then
    // decide which head leads.
    auto& out = p.layers.back().weights;
    for (std::size_t m = 1; m < out.extent(0); ++m) {
        const auto first = std::as_const(out).slab(0);
        std::copy(first.begin(), first.end(), out.slab(m).begin());
    }
    return p;
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

void NetworkParams::validate() const {
    const NetworkParams ref = zeros(config);
    if (layers.size() != ref.layers.size()) {
        throw ArgumentError("NetworkParams: " + std::to_string(layers.size()) + " layers, config has " +
                            std::to_string(ref.layers.size()));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].weights.shape() != ref.layers[l].weights.shape() ||
            layers[l].bias.shape() != ref.layers[l].bias.shape()) {
            throw ArgumentError("NetworkParams: layer " + std::to_string(l + 1) + " has weights " +
                                shape_to_string(layers[l].weights.shape()) + ", expected " +
                                shape_to_string(ref.layers[l].weights.shape()));
        }
    }
}

void NetworkParams::save(const std::filesystem::path& dir) const {
    validate();
    std::filesystem::create_directories(dir);
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string w = "layer" + std::to_string(l) + "_weights.hseg";
        const std::string b = "layer" + std::to_string(l) + "_bias.hseg";
        save_tensor(layers[l].weights, dir / w);
        save_tensor(layers[l].bias, dir / b);
        files.push_back({{"weights", w}, {"bias", b}});
    }
    const nlohmann::json manifest{{"format", "hyperseg-network"},
                                  {"version", 1},
                                  {"config", nlohmann::json::parse(config.to_json())},
                                  {"layers", files}};
    write_file(dir / "network.json", manifest.dump(2));
}

NetworkParams NetworkParams::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "network.json";
    NetworkParams p;
    try {
        const auto m = nlohmann::json::parse(read_file(manifest_path));
        if (m.value("format", std::string()) != "hyperseg-network") {
            throw FormatError(manifest_path.string() + " is not a network manifest");
        }
        p.config = NetConfig::from_json(m.at("config").dump());
        for (const auto& f : m.at("layers")) {
            p.layers.push_back({load_tensor(dir / f.at("weights").get<std::string>()),
                                load_tensor(dir / f.at("bias").get<std::string>())});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("network manifest " + manifest_path.string() + ": " + e.what());
    }
    p.validate();
    return p;
}

namespace {

Tensor as_channel(const Tensor& plane) { return plane.reshaped({1, plane.extent(0), plane.extent(1)}); }

void require_plane_of(const Tensor& t, std::size_t w, std::size_t h, const char* what) {
    if (t.shape() != Shape{w, h}) {
        throw ArgumentError(std::string("context: ") + what + " has shape " + shape_to_string(t.shape()) +
                            ", expected " + shape_to_string({w, h}));
    }
}

}  // namespace

ContextBundle ContextBundle::make(const Tensor& frame, const std::optional<Tensor>& prev_frame,
                                  const ClickState& clicks) {
    if (frame.rank() != 3 || frame.extent(0) != 3) {
        throw ArgumentError("context: frame must be 3 x W x H, got " + shape_to_string(frame.shape()));
    }
    const std::size_t w = frame.extent(1), h = frame.extent(2);
    if (prev_frame && prev_frame->shape() != frame.shape()) {
        throw ArgumentError("context: previous frame " + shape_to_string(prev_frame->shape()) +
                            " differs from current " + shape_to_string(frame.shape()));
    }
    if (clicks.width() != w || clicks.height() != h) {
        throw ArgumentError("context: click state is " + std::to_string(clicks.width()) + "x" +
                            std::to_string(clicks.height()) + " for a " + std::to_string(w) + "x" +
                            std::to_string(h) + " frame");
    }
    ContextBundle c;
    c.frame = frame;
    c.prev_frame = prev_frame ? *prev_frame : frame;
    c.pos_clicks = clicks.positive_mask();
    c.neg_clicks = clicks.negative_mask();
    const double diag = std::sqrt(static_cast<double>(w * w + h * h));
    c.pos_distance = clicks.positive_distance();
    c.neg_distance = clicks.negative_distance();
    for (auto& v : c.pos_distance.data()) v /= diag;
    for (auto& v : c.neg_distance.data()) v /= diag;
    return c;
}

Tensor ContextBundle::stacked() const {
    const std::size_t w = width(), h = height();
    if (prev_frame.shape() != frame.shape()) throw ArgumentError("context: frame extents differ");
    require_plane_of(pos_clicks, w, h, "positive click raster");
    require_plane_of(neg_clicks, w, h, "negative click raster");
    require_plane_of(pos_distance, w, h, "positive distance map");
    require_plane_of(neg_distance, w, h, "negative distance map");
    const std::vector<Tensor> parts{frame,
                                    prev_frame,
                                    as_channel(pos_clicks),
                                    as_channel(neg_clicks),
                                    as_channel(pos_distance),
                                    as_channel(neg_distance)};
    return concat0(parts);
}

Tensor SegmentationProposals::soft(std::size_t m) const {
    if (m < 1 || m > num_heads()) {
        throw ArgumentError("head " + std::to_string(m) + " outside [1, " + std::to_string(num_heads()) + "]");
    }
    return slice0(soft_maps, m - 1, m).reshaped({soft_maps.extent(1), soft_maps.extent(2)});
}

Tensor SegmentationProposals::mask(std::size_t m) const {
    if (m < 1 || m > num_heads()) {
        throw ArgumentError("head " + std::to_string(m) + " outside [1, " + std::to_string(num_heads()) + "]");
    }
    return slice0(binary_masks, m - 1, m).reshaped({binary_masks.extent(1), binary_masks.extent(2)});
}

ForwardTrace forward_trace(const ContextBundle& ctx, const Tensor& features, const NetworkParams& params,
                           const ForwardOptions& options) {
    params.validate();
    const NetConfig& cfg = params.config;
    ForwardTrace t;
    t.context = ctx.stacked();
    if (t.context.extent(0) != cfg.context_depth) {
        throw ArgumentError("forward: context has " + std::to_string(t.context.extent(0)) + " channels, config expects " +
                            std::to_string(cfg.context_depth));
    }
    if (features.rank() != 3 || features.extent(0) != cfg.feature_depth || features.extent(1) != ctx.width() ||
        features.extent(2) != ctx.height()) {
        throw ArgumentError("forward: features " + shape_to_string(features.shape()) + " do not match " +
                            std::to_string(cfg.feature_depth) + " x " + std::to_string(ctx.width()) + " x " +
                            std::to_string(ctx.height()));
    }
    const std::size_t last = cfg.num_layers - 1;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        const Tensor& prev = l == 0 ? features : t.outputs.back();
        const std::vector<Tensor> parts{prev, t.context};
        t.inputs.push_back(concat0(parts));
        Tensor z = conv2d_same(t.inputs.back(), params.layers[l].weights, params.layers[l].bias, cfg.dilations[l]);
        if (!options.linear) {
            if (l == last) {
                for (auto& v : z.data()) v = 1.0 / (1.0 + std::exp(-v));
            } else if (l > 0) {
                for (auto& v : z.data()) v = std::max(v, 0.0);
            }
        }
        t.outputs.push_back(std::move(z));
    }
    t.proposals.soft_maps = t.outputs.back();
    t.proposals.binary_masks = Tensor(t.proposals.soft_maps.shape());
    for (std::size_t i = 0; i < t.proposals.soft_maps.size(); ++i) {
        t.proposals.binary_masks[i] = t.proposals.soft_maps[i] >= 0.5 ? 1.0 : 0.0;
    }
    return t;
}

SegmentationProposals forward(const ContextBundle& ctx, const Tensor& features, const NetworkParams& params,
                              const ForwardOptions& options) {
    return forward_trace(ctx, features, params, options).proposals;
}

namespace {

void require_finite_trace(const ForwardTrace& t) {
    for (std::size_t l = 0; l < t.outputs.size(); ++l) {
        if (!t.outputs[l].all_finite()) {
            throw NumericError("non-finite activations at layer " + std::to_string(l + 1) + " of " +
                               std::to_string(t.outputs.size()));
        }
    }
}

// Accumulates scale * d loss / d params of one sample into `acc`.
LossBreakdown backprop_sample(const TrainingSample& s, const NetworkParams& params, const LossSpec& spec,
                              double scale, std::vector<LayerParams>& acc) {
    const ForwardTrace t = forward_trace(s.context, s.features, params);
    require_finite_trace(t);
    if (s.target.shape() != Shape{s.context.width(), s.context.height()}) {
        throw ArgumentError("gradients: target " + shape_to_string(s.target.shape()) + " does not match frame");
    }
    auto lg = total_loss_with_grad(s.target, t.proposals.soft_maps, s.context.pos_clicks, s.context.neg_clicks, spec);
    if (!std::isfinite(lg.loss.total)) {
        throw NumericError("non-finite loss " + std::to_string(lg.loss.total) + " with finite activations");
    }
    const NetConfig& cfg = params.config;
    Tensor delta = std::move(lg.grad);
    const Tensor& out = t.outputs.back();
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= scale * out[i] * (1.0 - out[i]);
    for (std::size_t l = cfg.num_layers; l-- > 0;) {
        ConvGrads g = conv2d_same_backward(t.inputs[l], params.layers[l].weights, delta, cfg.dilations[l], l > 0);
        for (std::size_t i = 0; i < g.weights.size(); ++i) acc[l].weights[i] += g.weights[i];
        for (std::size_t i = 0; i < g.bias.size(); ++i) acc[l].bias[i] += g.bias[i];
        if (l == 0) break;
        // Keep only the channels that came from the previous layer, then undo its ReLU.
        delta = slice0(g.input, 0, cfg.hidden_depth);
        if (l - 1 > 0) {
            const Tensor& a = t.outputs[l - 1];
            for (std::size_t i = 0; i < delta.size(); ++i)
                if (a[i] <= 0.0) delta[i] = 0.0;
        }
    }
    return lg.loss;
}

}  // namespace

GradientResult gradients(std::span<const TrainingSample> batch, const NetworkParams& params, const LossSpec& spec) {
    if (batch.empty()) throw ArgumentError("gradients: empty batch");
    GradientResult r;
    r.grads = NetworkParams::zeros(params.config).layers;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        r.breakdowns.push_back(backprop_sample(s, params, spec, scale, r.grads));
        r.loss += scale * r.breakdowns.back().total;
    }
    return r;
}

GradientResult gradients(const TrainingSample& sample, const NetworkParams& params, const LossSpec& spec) {
    return gradients(std::span<const TrainingSample>(&sample, 1), params, spec);
}

double sample_loss(const TrainingSample& sample, const NetworkParams& params, const LossSpec& spec,
                   const std::vector<std::vector<Point>>* frozen_boundaries) {
    const auto p = forward(sample.context, sample.features, params);
    const auto& sp = sample.context.pos_clicks;
    const auto& sn = sample.context.neg_clicks;
    if (frozen_boundaries) {
        return total_loss_frozen_boundary(sample.target, p.soft_maps, sp, sn, *frozen_boundaries, spec).total;
    }
    return total_loss(sample.target, p.soft_maps, sp, sn, spec).total;
}

std::vector<std::size_t> rank_heads(const SegmentationProposals& p, const ClickState* rerank_by) {
    std::vector<std::size_t> order(p.num_heads());
    std::iota(order.begin(), order.end(), std::size_t{1});
    if (rerank_by == nullptr || rerank_by->click_count() == 0) return order;
    std::vector<double> ic;
    for (std::size_t m = 1; m <= p.num_heads(); ++m) {
        ic.push_back(interactive_context_loss(rerank_by->positive_mask(), rerank_by->negative_mask(), p.soft(m)));
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ic[a - 1] < ic[b - 1]; });
    return order;
}

}  // namespace hyperseg
