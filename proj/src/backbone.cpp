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

#include "hyperseg/backbone.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "hyperseg/conv.hpp"
#include "hyperseg/errors.hpp"
#include "hyperseg/resize.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {

Backbone::Backbone(std::string id, std::size_t input_width, std::size_t input_height,
                   std::vector<BackboneStage> stages, std::vector<std::size_t> tap_points)
    : id_(std::move(id)),
      input_width_(input_width),
      input_height_(input_height),
      stages_(std::move(stages)),
      taps_(std::move(tap_points)) {
    if (input_width_ == 0 || input_height_ == 0) {
        throw ArgumentError("backbone: input extents must be positive");
    }
    if (stages_.empty() || taps_.empty()) {
        throw ArgumentError("backbone: needs at least one stage and one tap");
    }
    std::size_t channels = stages_.front().weights.rank() == 4 ? stages_.front().weights.extent(1) : 0;
    std::size_t cumulative = 1;
    for (const auto& s : stages_) {
        if (s.weights.rank() != 4 || s.weights.extent(1) != channels || s.bias.size() != s.weights.extent(0)) {
            throw ArgumentError("backbone: stage '" + s.name + "' has inconsistent weight shapes");
        }
        if (s.downsample == 0) {
            throw ArgumentError("backbone: stage '" + s.name + "' has zero downsample factor");
        }
        channels = s.weights.extent(0);
        cumulative *= s.downsample;
        if (input_width_ % cumulative != 0 || input_height_ % cumulative != 0) {
            throw ArgumentError("backbone: stage '" + s.name + "' cumulative downsample " + std::to_string(cumulative) +
                                " does not divide the input extents");
        }
    }
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        if (taps_[i] >= stages_.size() || (i > 0 && taps_[i] <= taps_[i - 1])) {
            throw ArgumentError("backbone: tap points must be increasing stage indices");
        }
    }
}

Backbone Backbone::toy_vgg(const ToyVggConfig& config) {
    if (config.tap_depths.empty()) {
        throw ArgumentError("toy_vgg: at least one stage required");
    }
    std::mt19937_64 rng(config.seed);
    std::vector<BackboneStage> stages;
    std::vector<std::size_t> taps;
    std::size_t in = config.in_channels;
    for (std::size_t s = 0; s < config.tap_depths.size(); ++s) {
        const std::size_t out = config.tap_depths[s];
        BackboneStage st;
        st.name = "conv" + std::to_string(s + 1) + "_2";
        st.weights = Tensor({out, in, 3, 3});
        st.bias = Tensor({out});
        const double bound = std::sqrt(6.0 / static_cast<double>(in * 9));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : st.weights.data()) v = u(rng);
        for (auto& v : st.bias.data()) v = 0.1 * u(rng);
        st.activation = Activation::Relu;
        st.downsample = s == 0 ? 1 : 2;
        stages.push_back(std::move(st));
        taps.push_back(s);
        in = out;
    }
    std::string id = "toyvgg-" + std::to_string(config.input_width) + "x" + std::to_string(config.input_height) + "-";
    for (std::size_t i = 0; i < config.tap_depths.size(); ++i) {
        id += (i ? "." : "") + std::to_string(config.tap_depths[i]);
    }
    id += "-s" + std::to_string(config.seed);
    return Backbone(std::move(id), config.input_width, config.input_height, std::move(stages), std::move(taps));
}

Backbone Backbone::identity(std::size_t channels, std::size_t input_width, std::size_t input_height) {
    BackboneStage st;
    st.name = "identity";
    st.weights = Tensor({channels, channels, 1, 1});
    for (std::size_t c = 0; c < channels; ++c) st.weights[c * channels + c] = 1.0;
    st.bias = Tensor({channels});
    st.activation = Activation::Identity;
    st.downsample = 1;
    std::vector<BackboneStage> stages;
    stages.push_back(std::move(st));
    return Backbone("identity-" + std::to_string(channels), input_width, input_height, std::move(stages), {0});
}

std::vector<std::size_t> Backbone::tap_depths() const {
    std::vector<std::size_t> out;
    for (auto t : taps_) out.push_back(stages_[t].weights.extent(0));
    return out;
}

std::vector<std::string> Backbone::tap_names() const {
    std::vector<std::string> out;
    for (auto t : taps_) out.push_back(stages_[t].name);
    return out;
}

std::size_t Backbone::hypercolumn_depth() const {
    std::size_t d = 0;
    for (auto x : tap_depths()) d += x;
    return d;
}

std::vector<Tensor> Backbone::tap_features(const Tensor& tile) const {
    if (tile.rank() != 3 || tile.extent(1) != input_width_ || tile.extent(2) != input_height_ ||
        tile.extent(0) != input_channels()) {
        throw ArgumentError("backbone '" + id_ + "': tile " + shape_to_string(tile.shape()) + " does not match input " +
                            std::to_string(input_channels()) + "x" + std::to_string(input_width_) + "x" +
                            std::to_string(input_height_));
    }
    std::vector<Tensor> taps;
    Tensor x = tile;
    std::size_t next_tap = 0;
    for (std::size_t s = 0; s < stages_.size() && next_tap < taps_.size(); ++s) {
        const auto& st = stages_[s];
        x = conv2d_same(avg_pool(x, st.downsample), st.weights, st.bias, 1);
        if (st.activation == Activation::Relu) {
            for (auto& v : x.data()) v = v > 0.0 ? v : 0.0;
        }
        if (taps_[next_tap] == s) {
            taps.push_back(resize2d(x, input_width_, input_height_, ResizeMethod::Nearest));
            ++next_tap;
        }
    }
    return taps;
}

Tensor backbone_hypercolumn(const Tensor& tile, const Backbone& b) { return concat0(b.tap_features(tile)); }

void Backbone::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        const auto& st = stages_[s];
        const std::string w = "stage" + std::to_string(s) + "_weights.hseg";
        const std::string b = "stage" + std::to_string(s) + "_bias.hseg";
        save_tensor(st.weights, dir / w);
        save_tensor(st.bias, dir / b);
        stages.push_back({{"name", st.name},
                          {"weights", w},
                          {"bias", b},
                          {"activation", st.activation == Activation::Relu ? "relu" : "identity"},
                          {"downsample", st.downsample}});
    }
    nlohmann::json manifest = {{"id", id_},
                               {"input_width", input_width_},
                               {"input_height", input_height_},
                               {"stages", stages},
                               {"taps", taps_}};
    write_file(dir / "backbone.json", manifest.dump(2));
}

Backbone Backbone::load(const std::filesystem::path& manifest_path) {
    const auto dir = manifest_path.parent_path();
    try {
        const auto m = nlohmann::json::parse(read_file(manifest_path));
        std::vector<BackboneStage> stages;
        for (const auto& s : m.at("stages")) {
            BackboneStage st;
            st.name = s.at("name").get<std::string>();
            st.weights = load_tensor(dir / s.at("weights").get<std::string>());
            st.bias = load_tensor(dir / s.at("bias").get<std::string>());
            const auto act = s.value("activation", std::string("relu"));
            if (act != "relu" && act != "identity") {
                throw FormatError("unknown activation '" + act + "'");
            }
            st.activation = act == "relu" ? Activation::Relu : Activation::Identity;
            st.downsample = s.value("downsample", std::size_t{1});
            stages.push_back(std::move(st));
        }
        return Backbone(m.value("id", manifest_path.stem().string()), m.at("input_width").get<std::size_t>(),
                        m.at("input_height").get<std::size_t>(), std::move(stages),
                        m.at("taps").get<std::vector<std::size_t>>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("backbone manifest " + manifest_path.string() + ": " + e.what());
    }
}

}  // namespace hyperseg
