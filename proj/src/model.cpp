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

#include "hyperseg/model.hpp"

#include <json.hpp>

#include "hyperseg/errors.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {

Model Model::create(std::string id, const ToyVggConfig& backbone, NetConfig net, std::uint64_t seed) {
    Backbone b = Backbone::toy_vgg(backbone);
    CompressionPlan plan = CompressionPlan::halving(b.tap_depths(), b.tap_names());
    net.feature_depth = plan.total_compressed_depth();
    return Model{std::move(id), std::move(b), std::move(plan), NetworkParams::init(net, seed)};
}

void Model::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    backbone.save(dir / "backbone");
    network.save(dir / "network");
    nlohmann::json ranks = nlohmann::json::array();
    for (const auto& r : plan.per_layer_ranks()) ranks.push_back({{"layer", r.layer}, {"rank", r.rank}});
    const nlohmann::json manifest{{"format", "hyperseg-model"},
                                  {"version", 1},
                                  {"id", id},
                                  {"plan", ranks},
                                  {"backbone", "backbone/backbone.json"},
                                  {"network", "network"}};
    write_file(dir / "model.json", manifest.dump(2));
}

Model Model::load(const std::filesystem::path& dir) {
    const auto path = dir / "model.json";
    try {
        const auto m = nlohmann::json::parse(read_file(path));
        if (m.value("format", std::string()) != "hyperseg-model") {
            throw FormatError(path.string() + " is not a model manifest");
        }
        std::vector<LayerRank> ranks;
        for (const auto& r : m.at("plan")) ranks.push_back({r.at("layer").get<std::string>(), r.at("rank").get<std::size_t>()});
        Model model{m.value("id", dir.filename().string()), Backbone::load(dir / m.at("backbone").get<std::string>()),
                    CompressionPlan(std::move(ranks)), NetworkParams::load(dir / m.at("network").get<std::string>())};
        if (model.plan.total_compressed_depth() != model.network.config.feature_depth) {
            throw FormatError("model " + path.string() + ": plan depth " +
                              std::to_string(model.plan.total_compressed_depth()) + " != network feature depth " +
                              std::to_string(model.network.config.feature_depth));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("model manifest " + path.string() + ": " + e.what());
    }
}

FeatureStack Model::extract(const Tensor& frame, std::size_t threads) const {
    ExtractOptions opt;
    opt.threads = threads;
    return tessellate_extract(frame, backbone, plan, opt);
}

SegmentationProposals Model::predict(const Tensor& frame, const std::optional<Tensor>& prev_frame,
                                     const ClickState& clicks, const Tensor& features) const {
    return forward(ContextBundle::make(frame, prev_frame, clicks), features, network);
}

}  // namespace hyperseg
