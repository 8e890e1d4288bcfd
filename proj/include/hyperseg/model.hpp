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

#include <cstdint>
#include <filesystem>
#include <string>

#include "hyperseg/backbone.hpp"
#include "hyperseg/segnet.hpp"
#include "hyperseg/tessellation.hpp"
#include "hyperseg/tucker.hpp"

namespace hyperseg {

// Everything needed to go from frames and clicks to proposals: the frozen
// backbone, its compression plan and the segmentation network.
struct Model {
    std::string id;
    Backbone backbone;
    CompressionPlan plan;
    NetworkParams network;

    // Toy backbone with a halving plan and a freshly initialised network whose
    // feature depth matches the plan.
    static Model create(std::string id, const ToyVggConfig& backbone, NetConfig net, std::uint64_t seed);

    // <dir>/model.json, <dir>/backbone/, <dir>/network/.
    void save(const std::filesystem::path& dir) const;
    static Model load(const std::filesystem::path& dir);

    FeatureStack extract(const Tensor& frame, std::size_t threads = 0) const;
    // Forward pass for a frame pair and click state with precomputed features.
    SegmentationProposals predict(const Tensor& frame, const std::optional<Tensor>& prev_frame,
                                  const ClickState& clicks, const Tensor& features) const;
};

}  // namespace hyperseg
