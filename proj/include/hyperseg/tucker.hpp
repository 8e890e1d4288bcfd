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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

// Orthonormal depth basis of one backbone layer (original_depth x rank).
struct DepthFactor {
    Tensor factor;
    std::size_t rank = 0;
    std::string source_layer;
    double energy_retained = 1.0;

    std::size_t original_depth() const { return factor.extent(0); }
};

struct LayerRank {
    std::string layer;
    std::size_t rank = 0;
};

class CompressionPlan {
public:
    CompressionPlan() = default;
    explicit CompressionPlan(std::vector<LayerRank> ranks);

    // ceil(depth / 2) per layer.
    static CompressionPlan halving(std::span<const std::size_t> depths, std::span<const std::string> names = {});
    // rank == depth per layer.
    static CompressionPlan identity(std::span<const std::size_t> depths, std::span<const std::string> names = {});

    const std::vector<LayerRank>& per_layer_ranks() const { return ranks_; }
    std::size_t total_compressed_depth() const { return total_; }
    std::size_t layer_count() const { return ranks_.size(); }
    // Stable textual id used in FeatureStack provenance.
    std::string id() const;

private:
    std::vector<LayerRank> ranks_;
    std::size_t total_ = 0;
};

struct TuckerResult {
    Tensor core;  // rank x w x h
    DepthFactor factor;
    // Singular values of the depth unfolding, all of them, nonincreasing.
    std::vector<double> singular_values;
};

// Truncates only the depth axis of a depth x w x h tensor: the factor holds
// the top-`rank` left singular vectors of the mode-0 unfolding and the core is
// the projection onto them.
TuckerResult depth_tucker(const Tensor& c, std::size_t rank, std::string layer = {});

// factor^T applied to every pixel's depth vector.
Tensor apply_factor(const Tensor& c, const DepthFactor& f);
// factor * core, mapping back to original depth.
Tensor reconstruct_from_core(const Tensor& core, const DepthFactor& f);

// Computes factors from `layers` (per-image mode) and concatenates the
// projected layers along depth, in layer order. A layer whose planned rank
// equals its depth is passed through with an identity factor.
std::pair<Tensor, std::vector<DepthFactor>> compress_stack(std::span<const Tensor> layers,
                                                           const CompressionPlan& plan);

// Projects with previously fitted factors (frozen mode).
Tensor compress_with_factors(std::span<const Tensor> layers, std::span<const DepthFactor> factors);

// Fits factors over several samples of the same layers at once, by stacking
// the samples along the spatial axes of each layer's depth unfolding.
std::vector<DepthFactor> fit_factors(std::span<const std::vector<Tensor>> samples, const CompressionPlan& plan);

// `<stem>.hseg` holds the factor matrix; `<stem>.json` the metadata.
void save_depth_factor(const DepthFactor& f, const std::filesystem::path& stem);
DepthFactor load_depth_factor(const std::filesystem::path& stem);

}  // namespace hyperseg
