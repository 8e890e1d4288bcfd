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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperseg/interaction.hpp"
#include "hyperseg/losses.hpp"
#include "hyperseg/tensor.hpp"

namespace hyperseg {

// Context aggregation network. Layer 1 is a 1x1 affine projection of
// [features, context]; layers 2..L-1 are dilated 3x3 convolutions of
// [previous output, context] followed by ReLU; layer L maps to M heads
// through a sigmoid. Padding equals the dilation, so every layer keeps the
// input extents.
struct NetConfig {
    std::size_t context_depth = 10;
    std::size_t feature_depth = 16;
    std::size_t hidden_depth = 12;
    std::size_t num_layers = 6;
    std::size_t num_heads = 3;
    std::vector<std::size_t> dilations{1, 1, 2, 4, 8, 1};  // entry 0 belongs to the 1x1 layer
    std::size_t first_kernel = 1;
    std::size_t kernel = 3;

    static NetConfig desk();
    static NetConfig full_scale();

    // Throws ArgumentError on an inconsistent configuration.
    void validate() const;
    std::size_t kernel_size(std::size_t layer) const { return layer == 0 ? first_kernel : kernel; }
    std::vector<std::size_t> layer_input_depths() const;
    std::vector<std::size_t> layer_output_depths() const;
    // Side of the square window of input pixels that can influence one output pixel.
    std::size_t receptive_field() const;

    std::string to_json() const;
    static NetConfig from_json(std::string_view text);

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct LayerParams {
    Tensor weights;  // out x in x k x k
    Tensor bias;     // out
    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct NetworkParams {
    NetConfig config;
    std::vector<LayerParams> layers;

    // He-uniform kernels (bound sqrt(6 / fan_in)) and zero biases. Every head
    // of the output layer starts from the same filter.
    static NetworkParams init(const NetConfig& config, std::uint64_t seed);
    static NetworkParams zeros(const NetConfig& config);

    std::size_t parameter_count() const;
    // Throws ArgumentError if the layer shapes disagree with the config.
    void validate() const;

    // <dir>/network.json plus layer<i>_weights.hseg and layer<i>_bias.hseg.
    void save(const std::filesystem::path& dir) const;
    static NetworkParams load(const std::filesystem::path& dir);

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Per-pixel context channels in network order: X_t (3), X_{t-1} (3), B_p, B_n,
// D_p, D_n. Distance maps are divided by the image diagonal.
struct ContextBundle {
    Tensor frame;       // 3 x W x H
    Tensor prev_frame;  // 3 x W x H
    Tensor pos_clicks;  // W x H
    Tensor neg_clicks;  // W x H
    Tensor pos_distance;
    Tensor neg_distance;

    // A missing previous frame duplicates the current one.
    static ContextBundle make(const Tensor& frame, const std::optional<Tensor>& prev_frame, const ClickState& clicks);

    std::size_t width() const { return frame.extent(1); }
    std::size_t height() const { return frame.extent(2); }
    // 10 x W x H.
    Tensor stacked() const;
};

struct SegmentationProposals {
    Tensor soft_maps;     // M x W x H in [0, 1]
    Tensor binary_masks;  // soft_maps >= 1/2

    std::size_t num_heads() const { return soft_maps.extent(0); }
    // W x H maps of head m, 1-based.
    Tensor soft(std::size_t m) const;
    Tensor mask(std::size_t m) const;
};

struct ForwardOptions {
    // Drop every nonlinearity (ReLU and sigmoid); used to probe the receptive field.
    bool linear = false;
};

// Layer-by-layer record of a forward pass.
struct ForwardTrace {
    Tensor context;                    // 10 x W x H
    std::vector<Tensor> inputs;        // input of each layer
    std::vector<Tensor> outputs;       // activated output of each layer
    SegmentationProposals proposals;
};

ForwardTrace forward_trace(const ContextBundle& ctx, const Tensor& features, const NetworkParams& params,
                           const ForwardOptions& options = {});
SegmentationProposals forward(const ContextBundle& ctx, const Tensor& features, const NetworkParams& params,
                              const ForwardOptions& options = {});

struct TrainingSample {
    ContextBundle context;
    Tensor features;  // D_phi x W x H
    Tensor target;    // W x H ground truth
};

struct GradientResult {
    double loss = 0.0;                    // mean total loss over the batch
    std::vector<LossBreakdown> breakdowns;
    std::vector<LayerParams> grads;       // mean gradient over the batch
};

// Exact reverse-mode gradient of the mean total loss of a batch. The contour
// points of the boundary term are treated as constants. Throws NumericError
// naming the first non-finite layer if the loss is not finite.
GradientResult gradients(std::span<const TrainingSample> batch, const NetworkParams& params,
                         const LossSpec& spec = {});
GradientResult gradients(const TrainingSample& sample, const NetworkParams& params, const LossSpec& spec = {});

// Loss of one sample with the boundary point sets frozen; the scalar that the
// gradients above differentiate.
double sample_loss(const TrainingSample& sample, const NetworkParams& params, const LossSpec& spec,
                   const std::vector<std::vector<Point>>* frozen_boundaries = nullptr);

// Presentation order of the heads, 1-based. Without clicks this is 1..M;
// with clicks the heads are sorted by interactive-context loss, ties by index.
std::vector<std::size_t> rank_heads(const SegmentationProposals& p, const ClickState* rerank_by = nullptr);

}  // namespace hyperseg
