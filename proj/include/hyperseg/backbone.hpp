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
#include <string>
#include <vector>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

enum class Activation { Relu, Identity };

struct BackboneStage {
    std::string name;
    Tensor weights;  // out x in x k x k
    Tensor bias;     // out
    Activation activation = Activation::Relu;
    // Average-pool factor applied to the stage input before its convolution.
    std::size_t downsample = 1;
};

struct ToyVggConfig {
    std::size_t input_width = 32;
    std::size_t input_height = 32;
    std::size_t in_channels = 3;
    // One 3x3 conv stage per entry; every stage after the first halves the
    // resolution first. Each stage is a tap.
    std::vector<std::size_t> tap_depths{8, 16, 8};
    std::uint64_t seed = 1234;
};

// Frozen feature extractor with fixed tile input size. Tap outputs are the
// per-layer tensors that make up the hypercolumn.
class Backbone {
public:
    Backbone(std::string id, std::size_t input_width, std::size_t input_height, std::vector<BackboneStage> stages,
             std::vector<std::size_t> tap_points);

    // Seeded He-uniform 3x3 convolutions with ReLU and 2x average pooling.
    static Backbone toy_vgg(const ToyVggConfig& config);
    // One 1x1 identity stage, no activation or pooling.
    static Backbone identity(std::size_t channels, std::size_t input_width, std::size_t input_height);

    // Manifest JSON + one tensor container per stage weight/bias.
    static Backbone load(const std::filesystem::path& manifest);
    void save(const std::filesystem::path& dir) const;

    const std::string& id() const { return id_; }
    std::size_t input_width() const { return input_width_; }
    std::size_t input_height() const { return input_height_; }
    std::size_t input_channels() const { return stages_.front().weights.extent(1); }
    const std::vector<BackboneStage>& stages() const { return stages_; }
    const std::vector<std::size_t>& tap_points() const { return taps_; }
    std::vector<std::size_t> tap_depths() const;
    std::vector<std::string> tap_names() const;
    std::size_t hypercolumn_depth() const;

    // Tap outputs, each nearest-upsampled to the tile size, in tap order.
    std::vector<Tensor> tap_features(const Tensor& tile) const;

private:
    std::string id_;
    std::size_t input_width_;
    std::size_t input_height_;
    std::vector<BackboneStage> stages_;
    std::vector<std::size_t> taps_;
};

// Concatenation of tap_features along depth.
Tensor backbone_hypercolumn(const Tensor& tile, const Backbone& b);

}  // namespace hyperseg
