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
#include <functional>
#include <string>
#include <vector>

#include "hyperseg/losses.hpp"
#include "hyperseg/model.hpp"

namespace hyperseg {

// A textured object over a static textured background, seen in two frames.
// frame_prev shows the object shifted by (-dx, -dy) relative to frame_curr.
struct SyntheticScene {
    Tensor frame_prev;  // 3 x W x H
    Tensor frame_curr;  // 3 x W x H
    Tensor gt_mask;     // W x H, object in frame_curr
    int dx = 0;
    int dy = 0;
    std::uint64_t seed = 0;
};

struct SceneOptions {
    std::size_t min_size = 32;
    std::size_t max_size = 64;
    int max_motion = 3;
    double min_area = 0.05;
    double max_area = 0.60;
};

SyntheticScene generate_scene(std::uint64_t seed, const SceneOptions& options = {});

struct SyntheticClip {
    std::vector<Tensor> frames;  // 3 x W x H each
    std::vector<Tensor> masks;   // W x H each
};

// `frames` renders of one scene with the object moving by (dx, dy) per frame.
SyntheticClip generate_clip(std::uint64_t seed, std::size_t frames, const SceneOptions& options = {});

// Writes <root>/clipNNN/frames/NNNNN.png and <root>/clipNNN/masks/NNNNN.png.
void write_synthetic_dataset(const std::filesystem::path& root, std::size_t clips, std::size_t frames_per_clip,
                             std::uint64_t seed);

enum class OptimizerKind { Sgd, Adam };
OptimizerKind parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct TrainConfig {
    std::size_t steps = 200;
    double learning_rate = 3e-4;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 1;
    double delta = 1.0;
    std::size_t num_heads = 3;
    std::uint64_t seed = 1;
    std::size_t eval_every = 50;
    std::size_t num_scenes = 8;
    std::uint64_t scene_seed = 1000;
    std::size_t hidden_depth = 12;
    std::size_t threads = 0;

    // Throws ArgumentError naming the first invalid field.
    void validate() const;
    std::string to_json() const;
    // Keys absent from the document keep their defaults; unknown keys are errors.
    static TrainConfig from_json(std::string_view text);
};

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
              double epsilon = 1e-8);
    void step(NetworkParams& params, const std::vector<LayerParams>& grads);

private:
    OptimizerKind kind_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<LayerParams> m_, v_;
};

struct LossPoint {
    std::size_t step = 0;
    double loss = 0.0;  // mean total loss over the fixed evaluation clicks
    double miou = 0.0;  // head-1 mIOU over the same samples
};

struct TrainResult {
    Model model;
    std::vector<LossPoint> curve;
    std::vector<double> step_losses;
    // How often each head won the min term, over all training steps.
    std::vector<std::size_t> min_head_counts;
};

// Training scenes are generate_scene(scene_seed + i), i < num_scenes. Each step
// draws fresh simulated clicks (1..15 of each polarity) per sample. The
// evaluation set uses 5 + 5 fixed clicks per scene.
TrainResult train(const TrainConfig& config, const std::function<void(const LossPoint&)>& on_eval = {});

// Model plus train_config.json and loss_curve.json.
void save_training(const TrainResult& result, const TrainConfig& config, const std::filesystem::path& dir);

struct EvalItem {
    std::string id;  // "<clip>/<frame stem>"
    std::filesystem::path frame_path;
    Tensor frame;
    Tensor prev_frame;
    ClickState clicks;
};

// Returns a W x H binary mask for the item.
using Predictor = std::function<Tensor(const EvalItem&)>;

struct EvalOptions {
    std::size_t positive_clicks = 5;
    std::size_t negative_clicks = 5;
    std::uint64_t seed = 0;
};

// Scores every frame of <root>/<clip>/frames against <root>/<clip>/masks.
// Items whose mask is missing or unreadable are reported with an error and
// skipped in the averages. Throws NotFoundError for a missing root and
// ArgumentError for a dataset without frames.
MetricReport evaluate(const std::filesystem::path& root, const Predictor& predictor, const EvalOptions& options = {});

// Head `head` of the model's proposals.
Predictor model_predictor(const Model& model, std::size_t head = 1, std::size_t threads = 0);

}  // namespace hyperseg
