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
#include <optional>
#include <string>
#include <vector>

#include "hyperseg/interaction.hpp"
#include "hyperseg/tensor.hpp"

namespace hyperseg {

// All maps below are W x H tensors; proposal stacks are M x W x H.

// 1 - sum(min(a, b)) / sum(max(a, b)). Two all-zero maps give 0.
double jaccard_loss(const Tensor& a, const Tensor& b);
// d jaccard_loss(f, y) / d f. Where f == y the subgradient splits evenly
// between the min and the max.
Tensor jaccard_loss_grad(const Tensor& f, const Tensor& y);

// |S_p * (S_p - a)|_1 + |S_n * (S_n - (1 - a))|_1 over binary click rasters.
double interactive_context_loss(const Tensor& sp, const Tensor& sn, const Tensor& a);
// Gradient with respect to a, valid for a in [0, 1].
Tensor interactive_context_grad(const Tensor& sp, const Tensor& sn);

// Outer contour of the largest 4-connected foreground component, traced
// clockwise by Moore-neighbour walking from its top-left pixel. Consecutive
// points are 8-adjacent and the last point is adjacent to the first. Thin
// parts of the shape are visited once per side, so points may repeat.
struct Contour {
    std::vector<Point> points;
    bool empty() const { return points.empty(); }
};

// Pixels >= 0.5 are foreground.
Contour extract_boundary(const Tensor& mask);
// The distinct points of the contour, sorted.
std::vector<Point> boundary_points(const Tensor& mask);
// W x H raster of the contour points.
Tensor boundary_raster(const Tensor& mask);

// Pseudo-Huber penalty delta^2 (sqrt(1 + (r / delta)^2) - 1) summed over the
// contour points of f thresholded at 1/2, with r = y(p) - f(p).
double boundary_phl(const Tensor& y, const Tensor& f, double delta);
// Gradient with respect to f. The contour is held fixed.
Tensor boundary_phl_grad(const Tensor& y, const Tensor& f, double delta);
// The same penalty over a caller-supplied point set.
double boundary_phl_at(const Tensor& y, const Tensor& f, const std::vector<Point>& points, double delta);

// lambda_m = 0.01 * 2^(M - m), m = 1..M.
std::vector<double> diversity_weights(std::size_t m);

struct LossSpec {
    double delta = 1.0;
    double jaccard_weight = 1.0;
    double context_weight = 1.0;
    double boundary_weight = 1.0;
};

struct LossBreakdown {
    std::vector<double> jaccard_per_head;
    std::vector<double> interactive_context_per_head;
    std::vector<double> boundary_phl_per_head;
    std::vector<double> diversity_weights;
    std::size_t min_head_index = 1;  // 1-based
    double total = 0.0;
    LossSpec spec;

    // Total rebuilt from the per-head parts.
    double recompose() const;
};

// min_m {l_m + IC_m} + sum_m lambda_m l_m + sum_m phl_m for one datum, with
// the weights of `spec` applied to each family of terms. Ties in the minimum
// go to the lowest head index.
LossBreakdown total_loss(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                         const LossSpec& spec = {});
LossBreakdown total_loss(const Tensor& y, const Tensor& heads, const ClickState& clicks, const LossSpec& spec = {});
// Same, with the boundary term evaluated on frozen per-head point sets.
LossBreakdown total_loss_frozen_boundary(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                                         const std::vector<std::vector<Point>>& boundaries, const LossSpec& spec = {});
// Distinct contour points of every head of an M x W x H stack.
std::vector<std::vector<Point>> head_boundaries(const Tensor& heads);

struct LossAndGrad {
    LossBreakdown loss;
    Tensor grad;  // M x W x H, d total / d heads
};
LossAndGrad total_loss_with_grad(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                                 const LossSpec& spec = {});

// Binary IOU of a >= 0.5 and b >= 0.5; empty against empty is 1.
double iou(const Tensor& a, const Tensor& b);
// 3 x 3 square dilation of a binary raster.
Tensor dilate3x3(const Tensor& raster);
// IOU of the dilated contour rasters.
double boundary_iou(const Tensor& a, const Tensor& b);

double miou(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt);
double mbiou(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt);

struct ImageScore {
    std::string id;
    double iou = 0.0;
    double biou = 0.0;
    std::optional<std::string> error;  // set when the item could not be scored
};

struct MetricReport {
    std::size_t n_images = 0;  // scored items
    double miou = 0.0;
    double mbiou = 0.0;
    std::vector<ImageScore> per_image;

    // Averages over the entries without an error.
    static MetricReport from_scores(std::vector<ImageScore> scores);
    // {n_images, miou, mbiou, per_image: [{id, iou, biou} | {id, error}]}
    std::string to_json(int indent = 2) const;
};

MetricReport score_masks(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt);

}  // namespace hyperseg
