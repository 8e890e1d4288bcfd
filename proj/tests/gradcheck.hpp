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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hyperseg/segnet.hpp"

namespace hyperseg::testing {

struct ProbeResult {
    std::size_t layer = 0;
    bool bias = false;
    std::size_t index = 0;
    double numeric = 0.0;
    double analytic = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<ProbeResult> probes;
    std::size_t skipped = 0;  // draws whose stencil crossed a non-differentiable point
    double max_rel_error() const {
        double m = 0.0;
        for (const auto& p : probes) m = std::max(m, p.rel_error);
        return m;
    }
};

// Relative error with a floor on the denominator so that parameters with a
// vanishing gradient are judged on absolute error 1e-6 * tolerance.
inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// The discrete choices the loss depends on: ReLU gates of every hidden
// layer, the selected head and the binarised head maps.
struct Regime {
    std::vector<bool> gates;
    std::size_t min_head = 0;
    std::vector<bool> masks;
    bool operator==(const Regime&) const = default;
};

inline Regime regime_of(const TrainingSample& s, const NetworkParams& params, const LossSpec& spec) {
    const auto t = forward_trace(s.context, s.features, params);
    Regime r;
    for (std::size_t l = 1; l + 1 < t.outputs.size(); ++l)
        for (double v : t.outputs[l].data()) r.gates.push_back(v > 0.0);
    for (double v : t.proposals.binary_masks.data()) r.masks.push_back(v > 0.5);
    r.min_head = total_loss(s.target, t.proposals.soft_maps, s.context.pos_clicks, s.context.neg_clicks, spec)
                     .min_head_index;
    return r;
}

// Central differences of the total loss (contour points frozen at the
// unperturbed prediction) at `count` random parameters. A draw is replaced
// when the +-h stencil changes the regime, since the loss is not
// differentiable across it.
inline GradCheckReport finite_difference_check(const TrainingSample& s, const NetworkParams& params,
                                               const LossSpec& spec, std::size_t count, std::uint64_t seed,
                                               double h = 1e-5) {
    const auto analytic = gradients(s, params, spec);
    const auto frozen = head_boundaries(forward(s.context, s.features, params).soft_maps);
    const Regime base = regime_of(s, params, spec);
    std::mt19937_64 rng(seed);
    GradCheckReport report;
    const std::size_t layers = params.layers.size();
    while (report.probes.size() < count && report.skipped < 50 * count) {
        ProbeResult p;
        p.layer = rng() % layers;
        p.bias = rng() % 4 == 0;
        const auto& target = p.bias ? params.layers[p.layer].bias : params.layers[p.layer].weights;
        p.index = rng() % target.size();
        auto plus = params, minus = params;
        (p.bias ? plus.layers[p.layer].bias : plus.layers[p.layer].weights)[p.index] += h;
        (p.bias ? minus.layers[p.layer].bias : minus.layers[p.layer].weights)[p.index] -= h;
        if (!(regime_of(s, plus, spec) == base) || !(regime_of(s, minus, spec) == base)) {
            ++report.skipped;
            continue;
        }
        p.numeric = (sample_loss(s, plus, spec, &frozen) - sample_loss(s, minus, spec, &frozen)) / (2 * h);
        p.analytic = (p.bias ? analytic.grads[p.layer].bias : analytic.grads[p.layer].weights)[p.index];
        p.rel_error = relative_error(p.numeric, p.analytic);
        report.probes.push_back(p);
    }
    return report;
}

}  // namespace hyperseg::testing
