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

#include "hyperseg/tucker.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "hyperseg/errors.hpp"
#include "hyperseg/svd.hpp"
#include "hyperseg/tensor_io.hpp"

namespace hyperseg {

CompressionPlan::CompressionPlan(std::vector<LayerRank> ranks) : ranks_(std::move(ranks)) {
    for (const auto& r : ranks_) {
        if (r.rank == 0) {
            throw ArgumentError("compression plan: layer '" + r.layer + "' has rank 0");
        }
        total_ += r.rank;
    }
}

namespace {

std::vector<LayerRank> plan_from(std::span<const std::size_t> depths, std::span<const std::string> names,
                                 bool halve) {
    if (!names.empty() && names.size() != depths.size()) {
        throw ArgumentError("compression plan: names/depths length mismatch");
    }
    std::vector<LayerRank> out;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        const std::string name = names.empty() ? "tap" + std::to_string(i) : names[i];
        out.push_back({name, halve ? (depths[i] + 1) / 2 : depths[i]});
    }
    return out;
}

// Shared by the per-image and the fitted path so both give identical bases.
DepthFactor factor_from_unfolding(const Tensor& unfolding, std::size_t rank, std::string layer,
                                  std::vector<double>* all_values) {
    const std::size_t depth = unfolding.extent(0);
    if (rank == 0 || rank > depth) {
        throw ArgumentError("depth_tucker: rank " + std::to_string(rank) + " outside [1, " + std::to_string(depth) +
                            "] for layer '" + layer + "'");
    }
    const std::size_t k = std::min(depth, unfolding.extent(1));
    SvdResult svd = truncated_svd(unfolding, k);

    double total = 0.0;
    double kept = 0.0;
    for (std::size_t i = 0; i < svd.singular_values.size(); ++i) {
        const double s2 = svd.singular_values[i] * svd.singular_values[i];
        total += s2;
        if (i < rank) kept += s2;
    }

    DepthFactor f;
    f.rank = rank;
    f.source_layer = std::move(layer);
    f.energy_retained = total > 0.0 ? kept / total : 1.0;
    f.factor = Tensor({depth, rank});
    const std::size_t have = std::min(rank, k);
    for (std::size_t d = 0; d < depth; ++d) {
        for (std::size_t r = 0; r < have; ++r) f.factor(d, r) = svd.left_vectors(d, r);
    }
    // Fewer pixels than requested rank: extend with an orthonormal complement.
    for (std::size_t r = have; r < rank; ++r) {
        for (std::size_t e = 0; e < depth; ++e) {
            std::vector<double> v(depth, 0.0);
            v[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t q = 0; q < r; ++q) {
                    double proj = 0.0;
                    for (std::size_t d = 0; d < depth; ++d) proj += v[d] * f.factor(d, q);
                    for (std::size_t d = 0; d < depth; ++d) v[d] -= proj * f.factor(d, q);
                }
            }
            double n = 0.0;
            for (double x : v) n += x * x;
            n = std::sqrt(n);
            if (n > 0.5) {
                for (std::size_t d = 0; d < depth; ++d) f.factor(d, r) = v[d] / n;
                break;
            }
        }
    }
    if (all_values) {
        *all_values = svd.singular_values;
        all_values->resize(depth, 0.0);
    }
    return f;
}

// A full-rank layer keeps its own channels: any orthonormal basis is lossless
// and the identity leaves the features untouched.
DepthFactor identity_factor(std::size_t depth, const std::string& layer) {
    DepthFactor f;
    f.factor = Tensor::eye(depth);
    f.rank = depth;
    f.source_layer = layer;
    f.energy_retained = 1.0;
    return f;
}

void require_depth_tensor(const Tensor& c, const char* what) {
    if (c.rank() != 3) {
        throw ArgumentError(std::string(what) + ": expected depth x w x h tensor, got " + shape_to_string(c.shape()));
    }
}

}  // namespace

CompressionPlan CompressionPlan::halving(std::span<const std::size_t> depths, std::span<const std::string> names) {
    return CompressionPlan(plan_from(depths, names, true));
}

CompressionPlan CompressionPlan::identity(std::span<const std::size_t> depths, std::span<const std::string> names) {
    return CompressionPlan(plan_from(depths, names, false));
}

std::string CompressionPlan::id() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < ranks_.size(); ++i) {
        os << (i ? "," : "") << ranks_[i].layer << ':' << ranks_[i].rank;
    }
    return os.str();
}

TuckerResult depth_tucker(const Tensor& c, std::size_t rank, std::string layer) {
    require_depth_tensor(c, "depth_tucker");
    TuckerResult out;
    out.factor = factor_from_unfolding(unfold(c, 0), rank, std::move(layer), &out.singular_values);
    out.core = apply_factor(c, out.factor);
    return out;
}

Tensor apply_factor(const Tensor& c, const DepthFactor& f) {
    require_depth_tensor(c, "apply_factor");
    if (c.extent(0) != f.original_depth()) {
        throw ArgumentError("apply_factor: tensor depth " + std::to_string(c.extent(0)) + " != factor depth " +
                            std::to_string(f.original_depth()) + " (layer '" + f.source_layer + "')");
    }
    const std::size_t w = c.extent(1), h = c.extent(2);
    Tensor flat = c.reshaped({c.extent(0), w * h});
    return matmul_tn(f.factor, flat).reshaped({f.rank, w, h});
}

Tensor reconstruct_from_core(const Tensor& core, const DepthFactor& f) {
    require_depth_tensor(core, "reconstruct_from_core");
    if (core.extent(0) != f.rank) {
        throw ArgumentError("reconstruct_from_core: core depth != factor rank");
    }
    const std::size_t w = core.extent(1), h = core.extent(2);
    return matmul(f.factor, core.reshaped({f.rank, w * h})).reshaped({f.original_depth(), w, h});
}

namespace {

void check_plan_matches(std::span<const Tensor> layers, const CompressionPlan& plan) {
    if (layers.size() != plan.layer_count()) {
        throw ArgumentError("compress_stack: plan covers " + std::to_string(plan.layer_count()) + " layers but " +
                            std::to_string(layers.size()) + " were given");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        require_depth_tensor(layers[i], "compress_stack");
        if (layers[i].extent(1) != layers[0].extent(1) || layers[i].extent(2) != layers[0].extent(2)) {
            throw ArgumentError("compress_stack: spatial extents of layer " + std::to_string(i) +
                                " differ from layer 0");
        }
        if (plan.per_layer_ranks()[i].rank > layers[i].extent(0)) {
            throw ArgumentError("compress_stack: rank " + std::to_string(plan.per_layer_ranks()[i].rank) +
                                " exceeds depth " + std::to_string(layers[i].extent(0)) + " of layer '" +
                                plan.per_layer_ranks()[i].layer + "'");
        }
    }
}

}  // namespace

std::pair<Tensor, std::vector<DepthFactor>> compress_stack(std::span<const Tensor> layers,
                                                           const CompressionPlan& plan) {
    check_plan_matches(layers, plan);
    std::vector<DepthFactor> factors;
    std::vector<Tensor> cores;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& lr = plan.per_layer_ranks()[i];
        if (lr.rank == layers[i].extent(0)) {
            cores.push_back(layers[i]);
            factors.push_back(identity_factor(lr.rank, lr.layer));
            continue;
        }
        auto r = depth_tucker(layers[i], lr.rank, lr.layer);
        cores.push_back(std::move(r.core));
        factors.push_back(std::move(r.factor));
    }
    return {concat0(cores), std::move(factors)};
}

Tensor compress_with_factors(std::span<const Tensor> layers, std::span<const DepthFactor> factors) {
    if (layers.size() != factors.size()) {
        throw ArgumentError("compress_with_factors: " + std::to_string(layers.size()) + " layers but " +
                            std::to_string(factors.size()) + " factors");
    }
    std::vector<Tensor> cores;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].extent(1) != layers[0].extent(1) || layers[i].extent(2) != layers[0].extent(2)) {
            throw ArgumentError("compress_with_factors: spatial extents differ between layers");
        }
        cores.push_back(apply_factor(layers[i], factors[i]));
    }
    return concat0(cores);
}

std::vector<DepthFactor> fit_factors(std::span<const std::vector<Tensor>> samples, const CompressionPlan& plan) {
    if (samples.empty()) {
        throw ArgumentError("fit_factors: no samples");
    }
    for (const auto& s : samples) check_plan_matches(s, plan);
    std::vector<DepthFactor> out;
    for (std::size_t layer = 0; layer < plan.layer_count(); ++layer) {
        const std::size_t depth = samples[0][layer].extent(0);
        if (plan.per_layer_ranks()[layer].rank == depth) {
            out.push_back(identity_factor(depth, plan.per_layer_ranks()[layer].layer));
            continue;
        }
        std::size_t cols = 0;
        for (const auto& s : samples) {
            if (s[layer].extent(0) != depth) {
                throw ArgumentError("fit_factors: layer depth differs between samples");
            }
            cols += s[layer].size() / depth;
        }
        Tensor m({depth, cols});
        std::size_t offset = 0;
        for (const auto& s : samples) {
            const std::size_t n = s[layer].size() / depth;
            for (std::size_t d = 0; d < depth; ++d) {
                const auto src = s[layer].data().subspan(d * n, n);
                std::copy(src.begin(), src.end(), m.data().begin() + d * cols + offset);
            }
            offset += n;
        }
        out.push_back(
            factor_from_unfolding(m, plan.per_layer_ranks()[layer].rank, plan.per_layer_ranks()[layer].layer, nullptr));
    }
    return out;
}

void save_depth_factor(const DepthFactor& f, const std::filesystem::path& stem) {
    auto tensor_path = stem;
    tensor_path += ".hseg";
    auto meta_path = stem;
    meta_path += ".json";
    save_tensor(f.factor, tensor_path);
    nlohmann::json meta = {{"layer", f.source_layer}, {"rank", f.rank}, {"energy_retained", f.energy_retained}};
    write_file(meta_path, meta.dump(2));
}

DepthFactor load_depth_factor(const std::filesystem::path& stem) {
    auto tensor_path = stem;
    tensor_path += ".hseg";
    auto meta_path = stem;
    meta_path += ".json";
    DepthFactor f;
    f.factor = load_tensor(tensor_path);
    try {
        const auto meta = nlohmann::json::parse(read_file(meta_path));
        f.source_layer = meta.at("layer").get<std::string>();
        f.rank = meta.at("rank").get<std::size_t>();
        f.energy_retained = meta.at("energy_retained").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("depth factor metadata " + meta_path.string() + ": " + e.what());
    }
    if (f.factor.rank() != 2 || f.factor.extent(1) != f.rank) {
        throw FormatError("depth factor " + tensor_path.string() + " does not match its rank metadata");
    }
    return f;
}

}  // namespace hyperseg
