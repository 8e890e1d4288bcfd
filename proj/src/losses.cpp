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

#include "hyperseg/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include <json.hpp>

#include "hyperseg/errors.hpp"

namespace hyperseg {
namespace {

void require_plane(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw ArgumentError(std::string(what) + ": expected a W x H map, got " + shape_to_string(t.shape()));
    }
}

void require_congruent(const Tensor& a, const Tensor& b, const char* what) {
    require_plane(a, what);
    if (a.shape() != b.shape()) {
        throw ArgumentError(std::string(what) + ": extent mismatch " + shape_to_string(a.shape()) + " vs " +
                            shape_to_string(b.shape()));
    }
}

// Clockwise ring with y pointing down, starting east.
constexpr std::array<int, 8> kDx{1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy{0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kWest = 4;

int ring_index(int dx, int dy) {
    for (int i = 0; i < 8; ++i)
        if (kDx[i] == dx && kDy[i] == dy) return i;
    return -1;
}

// Labels of the largest 4-connected foreground component (1) vs the rest (0).
std::vector<char> largest_component(const Tensor& mask) {
    const std::size_t w = mask.extent(0), h = mask.extent(1);
    std::vector<int> label(w * h, -1);
    std::vector<std::size_t> area;
    std::deque<std::size_t> queue;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t seed = x * h + y;
            if (mask[seed] < 0.5 || label[seed] >= 0) continue;
            const int id = static_cast<int>(area.size());
            area.push_back(0);
            label[seed] = id;
            queue.push_back(seed);
            while (!queue.empty()) {
                const std::size_t i = queue.front();
                queue.pop_front();
                ++area[id];
                const std::size_t px = i / h, py = i % h;
                auto visit = [&](std::size_t j) {
                    if (mask[j] >= 0.5 && label[j] < 0) {
                        label[j] = id;
                        queue.push_back(j);
                    }
                };
                if (px > 0) visit(i - h);
                if (px + 1 < w) visit(i + h);
                if (py > 0) visit(i - 1);
                if (py + 1 < h) visit(i + 1);
            }
        }
    }
    std::vector<char> keep(w * h, 0);
    if (area.empty()) return keep;
    // Components are numbered in scan order, so max_element keeps the first on ties.
    const int best = static_cast<int>(std::max_element(area.begin(), area.end()) - area.begin());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = label[i] == best;
    return keep;
}

}  // namespace

double jaccard_loss(const Tensor& a, const Tensor& b) {
    require_congruent(a, b, "jaccard_loss");
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += std::min(a[i], b[i]);
        uni += std::max(a[i], b[i]);
    }
    return uni == 0.0 ? 0.0 : (uni - inter) / uni;
}

Tensor jaccard_loss_grad(const Tensor& f, const Tensor& y) {
    require_congruent(f, y, "jaccard_loss_grad");
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        inter += std::min(f[i], y[i]);
        uni += std::max(f[i], y[i]);
    }
    Tensor g(f.shape());
    if (uni == 0.0) return g;
    const double u2 = uni * uni;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double di = 0.5, du = 0.5;
        if (f[i] < y[i]) {
            di = 1.0;
            du = 0.0;
        } else if (f[i] > y[i]) {
            di = 0.0;
            du = 1.0;
        }
        g[i] = -(di / uni - inter * du / u2);
    }
    return g;
}

double interactive_context_loss(const Tensor& sp, const Tensor& sn, const Tensor& a) {
    require_congruent(a, sp, "interactive_context_loss");
    require_congruent(a, sn, "interactive_context_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        total += std::abs(sp[i] * (sp[i] - a[i]));
        total += std::abs(sn[i] * (sn[i] - (1.0 - a[i])));
    }
    return total;
}

Tensor interactive_context_grad(const Tensor& sp, const Tensor& sn) {
    require_congruent(sp, sn, "interactive_context_grad");
    Tensor g(sp.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = sn[i] - sp[i];
    return g;
}

Contour extract_boundary(const Tensor& mask) {
    require_plane(mask, "extract_boundary");
    const std::size_t w = mask.extent(0), h = mask.extent(1);
    const auto keep = largest_component(mask);
    auto inside = [&](long x, long y) {
        return x >= 0 && y >= 0 && x < static_cast<long>(w) && y < static_cast<long>(h) &&
               keep[static_cast<std::size_t>(x) * h + static_cast<std::size_t>(y)];
    };

    Contour c;
    long sx = -1, sy = -1;
    for (std::size_t y = 0; y < h && sx < 0; ++y)
        for (std::size_t x = 0; x < w; ++x)
            if (keep[x * h + y]) {
                sx = static_cast<long>(x);
                sy = static_cast<long>(y);
                break;
            }
    if (sx < 0) return c;

    struct State {
        long x, y;
        int back;
        bool operator==(const State&) const = default;
    };
    // Walk clockwise from the backtrack cell to the next foreground neighbour.
    auto step = [&](const State& s) -> std::optional<State> {
        for (int k = 1; k <= 8; ++k) {
            const int d = (s.back + k) % 8;
            const long nx = s.x + kDx[d], ny = s.y + kDy[d];
            if (!inside(nx, ny)) continue;
            const int prev = (s.back + k - 1) % 8;
            const long bx = s.x + kDx[prev], by = s.y + kDy[prev];
            return State{nx, ny, ring_index(static_cast<int>(bx - nx), static_cast<int>(by - ny))};
        }
        return std::nullopt;
    };

    c.points.push_back({static_cast<std::size_t>(sx), static_cast<std::size_t>(sy)});
    const auto first = step(State{sx, sy, kWest});
    if (!first) return c;
    State s = *first;
    c.points.push_back({static_cast<std::size_t>(s.x), static_cast<std::size_t>(s.y)});
    const std::size_t limit = 8 * w * h + 8;
    for (std::size_t guard = 0;; ++guard) {
        if (guard > limit) throw NumericError("extract_boundary: contour walk did not close");
        const State next = *step(s);
        if (next == *first) break;
        c.points.push_back({static_cast<std::size_t>(next.x), static_cast<std::size_t>(next.y)});
        s = next;
    }
    if (c.points.size() > 1 && c.points.back() == c.points.front()) c.points.pop_back();
    return c;
}

std::vector<Point> boundary_points(const Tensor& mask) {
    auto pts = extract_boundary(mask).points;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

Tensor boundary_raster(const Tensor& mask) {
    return rasterize_clicks(extract_boundary(mask).points, mask.extent(0), mask.extent(1));
}

double boundary_phl(const Tensor& y, const Tensor& f, double delta) {
    return boundary_phl_at(y, f, boundary_points(f), delta);
}

double boundary_phl_at(const Tensor& y, const Tensor& f, const std::vector<Point>& points, double delta) {
    require_congruent(f, y, "boundary_phl");
    if (!(delta > 0.0)) throw ArgumentError("boundary_phl: delta must be positive");
    const std::size_t h = f.extent(1);
    double total = 0.0;
    for (const auto& p : points) {
        const double r = (y[p.x * h + p.y] - f[p.x * h + p.y]) / delta;
        total += delta * delta * (std::sqrt(1.0 + r * r) - 1.0);
    }
    return total;
}

Tensor boundary_phl_grad(const Tensor& y, const Tensor& f, double delta) {
    require_congruent(f, y, "boundary_phl_grad");
    if (!(delta > 0.0)) throw ArgumentError("boundary_phl_grad: delta must be positive");
    const std::size_t h = f.extent(1);
    Tensor g(f.shape());
    for (const auto& p : boundary_points(f)) {
        const std::size_t i = p.x * h + p.y;
        const double r = y[i] - f[i];
        g[i] = -r / std::sqrt(1.0 + (r / delta) * (r / delta));
    }
    return g;
}

std::vector<double> diversity_weights(std::size_t m) {
    if (m == 0) throw ArgumentError("diversity_weights: M must be at least 1");
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = std::ldexp(0.01, static_cast<int>(m - 1 - i));
    return out;
}

double LossBreakdown::recompose() const {
    const std::size_t heads = jaccard_per_head.size();
    double best = 0.0, diversity = 0.0, boundary = 0.0;
    for (std::size_t m = 0; m < heads; ++m) {
        const double v = spec.jaccard_weight * jaccard_per_head[m] + spec.context_weight * interactive_context_per_head[m];
        if (m == 0 || v < best) best = v;
        diversity += diversity_weights[m] * jaccard_per_head[m];
        boundary += boundary_phl_per_head[m];
    }
    return best + spec.jaccard_weight * diversity + spec.boundary_weight * boundary;
}

namespace {

Tensor head_plane(const Tensor& heads, std::size_t m) {
    const auto s = heads.slab(m);
    return Tensor({heads.extent(1), heads.extent(2)}, std::vector<double>(s.begin(), s.end()));
}

LossBreakdown breakdown(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                        const LossSpec& spec, const std::vector<std::vector<Point>>* frozen) {
    if (heads.rank() != 3 || heads.extent(0) == 0) {
        throw ArgumentError("total_loss: expected M x W x H proposals, got " + shape_to_string(heads.shape()));
    }
    require_plane(y, "total_loss");
    if (y.extent(0) != heads.extent(1) || y.extent(1) != heads.extent(2)) {
        throw ArgumentError("total_loss: proposals " + shape_to_string(heads.shape()) + " vs ground truth " +
                            shape_to_string(y.shape()));
    }
    const std::size_t count = heads.extent(0);
    LossBreakdown b;
    b.spec = spec;
    b.diversity_weights = diversity_weights(count);
    double best = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
        const Tensor f = head_plane(heads, m);
        b.jaccard_per_head.push_back(jaccard_loss(f, y));
        b.interactive_context_per_head.push_back(interactive_context_loss(sp, sn, f));
        b.boundary_phl_per_head.push_back(frozen ? boundary_phl_at(y, f, frozen->at(m), spec.delta)
                                                 : boundary_phl(y, f, spec.delta));
        const double v = spec.jaccard_weight * b.jaccard_per_head[m] + spec.context_weight * b.interactive_context_per_head[m];
        if (m == 0 || v < best) {
            best = v;
            b.min_head_index = m + 1;
        }
    }
    b.total = b.recompose();
    return b;
}

}  // namespace

LossBreakdown total_loss(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                         const LossSpec& spec) {
    return breakdown(y, heads, sp, sn, spec, nullptr);
}

LossBreakdown total_loss_frozen_boundary(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                                         const std::vector<std::vector<Point>>& boundaries, const LossSpec& spec) {
    if (heads.rank() != 3 || boundaries.size() != heads.extent(0)) {
        throw ArgumentError("total_loss: one boundary set per head required");
    }
    return breakdown(y, heads, sp, sn, spec, &boundaries);
}

std::vector<std::vector<Point>> head_boundaries(const Tensor& heads) {
    if (heads.rank() != 3) throw ArgumentError("head_boundaries: expected M x W x H, got " + shape_to_string(heads.shape()));
    std::vector<std::vector<Point>> out;
    for (std::size_t m = 0; m < heads.extent(0); ++m) out.push_back(boundary_points(head_plane(heads, m)));
    return out;
}

LossBreakdown total_loss(const Tensor& y, const Tensor& heads, const ClickState& clicks, const LossSpec& spec) {
    return breakdown(y, heads, clicks.positive_mask(), clicks.negative_mask(), spec, nullptr);
}

LossAndGrad total_loss_with_grad(const Tensor& y, const Tensor& heads, const Tensor& sp, const Tensor& sn,
                                 const LossSpec& spec) {
    LossAndGrad out{breakdown(y, heads, sp, sn, spec, nullptr), Tensor(heads.shape())};
    const std::size_t plane = y.size();
    const Tensor ic_grad = interactive_context_grad(sp, sn);
    for (std::size_t m = 0; m < heads.extent(0); ++m) {
        const Tensor f = head_plane(heads, m);
        const bool chosen = m + 1 == out.loss.min_head_index;
        const double jw = spec.jaccard_weight * (out.loss.diversity_weights[m] + (chosen ? 1.0 : 0.0));
        const Tensor gj = jaccard_loss_grad(f, y);
        const Tensor gb = boundary_phl_grad(y, f, spec.delta);
        double* g = out.grad.data().data() + m * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            g[i] = jw * gj[i] + spec.boundary_weight * gb[i];
            if (chosen) g[i] += spec.context_weight * ic_grad[i];
        }
    }
    return out;
}

double iou(const Tensor& a, const Tensor& b) {
    require_congruent(a, b, "iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool pa = a[i] >= 0.5, pb = b[i] >= 0.5;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Tensor dilate3x3(const Tensor& raster) {
    require_plane(raster, "dilate3x3");
    const long w = static_cast<long>(raster.extent(0)), h = static_cast<long>(raster.extent(1));
    Tensor out(raster.shape());
    for (long x = 0; x < w; ++x)
        for (long y = 0; y < h; ++y) {
            if (raster(x, y) < 0.5) continue;
            for (long dx = -1; dx <= 1; ++dx)
                for (long dy = -1; dy <= 1; ++dy) {
                    const long nx = x + dx, ny = y + dy;
                    if (nx >= 0 && ny >= 0 && nx < w && ny < h) out(nx, ny) = 1.0;
                }
        }
    return out;
}

double boundary_iou(const Tensor& a, const Tensor& b) {
    require_congruent(a, b, "boundary_iou");
    return iou(dilate3x3(boundary_raster(a)), dilate3x3(boundary_raster(b)));
}

namespace {

void require_pairs(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt, const char* what) {
    if (pred.size() != gt.size()) {
        throw ArgumentError(std::string(what) + ": " + std::to_string(pred.size()) + " predictions vs " +
                            std::to_string(gt.size()) + " ground-truth masks");
    }
    if (pred.empty()) throw ArgumentError(std::string(what) + ": no mask pairs");
}

}  // namespace

double miou(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt) {
    require_pairs(pred, gt, "miou");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += iou(pred[i], gt[i]);
    return sum / static_cast<double>(pred.size());
}

double mbiou(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt) {
    require_pairs(pred, gt, "mbiou");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += boundary_iou(pred[i], gt[i]);
    return sum / static_cast<double>(pred.size());
}

MetricReport MetricReport::from_scores(std::vector<ImageScore> scores) {
    MetricReport r;
    double si = 0.0, sb = 0.0;
    for (const auto& s : scores) {
        if (s.error) continue;
        ++r.n_images;
        si += s.iou;
        sb += s.biou;
    }
    if (r.n_images > 0) {
        r.miou = si / static_cast<double>(r.n_images);
        r.mbiou = sb / static_cast<double>(r.n_images);
    }
    r.per_image = std::move(scores);
    return r;
}

std::string MetricReport::to_json(int indent) const {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& s : per_image) {
        if (s.error) {
            items.push_back({{"id", s.id}, {"error", *s.error}});
        } else {
            items.push_back({{"id", s.id}, {"iou", s.iou}, {"biou", s.biou}});
        }
    }
    const nlohmann::json doc{{"n_images", n_images}, {"miou", miou}, {"mbiou", mbiou}, {"per_image", items}};
    return doc.dump(indent);
}

MetricReport score_masks(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt) {
    require_pairs(pred, gt, "score_masks");
    std::vector<ImageScore> scores;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        scores.push_back({std::to_string(i), iou(pred[i], gt[i]), boundary_iou(pred[i], gt[i]), std::nullopt});
    }
    return MetricReport::from_scores(std::move(scores));
}

}  // namespace hyperseg
