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

#include "hyperseg/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hyperseg/errors.hpp"

namespace hyperseg {
namespace {

using Column = std::vector<double>;

double dot(const Column& a, const Column& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void rotate(Column& a, Column& b, double c, double s) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        const double bi = b[i];
        a[i] = c * ai - s * bi;
        b[i] = s * ai + c * bi;
    }
}

// Replace `v` by a unit vector orthogonal to every column in `basis`.
Column orthonormal_complement(const std::vector<Column>& basis, std::size_t length) {
    Column best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < length; ++e) {
        Column v(length, 0.0);
        v[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                const double proj = dot(v, b);
                for (std::size_t i = 0; i < length; ++i) v[i] -= proj * b[i];
            }
        }
        const double n = std::sqrt(dot(v, v));
        if (n > best_norm) {
            best_norm = n;
            best = std::move(v);
        }
        if (best_norm > 0.5) break;
    }
    for (auto& x : best) x /= best_norm;
    return best;
}

}  // namespace

SvdResult truncated_svd(const Tensor& m, std::size_t k, const SvdOptions& options) {
    if (m.rank() != 2) {
        throw ArgumentError("truncated_svd: rank-2 tensor required, got " + shape_to_string(m.shape()));
    }
    const std::size_t rows = m.extent(0);
    const std::size_t cols = m.extent(1);
    const std::size_t p = std::min(rows, cols);
    if (k == 0 || k > p) {
        throw ArgumentError("truncated_svd: k=" + std::to_string(k) + " outside [1, " + std::to_string(p) + "]");
    }
    m.require_finite("truncated_svd input");

    // Orthogonalise the p columns of A (rows >= cols) or of A^T (rows < cols).
    const bool transposed = rows < cols;
    const std::size_t length = std::max(rows, cols);
    std::vector<Column> work(p, Column(length));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (transposed) {
                work[i][j] = m(i, j);
            } else {
                work[j][i] = m(i, j);
            }
        }
    }
    std::vector<Column> rot(p, Column(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) rot[i][i] = 1.0;

    // Cosines below length * eps are rounding noise (a rotation that small no
    // longer changes the columns),
    // and columns below length * eps * |A|_F are numerically zero (rotations
    // against large columns perturb them by about eps * |A|_F); neither is
    // rotated.
    const double eps = std::numeric_limits<double>::epsilon();
    const double tolerance = std::max(options.tolerance, static_cast<double>(length) * eps);
    double frobenius_sq = 0.0;
    for (const auto& c : work) frobenius_sq += dot(c, c);
    const double negligible = static_cast<double>(length * length) * eps * eps * frobenius_sq;

    bool converged = false;
    std::size_t sweep = 0;
    double worst = 0.0;
    for (; sweep < options.max_sweeps && !converged; ++sweep) {
        converged = true;
        worst = 0.0;
        for (std::size_t i = 0; i + 1 < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                const double alpha = dot(work[i], work[i]);
                const double beta = dot(work[j], work[j]);
                const double gamma = dot(work[i], work[j]);
                if (gamma == 0.0 || alpha <= negligible || beta <= negligible) continue;
                const double scale = std::sqrt(alpha * beta);
                const double off = std::abs(gamma) / scale;
                if (!(off > tolerance)) continue;
                worst = std::max(worst, off);
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate(work[i], work[j], c, s);
                rotate(rot[i], rot[j], c, s);
            }
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "truncated_svd: no convergence after " << options.max_sweeps << " sweeps on "
           << shape_to_string(m.shape()) << " (largest remaining cosine " << worst << ")";
        throw NumericError(os.str());
    }

    std::vector<double> sigma(p);
    for (std::size_t j = 0; j < p; ++j) sigma[j] = std::sqrt(dot(work[j], work[j]));
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    // Normalised work columns give the singular vectors on the long side;
    // accumulated rotations give them on the short side.
    std::vector<Column> long_side;
    std::vector<Column> short_side;
    std::vector<double> values;
    const double zero = std::max(1e-150, std::sqrt(negligible));
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t j = order[r];
        values.push_back(sigma[j]);
        short_side.push_back(rot[j]);
        if (sigma[j] > zero) {
            Column u = work[j];
            for (auto& x : u) x /= sigma[j];
            long_side.push_back(std::move(u));
        } else {
            values.back() = 0.0;
            long_side.push_back(orthonormal_complement(long_side, length));
        }
    }

    SvdResult out;
    out.singular_values = std::move(values);
    Tensor u({rows, k});
    Tensor v({cols, k});
    const auto& left = transposed ? short_side : long_side;
    const auto& right = transposed ? long_side : short_side;
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t i = 0; i < rows; ++i) u(i, r) = left[r][i];
        for (std::size_t i = 0; i < cols; ++i) v(i, r) = right[r][i];
    }
    out.left_vectors = std::move(u);
    out.right_vectors = std::move(v);
    return out;
}

Tensor reconstruct(const SvdResult& svd) {
    const std::size_t rows = svd.left_vectors.extent(0);
    const std::size_t cols = svd.right_vectors.extent(0);
    const std::size_t k = svd.singular_values.size();
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < k; ++r) {
        const double s = svd.singular_values[r];
        for (std::size_t i = 0; i < rows; ++i) {
            const double us = svd.left_vectors(i, r) * s;
            if (us == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) out(i, j) += us * svd.right_vectors(j, r);
        }
    }
    return out;
}

}  // namespace hyperseg
