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
#include <vector>

#include "hyperseg/tensor.hpp"

namespace hyperseg {

struct SvdResult {
    Tensor left_vectors;                 // m x k, orthonormal columns
    std::vector<double> singular_values;  // k, nonincreasing, >= 0
    Tensor right_vectors;                // n x k, orthonormal columns
};

struct SvdOptions {
    std::size_t max_sweeps = 80;
    double tolerance = 1e-15;
};

// Top-k singular triplets of `m` via one-sided (Hestenes) Jacobi rotations.
// Singular values below max(rows, cols) * eps * |m|_F are reported as 0 and their columns are
// completed to an orthonormal set, so both factor matrices always have
// orthonormal columns.
// Throws ArgumentError if k is 0 or exceeds min(rows, cols), NumericError if
// the rotations do not converge within `max_sweeps`.
SvdResult truncated_svd(const Tensor& m, std::size_t k, const SvdOptions& options = {});

// U diag(S) V^T.
Tensor reconstruct(const SvdResult& svd);

}  // namespace hyperseg
