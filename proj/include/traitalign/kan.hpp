// Copyright 2026 The traitalign Authors
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

#pragma once

#include <vector>

#include "traitalign/rng.hpp"
#include "traitalign/spline.hpp"
#include "traitalign/tensor.hpp"

namespace traitalign {

/// One KAN layer: out = W_base * selu(x) + spline mix, where every
/// (output, input) edge carries its own vector of spline coefficients and
/// W_spline scales the edges. Input coordinates are clamped into the grid
/// domain before basis evaluation.
struct KanLayer {
    SplineGrid grid;
    TensorPtr w_base;    // (D, O)
    TensorPtr w_spline;  // (D, O)
    TensorPtr coeffs;    // (D, O, M)

    static KanLayer init(std::size_t in_width, std::size_t out_width, const SplineGrid& grid,
                         Rng& rng);

    std::size_t in_width() const { return w_base->shape[1]; }
    std::size_t out_width() const { return w_base->shape[0]; }
    std::vector<TensorPtr> params() const { return {w_base, w_spline, coeffs}; }
};

/// x: vector of length O -> vector of length D. Differentiable w.r.t. x and
/// all layer parameters.
TensorPtr kan_forward(const TensorPtr& x, const KanLayer& layer);

}  // namespace traitalign
