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

#include "traitalign/kan.hpp"

#include <cmath>

#include "traitalign/errors.hpp"

namespace traitalign {

KanLayer KanLayer::init(std::size_t in_width, std::size_t out_width, const SplineGrid& grid,
                        Rng& rng) {
    grid.validate();
    KanLayer layer;
    layer.grid = grid;
    const std::size_t O = in_width, D = out_width, M = grid.num_basis;
    const double wb_std = 1.0 / std::sqrt(static_cast<double>(O));
    const double c_std = 0.1 / std::sqrt(static_cast<double>(M));

    std::vector<double> wb(D * O), ws(D * O), c(D * O * M);
    for (auto& v : wb) v = rng.normal(0.0, wb_std);
    for (auto& v : ws) v = rng.normal(0.0, wb_std);
    for (auto& v : c) v = rng.normal(0.0, c_std);
    layer.w_base = Tensor::from({D, O}, std::move(wb), true);
    layer.w_spline = Tensor::from({D, O}, std::move(ws), true);
    layer.coeffs = Tensor::from({D, O, M}, std::move(c), true);
    return layer;
}

TensorPtr kan_forward(const TensorPtr& x, const KanLayer& layer) {
    if (x->rank() != 1 || x->size() != layer.in_width()) {
        throw ConfigError("kan_forward: input width mismatch");
    }
    const std::size_t O = layer.in_width();
    const std::size_t D = layer.out_width();
    const std::size_t M = layer.grid.num_basis;
    const SplineGrid grid = layer.grid;

    // Fused node: one tape entry per layer call keeps graphs small. Basis
    // values and SELU activations are recomputed in the closure from the
    // parents' (immutable) data.
    auto out =
        detail::make_node({D}, {x, layer.w_base, layer.w_spline, layer.coeffs}, "kan_forward");

    SplineEvaluator ev(grid);
    std::vector<double> sel(O), sp(O * M);
    for (std::size_t o = 0; o < O; ++o) {
        const double v = x->data[o];
        sel[o] = v > 0.0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * std::expm1(v);
        ev.eval(v, &sp[o * M], nullptr);
    }
    const auto& wb = layer.w_base->data;
    const auto& ws = layer.w_spline->data;
    const auto& cf = layer.coeffs->data;
    for (std::size_t d = 0; d < D; ++d) {
        double acc = 0.0;
        for (std::size_t o = 0; o < O; ++o) {
            acc += wb[d * O + o] * sel[o];
            const double* crow = &cf[(d * O + o) * M];
            const double* brow = &sp[o * M];
            double edge = 0.0;
            for (std::size_t i = 0; i < M; ++i) edge += crow[i] * brow[i];
            acc += ws[d * O + o] * edge;
        }
        out->data[d] = acc;
    }

    if (out->requires_grad) {
        out->backprop = [O, D, M, grid](Tensor& self) {
            Tensor& x = *self.parents[0];
            Tensor& wb = *self.parents[1];
            Tensor& ws = *self.parents[2];
            Tensor& cf = *self.parents[3];

            std::vector<double> basis(O * M), dbasis(O * M), sel(O), dsel(O);
            SplineEvaluator ev(grid);
            for (std::size_t o = 0; o < O; ++o) {
                const double v = x.data[o];
                if (v > 0.0) {
                    sel[o] = kSeluLambda * v;
                    dsel[o] = kSeluLambda;
                } else {
                    sel[o] = kSeluLambda * kSeluAlpha * std::expm1(v);
                    dsel[o] = kSeluLambda * kSeluAlpha * std::exp(v);
                }
                ev.eval(v, &basis[o * M], &dbasis[o * M]);
            }

            const bool need_x = x.requires_grad;
            if (need_x) x.ensure_grad();
            if (wb.requires_grad) wb.ensure_grad();
            if (ws.requires_grad) ws.ensure_grad();
            if (cf.requires_grad) cf.ensure_grad();

            for (std::size_t d = 0; d < D; ++d) {
                const double g = self.grad[d];
                if (g == 0.0) continue;
                for (std::size_t o = 0; o < O; ++o) {
                    const std::size_t eo = d * O + o;
                    const double* bo = &basis[o * M];
                    const double* co = &cf.data[eo * M];
                    double edge = 0.0, dedge = 0.0;
                    for (std::size_t i = 0; i < M; ++i) {
                        edge += co[i] * bo[i];
                        dedge += co[i] * dbasis[o * M + i];
                    }
                    if (wb.requires_grad) wb.grad[eo] += g * sel[o];
                    if (ws.requires_grad) ws.grad[eo] += g * edge;
                    if (cf.requires_grad) {
                        double* cg = &cf.grad[eo * M];
                        const double gws = g * ws.data[eo];
                        for (std::size_t i = 0; i < M; ++i) cg[i] += gws * bo[i];
                    }
                    if (need_x) {
                        x.grad[o] += g * (wb.data[eo] * dsel[o] + ws.data[eo] * dedge);
                    }
                }
            }
        };
    }
    detail::check_finite(*out, "kan_forward");
    return out;
}

}  // namespace traitalign
