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

#include "traitalign/spline.hpp"

#include <algorithm>
#include <cmath>

#include "traitalign/errors.hpp"

namespace traitalign {

SplineGrid SplineGrid::make_uniform(int degree, std::size_t num_basis, double x_lo,
                                    double x_hi) {
    SplineGrid g;
    g.degree = degree;
    g.num_basis = num_basis;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    if (degree < 0 || num_basis < static_cast<std::size_t>(degree) + 1 || !(x_lo < x_hi)) {
        throw ConfigError("spline: need num_basis >= degree+1 and x_lo < x_hi");
    }
    const std::size_t p = static_cast<std::size_t>(degree);
    const std::size_t n_knots = num_basis + p + 1;
    const std::size_t n_spans = num_basis - p;  // nonempty intervals
    g.knots.resize(n_knots);
    for (std::size_t i = 0; i < n_knots; ++i) {
        if (i <= p) {
            g.knots[i] = x_lo;
        } else if (i >= num_basis) {
            g.knots[i] = x_hi;
        } else {
            g.knots[i] = x_lo + (x_hi - x_lo) * static_cast<double>(i - p) /
                                    static_cast<double>(n_spans);
        }
    }
    return g;
}

void SplineGrid::validate() const {
    const std::size_t p = static_cast<std::size_t>(degree);
    if (degree < 0 || num_basis < p + 1) throw ConfigError("spline: num_basis < degree+1");
    if (knots.size() != num_basis + p + 1) throw ConfigError("spline: knot count mismatch");
    if (!(x_lo < x_hi)) throw ConfigError("spline: empty domain");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (knots[i] < knots[i - 1]) throw ConfigError("spline: knots not nondecreasing");
    }
    for (std::size_t i = 0; i <= p; ++i) {
        if (knots[i] != x_lo || knots[knots.size() - 1 - i] != x_hi) {
            throw ConfigError("spline: knot vector is not open uniform");
        }
    }
}

namespace {

// Bottom-up Cox-de Boor over all basis indices into caller storage.
// `work` needs num_basis + degree slots; the result (degree `up_to`) lands
// in work[0 .. n0-up_to). Degree 0 assigns the containing span's indicator;
// x == x_hi belongs to the last nonempty span so the sum stays one at the
// right edge.
void eval_into(const SplineGrid& g, double x, int up_to_degree, double* work) {
    const auto& k = g.knots;
    const std::size_t p = static_cast<std::size_t>(g.degree);
    const std::size_t n0 = g.num_basis + p;

    std::fill(work, work + n0, 0.0);
    std::size_t span = p;
    const std::size_t last_span = g.num_basis - 1;
    while (span < last_span && x >= k[span + 1]) ++span;
    work[span] = 1.0;

    for (int d = 1; d <= up_to_degree; ++d) {
        const std::size_t nd = n0 - static_cast<std::size_t>(d);
        for (std::size_t i = 0; i < nd; ++i) {
            double v = 0.0;
            const double den1 = k[i + d] - k[i];
            if (den1 > 0.0 && work[i] != 0.0) v += (x - k[i]) / den1 * work[i];
            const double den2 = k[i + d + 1] - k[i + 1];
            if (den2 > 0.0 && work[i + 1] != 0.0) {
                v += (k[i + d + 1] - x) / den2 * work[i + 1];
            }
            work[i] = v;
        }
        work[nd] = 0.0;
    }
}

}  // namespace

SplineEvaluator::SplineEvaluator(const SplineGrid& grid) : grid_(grid) {
    grid.validate();
    const std::size_t slots = grid.num_basis + static_cast<std::size_t>(grid.degree);
    work_a_.resize(slots);
    work_b_.resize(slots);
}

void SplineEvaluator::eval(double x, double* basis, double* dbasis) const {
    if (!std::isfinite(x)) throw NumericError("bspline: non-finite input");
    const bool clamped = x < grid_.x_lo || x > grid_.x_hi;
    const double xc = std::clamp(x, grid_.x_lo, grid_.x_hi);
    const std::size_t m = grid_.num_basis;

    eval_into(grid_, xc, grid_.degree, work_a_.data());
    std::copy(work_a_.data(), work_a_.data() + m, basis);
    if (dbasis == nullptr) return;

    std::fill(dbasis, dbasis + m, 0.0);
    if (clamped || grid_.degree == 0) return;

    eval_into(grid_, xc, grid_.degree - 1, work_b_.data());
    const auto& k = grid_.knots;
    const double p = static_cast<double>(grid_.degree);
    const std::size_t pd = static_cast<std::size_t>(grid_.degree);
    for (std::size_t i = 0; i < m; ++i) {
        double v = 0.0;
        const double den1 = k[i + pd] - k[i];
        if (den1 > 0.0) v += p / den1 * work_b_[i];
        const double den2 = k[i + pd + 1] - k[i + 1];
        if (den2 > 0.0) v -= p / den2 * work_b_[i + 1];
        dbasis[i] = v;
    }
}

std::vector<double> bspline_basis(const SplineGrid& grid, double x) {
    SplineEvaluator ev(grid);
    std::vector<double> basis(grid.num_basis);
    ev.eval(x, basis.data(), nullptr);
    return basis;
}

void bspline_basis_deriv(const SplineGrid& grid, double x, std::vector<double>& basis,
                         std::vector<double>& dbasis) {
    SplineEvaluator ev(grid);
    basis.resize(grid.num_basis);
    dbasis.resize(grid.num_basis);
    ev.eval(x, basis.data(), dbasis.data());
}

}  // namespace traitalign
