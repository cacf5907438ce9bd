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

#include <cstddef>
#include <vector>

namespace traitalign {

/// Open uniform B-spline grid on [x_lo, x_hi]: first and last knot repeated
/// degree+1 times, interior knots evenly spaced. Inputs outside the domain
/// are clamped to the boundary before evaluation.
struct SplineGrid {
    int degree = 3;
    std::size_t num_basis = 8;  // M
    double x_lo = -1.0;
    double x_hi = 1.0;
    std::vector<double> knots;  // length num_basis + degree + 1

    static SplineGrid make_uniform(int degree = 3, std::size_t num_basis = 8,
                                   double x_lo = -1.0, double x_hi = 1.0);

    /// Throws ConfigError when the invariants don't hold.
    void validate() const;
};

/// Cox-de Boor evaluation of all M basis values at x (clamped to the domain).
std::vector<double> bspline_basis(const SplineGrid& grid, double x);

/// Basis values and their derivatives w.r.t. x. The derivative is zero when
/// x lies outside the domain (the clamp makes the extension constant).
void bspline_basis_deriv(const SplineGrid& grid, double x, std::vector<double>& basis,
                         std::vector<double>& dbasis);

/// Allocation-free repeated evaluation against one grid; the grid is
/// validated once at construction. Used on the training hot path.
class SplineEvaluator {
public:
    explicit SplineEvaluator(const SplineGrid& grid);

    /// basis must hold M doubles; dbasis may be null or hold M doubles.
    void eval(double x, double* basis, double* dbasis) const;

private:
    const SplineGrid& grid_;
    mutable std::vector<double> work_a_;
    mutable std::vector<double> work_b_;
};

}  // namespace traitalign
