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

// Shared test oracles. The finite-difference checker is the independent
// reference for every analytic gradient in the library; it only ever calls
// the forward path.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "traitalign/rng.hpp"
#include "traitalign/tensor.hpp"

namespace testutil {

struct FdReport {
    double max_rel_err = 0.0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Central finite differences over every element of `params` against the
/// analytic gradients of the scalar built by `build`. `build` must
/// reconstruct the loss from the parameters' current data.
inline FdReport fd_check(const std::function<traitalign::TensorPtr()>& build,
                         const std::vector<traitalign::TensorPtr>& params, double h = 1e-5) {
    using traitalign::backward;

    for (const auto& p : params) {
        p->requires_grad = true;
        p->ensure_grad();
        p->zero_grad();
    }
    auto loss = build();
    backward(loss);

    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) analytic.push_back(p->grad);

    FdReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = *params[pi];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double saved = p.data[i];
            p.data[i] = saved + h;
            const double up = build()->value();
            p.data[i] = saved - h;
            const double down = build()->value();
            p.data[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[pi][i];
            const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
            const double rel = std::abs(a - numeric) / scale;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

inline traitalign::TensorPtr random_tensor(std::vector<std::size_t> shape, traitalign::Rng& rng,
                                           double lo = -2.0, double hi = 2.0,
                                           bool requires_grad = true) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) {
        // Keep clear of activation kinks so finite differences stay valid.
        do {
            x = rng.uniform(lo, hi);
        } while (std::abs(x) < 5e-3);
    }
    return traitalign::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<double> random_unit_vector(std::size_t d, traitalign::Rng& rng) {
    std::vector<double> v(d);
    double n2 = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        n2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v) x *= inv;
    return v;
}

}  // namespace testutil
