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

#include "traitalign/objective.hpp"

#include <cmath>
#include <set>

#include "traitalign/errors.hpp"

namespace traitalign {

namespace {

void check_batch(const TensorPtr& rows, const std::vector<int>& ids, const char* what) {
    if (rows->rank() != 2 || rows->rows() != ids.size()) {
        throw ConfigError(std::string(what) + ": rows must match subject_ids length");
    }
    const std::size_t d = rows->cols();
    for (std::size_t i = 0; i < rows->rows(); ++i) {
        double n2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = rows->at(i, j);
            n2 += v * v;
        }
        if (std::abs(n2 - 1.0) > 1e-6) {
            throw ConfigError(std::string(what) + ": embedding rows must be L2-normalized");
        }
    }
}

}  // namespace

TensorPtr contrastive_loss(const TensorPtr& anchors, const TensorPtr& targets,
                           const std::vector<int>& subject_ids, double tau, LossMode mode) {
    if (tau <= 0.0) throw ConfigError("contrastive_loss: tau must be positive");
    const std::size_t n = subject_ids.size();
    if (n < 2) throw DataError("contrastive_loss: batch too small");
    check_batch(anchors, subject_ids, "contrastive_loss");
    check_batch(targets, subject_ids, "contrastive_loss");
    if (std::set<int>(subject_ids.begin(), subject_ids.end()).size() < 2) {
        throw DataError("contrastive_loss: single-subject batch has no negatives");
    }

    // Rows are unit-norm, so the similarity matrix is a plain Gram matrix.
    auto sims = matmul_nt(anchors, targets);

    std::vector<char> positive(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            const bool pos = mode == LossMode::kSubjectAware ? subject_ids[i] == subject_ids[j]
                                                             : i == j;
            positive[i * n + j] = pos;
            any = any || pos;
        }
        if (!any) throw DataError("contrastive_loss: anchor without positives");
    }

    auto out = detail::make_node({1}, {sims}, "contrastive_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* srow = &sims->data[i * n];
        double mx = srow[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, srow[j]);
        double z_all = 0.0, z_pos = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp((srow[j] - mx) / tau);
            z_all += e;
            if (positive[i * n + j]) z_pos += e;
        }
        acc += std::log(z_all) - std::log(z_pos);
    }
    out->data[0] = acc / static_cast<double>(n);

    if (out->requires_grad) {
        out->backprop = [n, tau, positive = std::move(positive)](Tensor& self) {
            Tensor& s = *self.parents[0];
            s.ensure_grad();
            const double g = self.grad[0] / (static_cast<double>(n) * tau);
            for (std::size_t i = 0; i < n; ++i) {
                const double* srow = &s.data[i * n];
                double mx = srow[0];
                for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, srow[j]);
                double z_all = 0.0, z_pos = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double e = std::exp((srow[j] - mx) / tau);
                    z_all += e;
                    if (positive[i * n + j]) z_pos += e;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double e = std::exp((srow[j] - mx) / tau);
                    const double soft_all = e / z_all;
                    const double soft_pos = positive[i * n + j] ? e / z_pos : 0.0;
                    s.grad[i * n + j] += g * (soft_all - soft_pos);
                }
            }
        };
    }
    detail::check_finite(*out, "contrastive_loss");
    return out;
}

TensorPtr loss_neu(const TensorPtr& eeg, const TensorPtr& fmri,
                   const std::vector<int>& subject_ids, double tau, LossMode mode) {
    auto fwd = contrastive_loss(eeg, fmri, subject_ids, tau, mode);
    auto bwd = contrastive_loss(fmri, eeg, subject_ids, tau, mode);
    return scale(add(fwd, bwd), 0.5);
}

TensorPtr loss_beh(const TensorPtr& eeg, const TensorPtr& fmri, const TensorPtr& behavior,
                   const std::vector<int>& subject_ids, double tau, LossMode mode) {
    auto e_h = contrastive_loss(eeg, behavior, subject_ids, tau, mode);
    auto m_h = contrastive_loss(fmri, behavior, subject_ids, tau, mode);
    return scale(add(e_h, m_h), 0.5);
}

TotalLoss total_loss(const BatchEmbeddings& batch, double lambda_beh, LossMode mode) {
    TotalLoss out;
    out.neu = loss_neu(batch.eeg, batch.fmri, batch.subject_ids, batch.tau, mode);
    out.beh = loss_beh(batch.eeg, batch.fmri, batch.behavior, batch.subject_ids, batch.tau,
                       mode);
    out.total = add(out.neu, scale(out.beh, lambda_beh));
    return out;
}

}  // namespace traitalign
