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

#include "traitalign/tensor.hpp"

namespace traitalign {

/// Positive-set policy: all same-subject rows (the multi-positive loss) or
/// the aligned row only (CLIP-style baseline, kept for ablations).
enum class LossMode { kSubjectAware, kOneHot };

/// Batch of chunk-level embeddings; rows must be L2-normalized and
/// subject_ids run row-parallel across all three matrices.
struct BatchEmbeddings {
    TensorPtr eeg;       // (N, D)
    TensorPtr fmri;      // (N, D)
    TensorPtr behavior;  // (N, D)
    std::vector<int> subject_ids;
    double tau = 0.1;
};

/// Multi-positive InfoNCE over anchors in `anchors` against candidates in
/// `targets`: -mean_i log( sum_{j in pos(i)} exp(s_ij/tau) / sum_j exp(s_ij/tau) ).
/// Throws DataError for single-subject batches and ConfigError for tau <= 0.
TensorPtr contrastive_loss(const TensorPtr& anchors, const TensorPtr& targets,
                           const std::vector<int>& subject_ids, double tau,
                           LossMode mode = LossMode::kSubjectAware);

/// Symmetric EEG<->fMRI alignment: (L(E,M) + L(M,E)) / 2.
TensorPtr loss_neu(const TensorPtr& eeg, const TensorPtr& fmri,
                   const std::vector<int>& subject_ids, double tau,
                   LossMode mode = LossMode::kSubjectAware);

/// Behavior supervision: (L(E,H) + L(M,H)) / 2.
TensorPtr loss_beh(const TensorPtr& eeg, const TensorPtr& fmri, const TensorPtr& behavior,
                   const std::vector<int>& subject_ids, double tau,
                   LossMode mode = LossMode::kSubjectAware);

struct TotalLoss {
    TensorPtr total;
    TensorPtr neu;
    TensorPtr beh;
};

/// total = L_neu + lambda_beh * L_beh.
TotalLoss total_loss(const BatchEmbeddings& batch, double lambda_beh,
                     LossMode mode = LossMode::kSubjectAware);

}  // namespace traitalign
