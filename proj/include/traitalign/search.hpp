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

#include <cstdint>
#include <string>
#include <vector>

#include "traitalign/rng.hpp"
#include "traitalign/synthdata.hpp"
#include "traitalign/train.hpp"

namespace traitalign {

/// Integer search dimension; log-scale dimensions are modeled in log space.
struct ParamBound {
    std::string name;
    std::int64_t lo = 1;
    std::int64_t hi = 1;
    bool log_scale = true;
};

struct Trial {
    enum class Status { kComplete, kFailed };
    std::size_t number = 0;
    std::vector<std::int64_t> candidate;
    double score = 0.0;
    Status status = Status::kComplete;
    std::uint64_t seed = 0;
};

struct TpeConfig {
    double gamma = 0.25;          // good-fraction quantile
    std::size_t n_startup = 8;    // random trials before the estimator kicks in
    std::size_t n_candidates = 24;  // draws from the good-density per suggestion
    std::size_t budget = 30;
    std::vector<ParamBound> bounds;

    void validate() const;
};

/// One suggestion. Below n_startup completed trials: uniform within bounds.
/// Otherwise trials split at the ceil(gamma*n) best (ties by earlier trial),
/// per-dimension truncated-Gaussian Parzen mixtures are built for the good
/// and bad sets, and the best of n_candidates draws from the good density by
/// density ratio wins. Failed trials never enter the mixtures.
std::vector<std::int64_t> tpe_suggest(const std::vector<Trial>& history, const TpeConfig& cfg,
                                      Rng& rng);

enum class TaskKind { kClassify, kRegress };

struct SearchConfig {
    TpeConfig tpe;
    TrainConfig train;           // chunk specs are overwritten per candidate
    TaskKind task = TaskKind::kClassify;
    std::size_t search_epochs = 5;  // reduced epochs; only the ordering matters
    bool tie_lengths = false;    // 1-D search, fMRI length derived by duration ratio
    bool search_overlap = false;  // adds overlap-percent dimensions
    std::size_t jobs = 1;
    std::string log_path;        // JSONL trial log; reread to resume
};

/// Candidate layout produced by default_bounds / consumed by the validators:
/// [L_eeg(, L_fmri)(, overlap_pct_eeg(, overlap_pct_fmri))].
std::vector<ParamBound> default_bounds(const CohortSpec& spec, const SearchConfig& cfg);

/// Chunk specs from a candidate vector (overlap defaults to L/2).
void apply_candidate(TrainConfig& cfg, const std::vector<std::int64_t>& candidate,
                     const SearchConfig& scfg, const CohortSpec& spec);

/// Mean validation score across LOSO folds: accuracy for classification,
/// negative MAE for regression. Throws DataError for infeasible candidates.
double loso_validate(const Cohort& cohort, const std::vector<std::int64_t>& candidate,
                     const SearchConfig& cfg);

struct SearchResult {
    Trial best;
    std::vector<Trial> history;
};

/// Eq.-style argmax over chunk lengths driven by the TPE loop. The trial log
/// is appended after every trial; rerunning with the same log resumes.
SearchResult optimize_chunk_length(const Cohort& cohort, const SearchConfig& cfg);

// Trial log helpers (JSONL).
void append_trial_log(const std::string& path, const Trial& trial);
std::vector<Trial> read_trial_log(const std::string& path);

}  // namespace traitalign
