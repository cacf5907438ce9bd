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

#include "traitalign/chunking.hpp"
#include "traitalign/encoders.hpp"
#include "traitalign/inference.hpp"
#include "traitalign/objective.hpp"
#include "traitalign/synthdata.hpp"

namespace traitalign {

/// One training run's hyperparameters. Defaults follow the experimental
/// protocol: 20 epochs, batch 128, Adam lr 0.001, weight decay 0, k = 5.
struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double tau = 0.1;
    double lambda_beh = 1.0;
    double tau_a = 0.1;  // aggregation temperature
    std::size_t k = 5;

    ChunkSpec eeg_chunks{256, 128};
    ChunkSpec fmri_chunks{40, 20};

    LossMode loss_mode = LossMode::kSubjectAware;
    AggregationMode aggregation = AggregationMode::kNoiseInformed;
    VoteRule vote_rule = VoteRule::kMajority;

    std::size_t min_subjects_per_batch = 8;
    std::size_t batches_per_epoch = 0;  // 0: one sweep over the EEG chunk pool

    EncoderConfig encoder;
    std::uint64_t seed = 1;
};

struct EpochLogEntry {
    std::size_t epoch = 0;
    double loss_neu = 0.0;
    double loss_beh = 0.0;
    double total = 0.0;
    double wall_ms = 0.0;
};

struct TrainedModel {
    EncoderSet encoders;
    std::vector<double> beh_mean;  // per-scale z-score over training subjects
    std::vector<double> beh_std;
    std::vector<EpochLogEntry> log;
};

/// Copies the cohort's data dimensions into cfg.encoder.
TrainConfig resolve_train_config(TrainConfig cfg, const CohortSpec& data_spec);

/// Joint contrastive training of the three encoders on the given subjects.
/// cfg.encoder dims must match the data (see resolve_train_config).
/// Deterministic under cfg.seed; the tape stays confined to this thread.
TrainedModel train_encoders(const std::vector<const SubjectRecord*>& train_subjects,
                            const TrainConfig& cfg);

struct SubjectChunkEmbeddings {
    std::vector<std::vector<double>> eeg;
    std::vector<std::vector<double>> fmri;
};

/// Chunk-level embeddings under a trained model (no tape).
SubjectChunkEmbeddings embed_subject(const SubjectRecord& subject, const TrainedModel& model,
                                     const TrainConfig& cfg);

/// Index of aggregated training-subject embeddings with dataset labels.
PredictorIndex build_index(const std::vector<const SubjectRecord*>& train_subjects,
                           const TrainedModel& model, const TrainConfig& cfg);

struct SubjectResult {
    int id = 0;
    double truth_score = 0.0;
    int truth_label = 0;
    double pred_score = 0.0;
    int pred_label = 0;
};

struct EvalResult {
    std::vector<SubjectResult> per_subject;
    MetricsReport metrics;
    SimilarityHistogram histogram;
};

/// Leave-one-subject-out protocol: retrains per fold, aggregates predictions
/// and the chunk-similarity histogram across held-out subjects. Folds run on
/// up to `jobs` threads with per-fold derived seeds, so results do not
/// depend on scheduling.
EvalResult loso_evaluate(const Cohort& cohort, const TrainConfig& cfg, std::size_t jobs = 1,
                         std::size_t histogram_bins = 10);

/// Trained artifact: encoders, behavior normalization, kNN index, and the
/// caller's resolved configuration (stored verbatim in the checkpoint).
struct ModelBundle {
    TrainConfig cfg;
    TrainedModel model;
    PredictorIndex index;
    std::string config_json;  // resolved run config, embedded by the caller
};

void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

}  // namespace traitalign
