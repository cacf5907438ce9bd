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

enum class AggregationMode { kNoiseInformed, kUniform };
enum class VoteRule { kMajority, kThresholdedMean };

/// Concatenated [weighted fMRI aggregate || weighted EEG aggregate], width 2D.
struct SubjectEmbedding {
    int subject_id = -1;
    std::size_t n_eeg = 0;
    std::size_t n_fmri = 0;
    std::vector<double> vec;
};

struct AggregationWeights {
    std::vector<double> fmri;  // one weight per fMRI chunk, sums to 1
    std::vector<double> eeg;   // one weight per EEG chunk, sums to 1
};

/// Softmax weights from mean cross-modal similarity at temperature tau_a.
/// Chunks whose representations disagree with the other modality get small
/// weights; uniform mode is the ablation baseline.
AggregationWeights aggregation_weights(const std::vector<std::vector<double>>& eeg_embs,
                                       const std::vector<std::vector<double>>& fmri_embs,
                                       double tau_a = 0.1,
                                       AggregationMode mode = AggregationMode::kNoiseInformed);

SubjectEmbedding aggregate_subject(const std::vector<std::vector<double>>& eeg_embs,
                                   const std::vector<std::vector<double>>& fmri_embs,
                                   double tau_a = 0.1,
                                   AggregationMode mode = AggregationMode::kNoiseInformed,
                                   int subject_id = -1);

/// Training-subject embeddings with labels; queries run brute-force cosine.
struct PredictorIndex {
    std::size_t k = 5;
    std::vector<SubjectEmbedding> embeddings;
    std::vector<double> scores;  // continuous trait per entry
    std::vector<int> classes;    // median-split class per entry

    std::size_t size() const { return embeddings.size(); }
};

struct Prediction {
    double score = 0.0;  // mean of the k neighbors' scores
    int label = 0;
    std::vector<std::size_t> neighbors;  // index entries, nearest first
};

Prediction knn_predict(const PredictorIndex& index, const std::vector<double>& query,
                       VoteRule rule = VoteRule::kMajority);

struct MetricsReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    bool has_r2 = false;  // false when the truths have zero variance
};

/// Accuracy and binary F1 (positive class = 1) from labels; MAE and R^2
/// from scores. Throws DataError on empty input.
MetricsReport compute_metrics(const std::vector<double>& pred_scores,
                              const std::vector<int>& pred_labels,
                              const std::vector<double>& true_scores,
                              const std::vector<int>& true_labels);

/// Chunk-pair similarity histogram over [-1, 1], optionally annotated with
/// single-pair prediction accuracy per bin.
struct SimilarityHistogram {
    std::vector<double> edges;            // size bins+1
    std::vector<std::size_t> counts;      // size bins
    std::vector<std::size_t> labeled;     // pairs that produced a prediction
    std::vector<std::size_t> correct;     // correct single-pair predictions

    std::size_t bins() const { return counts.size(); }
    double accuracy(std::size_t bin) const;  // NaN when no labeled pairs
};

SimilarityHistogram make_similarity_histogram(std::size_t bins);

/// Bins all cross-modal pairs of one subject; when an index is given, each
/// pair is also scored by predicting from [m_j || e_i] alone.
void report_chunk_similarity(SimilarityHistogram& hist,
                             const std::vector<std::vector<double>>& eeg_embs,
                             const std::vector<std::vector<double>>& fmri_embs,
                             const PredictorIndex* index = nullptr, int true_label = 0,
                             VoteRule rule = VoteRule::kMajority);

}  // namespace traitalign
