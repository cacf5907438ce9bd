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

#include "traitalign/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "traitalign/errors.hpp"

namespace traitalign {

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine: zero-norm vector");
    return dot / std::sqrt(na * nb);
}

std::vector<double> softmax_scaled(const std::vector<double>& x, double inv_tau) {
    const double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp((x[i] - mx) * inv_tau));
    for (auto& v : out) v /= z;
    return out;
}

}  // namespace

AggregationWeights aggregation_weights(const std::vector<std::vector<double>>& eeg_embs,
                                       const std::vector<std::vector<double>>& fmri_embs,
                                       double tau_a, AggregationMode mode) {
    if (eeg_embs.empty() || fmri_embs.empty()) {
        throw DataError("aggregate: need at least one chunk per modality");
    }
    if (tau_a <= 0.0) throw ConfigError("aggregate: tau_a must be positive");
    const std::size_t ke = eeg_embs.size(), km = fmri_embs.size();

    AggregationWeights w;
    if (mode == AggregationMode::kUniform) {
        w.eeg.assign(ke, 1.0 / static_cast<double>(ke));
        w.fmri.assign(km, 1.0 / static_cast<double>(km));
        return w;
    }

    std::vector<double> mean_sim_fmri(km, 0.0), mean_sim_eeg(ke, 0.0);
    for (std::size_t i = 0; i < ke; ++i) {
        for (std::size_t j = 0; j < km; ++j) {
            const double s = cosine(eeg_embs[i], fmri_embs[j]);
            mean_sim_fmri[j] += s / static_cast<double>(ke);
            mean_sim_eeg[i] += s / static_cast<double>(km);
        }
    }
    w.fmri = softmax_scaled(mean_sim_fmri, 1.0 / tau_a);
    w.eeg = softmax_scaled(mean_sim_eeg, 1.0 / tau_a);
    return w;
}

SubjectEmbedding aggregate_subject(const std::vector<std::vector<double>>& eeg_embs,
                                   const std::vector<std::vector<double>>& fmri_embs,
                                   double tau_a, AggregationMode mode, int subject_id) {
    const auto w = aggregation_weights(eeg_embs, fmri_embs, tau_a, mode);
    const std::size_t d = eeg_embs[0].size();
    if (fmri_embs[0].size() != d) throw ConfigError("aggregate: embedding width mismatch");

    SubjectEmbedding out;
    out.subject_id = subject_id;
    out.n_eeg = eeg_embs.size();
    out.n_fmri = fmri_embs.size();
    out.vec.assign(2 * d, 0.0);
    for (std::size_t j = 0; j < fmri_embs.size(); ++j) {
        for (std::size_t c = 0; c < d; ++c) out.vec[c] += w.fmri[j] * fmri_embs[j][c];
    }
    for (std::size_t i = 0; i < eeg_embs.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) out.vec[d + c] += w.eeg[i] * eeg_embs[i][c];
    }
    return out;
}

Prediction knn_predict(const PredictorIndex& index, const std::vector<double>& query,
                       VoteRule rule) {
    if (index.size() == 0) throw DataError("knn: empty index");
    if (index.k == 0 || index.k > index.size()) {
        throw ConfigError("knn: k must be in [1, index size]");
    }
    if (index.scores.size() != index.size() || index.classes.size() != index.size()) {
        throw ConfigError("knn: index labels out of sync");
    }

    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        dist.emplace_back(1.0 - cosine(query, index.embeddings[i].vec), i);
    }
    std::stable_sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    });

    Prediction pred;
    double score_sum = 0.0;
    std::map<int, std::size_t> votes;
    for (std::size_t r = 0; r < index.k; ++r) {
        const std::size_t i = dist[r].second;
        pred.neighbors.push_back(i);
        score_sum += index.scores[i];
        votes[index.classes[i]] += 1;
    }
    pred.score = score_sum / static_cast<double>(index.k);

    if (rule == VoteRule::kMajority) {
        // std::map iterates ascending, so ties resolve to the lower class id.
        std::size_t best = 0;
        for (const auto& [cls, n] : votes) {
            if (n > best) {
                best = n;
                pred.label = cls;
            }
        }
    } else {
        std::vector<double> sorted = index.scores;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double median =
            n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        pred.label = pred.score > median ? 1 : 0;
    }
    return pred;
}

MetricsReport compute_metrics(const std::vector<double>& pred_scores,
                              const std::vector<int>& pred_labels,
                              const std::vector<double>& true_scores,
                              const std::vector<int>& true_labels) {
    const std::size_t n = true_scores.size();
    if (n == 0 || pred_scores.size() != n || pred_labels.size() != n ||
        true_labels.size() != n) {
        throw DataError("metrics: empty or mismatched inputs");
    }

    MetricsReport m;
    std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pred_labels[i] == true_labels[i]) ++correct;
        if (pred_labels[i] == 1 && true_labels[i] == 1) ++tp;
        if (pred_labels[i] == 1 && true_labels[i] == 0) ++fp;
        if (pred_labels[i] == 0 && true_labels[i] == 1) ++fn;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    m.f1 = (2 * tp + fp + fn) == 0
               ? 0.0
               : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);

    double mean_true = std::accumulate(true_scores.begin(), true_scores.end(), 0.0) /
                       static_cast<double>(n);
    double mae = 0.0, ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred_scores[i] - true_scores[i];
        mae += std::abs(d);
        ss_res += d * d;
        ss_tot += (true_scores[i] - mean_true) * (true_scores[i] - mean_true);
    }
    m.mae = mae / static_cast<double>(n);
    if (ss_tot > 0.0) {
        m.r2 = 1.0 - ss_res / ss_tot;
        m.has_r2 = true;
    }
    return m;
}

double SimilarityHistogram::accuracy(std::size_t bin) const {
    if (labeled[bin] == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(correct[bin]) / static_cast<double>(labeled[bin]);
}

SimilarityHistogram make_similarity_histogram(std::size_t bins) {
    if (bins == 0) throw ConfigError("similarity histogram: need at least one bin");
    SimilarityHistogram h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        h.edges[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins);
    }
    h.counts.assign(bins, 0);
    h.labeled.assign(bins, 0);
    h.correct.assign(bins, 0);
    return h;
}

void report_chunk_similarity(SimilarityHistogram& hist,
                             const std::vector<std::vector<double>>& eeg_embs,
                             const std::vector<std::vector<double>>& fmri_embs,
                             const PredictorIndex* index, int true_label, VoteRule rule) {
    if (eeg_embs.empty() || fmri_embs.empty()) {
        throw DataError("similarity report: no chunk pairs");
    }
    const std::size_t bins = hist.bins();
    const std::size_t d = eeg_embs[0].size();
    for (std::size_t i = 0; i < eeg_embs.size(); ++i) {
        for (std::size_t j = 0; j < fmri_embs.size(); ++j) {
            const double s = cosine(eeg_embs[i], fmri_embs[j]);
            const double t = (s + 1.0) / 2.0 * static_cast<double>(bins);
            std::size_t bin = t <= 0.0 ? 0 : static_cast<std::size_t>(t);
            bin = std::min(bin, bins - 1);
            hist.counts[bin] += 1;
            if (index != nullptr) {
                std::vector<double> pair_vec(2 * d);
                std::copy(fmri_embs[j].begin(), fmri_embs[j].end(), pair_vec.begin());
                std::copy(eeg_embs[i].begin(), eeg_embs[i].end(), pair_vec.begin() + d);
                const auto pred = knn_predict(*index, pair_vec, rule);
                hist.labeled[bin] += 1;
                if (pred.label == true_label) hist.correct[bin] += 1;
            }
        }
    }
}

}  // namespace traitalign
