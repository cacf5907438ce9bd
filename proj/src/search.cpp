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

#include "traitalign/search.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "traitalign/errors.hpp"

namespace traitalign {

using nlohmann::json;

void TpeConfig::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("tpe: gamma must be in (0,1)");
    if (n_startup < 2) throw ConfigError("tpe: n_startup must be >= 2");
    if (n_candidates == 0) throw ConfigError("tpe: n_candidates must be positive");
    if (bounds.empty()) throw ConfigError("tpe: empty bounds");
    for (const auto& b : bounds) {
        if (b.lo > b.hi) throw ConfigError("tpe: bound lo > hi for " + b.name);
        if (b.log_scale && b.lo < 1) throw ConfigError("tpe: log bound must start >= 1");
    }
}

namespace {

double to_internal(const ParamBound& b, std::int64_t v) {
    return b.log_scale ? std::log(static_cast<double>(v)) : static_cast<double>(v);
}

std::int64_t from_internal(const ParamBound& b, double x) {
    const double raw = b.log_scale ? std::exp(x) : x;
    const auto v = static_cast<std::int64_t>(std::llround(raw));
    return std::clamp(v, b.lo, b.hi);
}

std::int64_t sample_uniform(const ParamBound& b, Rng& rng) {
    if (!b.log_scale) return rng.randint(b.lo, b.hi);
    const double lo = std::log(static_cast<double>(b.lo));
    const double hi = std::log(static_cast<double>(b.hi) + 1.0);
    return std::clamp(static_cast<std::int64_t>(std::exp(rng.uniform(lo, hi))), b.lo, b.hi);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

// log density of a Gaussian truncated to [lo, hi].
double log_truncnorm_pdf(double x, double mu, double sigma, double lo, double hi) {
    const double z = (x - mu) / sigma;
    const double mass = norm_cdf((hi - mu) / sigma) - norm_cdf((lo - mu) / sigma);
    const double safe_mass = std::max(mass, 1e-300);
    return -0.5 * z * z - std::log(sigma) - 0.9189385332046727 - std::log(safe_mass);
}

double log_sum_exp(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

struct ParzenMixture {
    std::vector<double> centers;
    double sigma = 1.0;
    double lo = 0.0;
    double hi = 1.0;

    double log_pdf(double x) const {
        std::vector<double> terms;
        terms.reserve(centers.size());
        for (double mu : centers) terms.push_back(log_truncnorm_pdf(x, mu, sigma, lo, hi));
        return log_sum_exp(terms) - std::log(static_cast<double>(centers.size()));
    }

    double sample(Rng& rng) const {
        const auto idx = static_cast<std::size_t>(
            rng.randint(0, static_cast<std::int64_t>(centers.size()) - 1));
        // Rejection into the truncation box; the box always carries mass
        // because every center lies inside it.
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double x = centers[idx] + sigma * rng.normal();
            if (x >= lo && x <= hi) return x;
        }
        return std::clamp(centers[idx], lo, hi);
    }
};

ParzenMixture build_mixture(const std::vector<double>& observations, const ParamBound& b) {
    ParzenMixture m;
    m.centers = observations;
    m.lo = to_internal(b, b.lo);
    m.hi = to_internal(b, b.hi);
    const double range = m.hi - m.lo;
    m.sigma = std::max(range / std::sqrt(static_cast<double>(observations.size())), 1e-12);
    if (m.sigma <= 0.0) m.sigma = 1e-12;
    return m;
}

}  // namespace

std::vector<std::int64_t> tpe_suggest(const std::vector<Trial>& history, const TpeConfig& cfg,
                                      Rng& rng) {
    cfg.validate();
    std::vector<const Trial*> complete;
    for (const auto& t : history) {
        if (t.status == Trial::Status::kComplete) complete.push_back(&t);
    }

    const std::size_t dims = cfg.bounds.size();
    if (complete.size() < cfg.n_startup) {
        std::vector<std::int64_t> out(dims);
        for (std::size_t d = 0; d < dims; ++d) out[d] = sample_uniform(cfg.bounds[d], rng);
        return out;
    }

    // Split at the ceil(gamma*n) best; ties resolved toward earlier trials.
    std::stable_sort(complete.begin(), complete.end(), [](const Trial* a, const Trial* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->number < b->number;
    });
    const std::size_t n = complete.size();
    std::size_t n_good = static_cast<std::size_t>(
        std::ceil(cfg.gamma * static_cast<double>(n)));
    n_good = std::clamp<std::size_t>(n_good, 1, n - 1);

    std::vector<ParzenMixture> good(dims), bad(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        std::vector<double> g_obs, b_obs;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = to_internal(cfg.bounds[d], complete[i]->candidate[d]);
            (i < n_good ? g_obs : b_obs).push_back(x);
        }
        good[d] = build_mixture(g_obs, cfg.bounds[d]);
        bad[d] = build_mixture(b_obs, cfg.bounds[d]);
    }

    std::vector<std::int64_t> best;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cfg.n_candidates; ++c) {
        std::vector<std::int64_t> cand(dims);
        double ratio = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            const double x = good[d].sample(rng);
            cand[d] = from_internal(cfg.bounds[d], x);
            // Score at the rounded value so duplicates compare consistently.
            const double xr = to_internal(cfg.bounds[d], cand[d]);
            ratio += good[d].log_pdf(xr) - bad[d].log_pdf(xr);
        }
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = std::move(cand);
        }
    }
    return best;
}

std::vector<ParamBound> default_bounds(const CohortSpec& spec, const SearchConfig& cfg) {
    std::vector<ParamBound> bounds;
    const auto eeg_hi = static_cast<std::int64_t>(std::max<std::size_t>(spec.timepoints / 2, 32));
    bounds.push_back({"eeg_length", 32, eeg_hi, true});
    if (!cfg.tie_lengths) {
        const auto fmri_hi = static_cast<std::int64_t>(std::max<std::size_t>(spec.scans / 2, 8));
        bounds.push_back({"fmri_length", 8, fmri_hi, true});
    }
    if (cfg.search_overlap) {
        bounds.push_back({"eeg_overlap_pct", 0, 75, false});
        if (!cfg.tie_lengths) bounds.push_back({"fmri_overlap_pct", 0, 75, false});
    }
    return bounds;
}

void apply_candidate(TrainConfig& cfg, const std::vector<std::int64_t>& candidate,
                     const SearchConfig& scfg, const CohortSpec& spec) {
    std::size_t pos = 0;
    const auto l_eeg = static_cast<std::size_t>(candidate.at(pos++));
    std::size_t l_fmri;
    if (scfg.tie_lengths) {
        const double ratio = static_cast<double>(spec.scans) / static_cast<double>(spec.timepoints);
        l_fmri = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(static_cast<double>(l_eeg) * ratio)));
    } else {
        l_fmri = static_cast<std::size_t>(candidate.at(pos++));
    }
    std::size_t v_eeg = l_eeg / 2, v_fmri = l_fmri / 2;
    if (scfg.search_overlap) {
        v_eeg = l_eeg * static_cast<std::size_t>(candidate.at(pos++)) / 100;
        if (!scfg.tie_lengths) {
            v_fmri = l_fmri * static_cast<std::size_t>(candidate.at(pos++)) / 100;
        } else {
            v_fmri = l_fmri * v_eeg / std::max<std::size_t>(l_eeg, 1);
        }
    }
    cfg.eeg_chunks = {l_eeg, std::min(v_eeg, l_eeg - 1)};
    cfg.fmri_chunks = {l_fmri, std::min(v_fmri, l_fmri - 1)};
}

double loso_validate(const Cohort& cohort, const std::vector<std::int64_t>& candidate,
                     const SearchConfig& cfg) {
    TrainConfig tc = resolve_train_config(cfg.train, cohort.spec);
    tc.epochs = cfg.search_epochs;
    apply_candidate(tc, candidate, cfg, cohort.spec);
    const auto result = loso_evaluate(cohort, tc, cfg.jobs, /*histogram_bins=*/1);
    if (cfg.task == TaskKind::kClassify) return result.metrics.accuracy;
    return -result.metrics.mae;
}

namespace {

json trial_to_json(const Trial& t) {
    return {{"trial", t.number},
            {"candidate", t.candidate},
            {"score", t.score},
            {"status", t.status == Trial::Status::kComplete ? "complete" : "failed"},
            {"seed", t.seed}};
}

Trial trial_from_json(const json& j) {
    Trial t;
    t.number = j.at("trial").get<std::size_t>();
    t.candidate = j.at("candidate").get<std::vector<std::int64_t>>();
    t.score = j.at("score").get<double>();
    t.status = j.at("status").get<std::string>() == "complete" ? Trial::Status::kComplete
                                                               : Trial::Status::kFailed;
    t.seed = j.at("seed").get<std::uint64_t>();
    return t;
}

}  // namespace

void append_trial_log(const std::string& path, const Trial& trial) {
    std::ofstream os(path, std::ios::app);
    if (!os) throw DataError("trial log: cannot open " + path);
    os << trial_to_json(trial).dump() << "\n";
}

std::vector<Trial> read_trial_log(const std::string& path) {
    std::vector<Trial> out;
    std::ifstream is(path);
    if (!is) return out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DataError("trial log: malformed line in " + path);
        out.push_back(trial_from_json(j));
    }
    return out;
}

SearchResult optimize_chunk_length(const Cohort& cohort, const SearchConfig& cfg) {
    TpeConfig tpe = cfg.tpe;
    if (tpe.bounds.empty()) tpe.bounds = default_bounds(cohort.spec, cfg);
    tpe.validate();

    SearchResult result;
    if (!cfg.log_path.empty() && std::filesystem::exists(cfg.log_path)) {
        result.history = read_trial_log(cfg.log_path);
    }

    Rng rng(mix_seed(cfg.train.seed, 0x59ea));
    while (result.history.size() < tpe.budget) {
        Trial trial;
        trial.number = result.history.size();
        trial.seed = cfg.train.seed;
        trial.candidate = tpe_suggest(result.history, tpe, rng);
        try {
            trial.score = loso_validate(cohort, trial.candidate, cfg);
            trial.status = Trial::Status::kComplete;
        } catch (const DataError&) {
            trial.score = 0.0;
            trial.status = Trial::Status::kFailed;
        }
        if (!cfg.log_path.empty()) append_trial_log(cfg.log_path, trial);
        result.history.push_back(trial);
    }

    const Trial* best = nullptr;
    for (const auto& t : result.history) {
        if (t.status != Trial::Status::kComplete) continue;
        if (best == nullptr || t.score > best->score) best = &t;
    }
    if (best == nullptr) throw DataError("search: no completed trials");
    result.best = *best;
    return result;
}

}  // namespace traitalign
