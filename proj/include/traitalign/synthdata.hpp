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
#include <utility>
#include <vector>

namespace traitalign {

/// Synthetic cohort description. The latent trait y ~ U[0,1] drives
/// band-limited EEG oscillation amplitudes at designated channels, selected
/// cross-block fMRI correlations, and a noisy linear behavior readout.
struct CohortSpec {
    std::size_t n_subjects = 40;
    std::size_t channels = 6;      // C
    std::size_t timepoints = 1600;  // T per EEG recording
    double sample_rate = 100.0;    // Hz
    std::size_t rois = 16;         // R
    std::size_t scans = 160;       // L_scans per fMRI recording
    std::size_t scales = 5;        // Q

    double eeg_effect = 0.8;       // trait modulation of oscillation amplitude
    double fmri_effect = 0.8;      // trait modulation of designated correlations
    double behavior_noise = 0.15;  // additive scale noise (std)
    double eeg_noise = 1.0;        // pink-noise floor amplitude

    double chunk_noise_rate = 0.0;  // fraction of time segments corrupted
    /// When nonzero, the trait-modulated oscillation appears only in short
    /// bursts repeating with this period (in timepoints); windows shorter
    /// than the period see a position-dependent share of the burst energy.
    std::size_t burst_period = 0;

    std::uint64_t seed = 1;

    void validate() const;
};

using SpanList = std::vector<std::pair<std::size_t, std::size_t>>;  // [begin, end)

struct SubjectRecord {
    int id = 0;
    std::vector<double> eeg;       // C x T row-major
    std::vector<double> fmri;      // R x L_scans row-major
    std::vector<double> behavior;  // Q
    double trait = 0.0;            // y in [0,1]
    int label = 0;                 // median split over the cohort
    SpanList eeg_corrupt_spans;    // time spans hit by injected noise
    SpanList fmri_corrupt_spans;
};

struct Cohort {
    CohortSpec spec;
    std::vector<std::string> scale_names;
    std::vector<SubjectRecord> subjects;
};

/// Deterministic under spec.seed; per-subject streams are derived so
/// generation order does not matter.
Cohort generate_cohort(const CohortSpec& spec);

/// Directory format: manifest.json plus one "TADS" binary per subject and
/// modality (magic, version u32, rank u64, dims u64 LE, payload f64 LE).
/// Round-trips bit-exactly.
void save_dataset(const std::string& dir, const Cohort& cohort);
Cohort load_dataset(const std::string& dir);

/// Single "TADS" array files; also the ingestion format for predict.
void save_array(const std::string& path, const std::vector<double>& data,
                const std::vector<std::size_t>& dims);
std::vector<double> load_array(const std::string& path, std::vector<std::size_t>& dims);

}  // namespace traitalign
