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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "traitalign/errors.hpp"
#include "traitalign/synthdata.hpp"

using namespace traitalign;
namespace fs = std::filesystem;

namespace {

CohortSpec small_spec() {
    CohortSpec spec;
    spec.n_subjects = 8;
    spec.channels = 6;
    spec.timepoints = 512;
    spec.rois = 8;
    spec.scans = 60;
    spec.seed = 77;
    return spec;
}

// Goertzel-style single-bin power at frequency f (Hz): an independent
// bandpower oracle built from the periodogram definition.
double tone_power(const double* x, std::size_t n, double f, double fs) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double ang = 2.0 * M_PI * f * static_cast<double>(t) / fs;
        re += x[t] * std::cos(ang);
        im -= x[t] * std::sin(ang);
    }
    return (re * re + im * im) / static_cast<double>(n);
}

double band_power(const double* x, std::size_t n, double f_lo, double f_hi, double fs) {
    double total = 0.0;
    const double df = fs / static_cast<double>(n);
    for (double f = f_lo; f <= f_hi; f += df) total += tone_power(x, n, f, fs);
    return total;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("generate_cohort: deterministic under the seed") {
    const auto spec = small_spec();
    const auto a = generate_cohort(spec);
    const auto b = generate_cohort(spec);
    REQUIRE(a.subjects.size() == b.subjects.size());
    for (std::size_t i = 0; i < a.subjects.size(); ++i) {
        CHECK(a.subjects[i].trait == b.subjects[i].trait);
        CHECK(std::memcmp(a.subjects[i].eeg.data(), b.subjects[i].eeg.data(),
                          a.subjects[i].eeg.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(a.subjects[i].fmri.data(), b.subjects[i].fmri.data(),
                          a.subjects[i].fmri.size() * sizeof(double)) == 0);
    }

    auto spec2 = spec;
    spec2.seed = 78;
    const auto c = generate_cohort(spec2);
    CHECK(c.subjects[0].trait != a.subjects[0].trait);
}

TEST_CASE("generate_cohort: z-score invariant per channel") {
    auto spec = small_spec();
    spec.chunk_noise_rate = 0.0;
    const auto cohort = generate_cohort(spec);
    for (const auto& s : cohort.subjects) {
        for (std::size_t c = 0; c < spec.channels; ++c) {
            const double* row = &s.eeg[c * spec.timepoints];
            double mean = 0.0, var = 0.0;
            for (std::size_t t = 0; t < spec.timepoints; ++t) mean += row[t];
            mean /= spec.timepoints;
            for (std::size_t t = 0; t < spec.timepoints; ++t) {
                var += (row[t] - mean) * (row[t] - mean);
            }
            var /= spec.timepoints;
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("generate_cohort: class labels balanced to within one subject") {
    for (std::size_t n : {8u, 9u, 21u}) {
        auto spec = small_spec();
        spec.n_subjects = n;
        const auto cohort = generate_cohort(spec);
        int pos = 0;
        for (const auto& s : cohort.subjects) pos += s.label;
        CHECK(std::abs(2 * pos - static_cast<int>(n)) <= 1);
    }
}

TEST_CASE("generate_cohort: designated-channel alpha power tracks the trait") {
    CohortSpec spec;
    spec.n_subjects = 40;
    spec.channels = 6;
    spec.timepoints = 1024;
    spec.rois = 4;
    spec.scans = 30;
    spec.seed = 5;

    const auto cohort = generate_cohort(spec);
    std::vector<double> traits, alpha_power;
    for (const auto& s : cohort.subjects) {
        traits.push_back(s.trait);
        // Channel 3 is a designated trait carrier.
        alpha_power.push_back(band_power(&s.eeg[3 * spec.timepoints], spec.timepoints, 8.0,
                                         12.0, spec.sample_rate));
    }
    CHECK(pearson(traits, alpha_power) > 0.7);

    // Zero effect sizes: the correlation disappears.
    auto flat = spec;
    flat.eeg_effect = 0.0;
    const auto cohort0 = generate_cohort(flat);
    traits.clear();
    alpha_power.clear();
    for (const auto& s : cohort0.subjects) {
        traits.push_back(s.trait);
        alpha_power.push_back(band_power(&s.eeg[3 * spec.timepoints], spec.timepoints, 8.0,
                                         12.0, spec.sample_rate));
    }
    CHECK(std::abs(pearson(traits, alpha_power)) < 0.15);
}

TEST_CASE("generate_cohort: designated fMRI correlations track the trait") {
    CohortSpec spec;
    spec.n_subjects = 30;
    spec.channels = 2;
    spec.timepoints = 128;
    spec.rois = 8;
    spec.scans = 150;
    spec.seed = 6;

    const auto cohort = generate_cohort(spec);
    std::vector<double> traits, corr;
    for (const auto& s : cohort.subjects) {
        traits.push_back(s.trait);
        std::vector<double> r0(s.fmri.begin(), s.fmri.begin() + spec.scans);
        std::vector<double> r4(s.fmri.begin() + 4 * spec.scans,
                               s.fmri.begin() + 5 * spec.scans);
        corr.push_back(pearson(r0, r4));  // pair (0, R/2) is trait-modulated
    }
    CHECK(pearson(traits, corr) > 0.7);
}

TEST_CASE("generate_cohort: corruption spans recorded and high amplitude") {
    auto spec = small_spec();
    spec.chunk_noise_rate = 0.5;
    const auto cohort = generate_cohort(spec);
    bool any = false;
    for (const auto& s : cohort.subjects) {
        for (const auto& [b, e] : s.eeg_corrupt_spans) {
            any = true;
            double var_in = 0.0;
            for (std::size_t t = b; t < e; ++t) {
                var_in += s.eeg[t] * s.eeg[t];  // channel 0
            }
            var_in /= static_cast<double>(e - b);
            CHECK(var_in > 2.0);  // clean signal is ~unit variance
        }
    }
    CHECK(any);
}

TEST_CASE("generate_cohort: infeasible specs rejected") {
    auto spec = small_spec();
    spec.scans = 1;
    CHECK_THROWS_AS(generate_cohort(spec), ConfigError);
    spec = small_spec();
    spec.burst_period = spec.timepoints + 1;
    CHECK_THROWS_AS(generate_cohort(spec), ConfigError);
}

TEST_CASE("dataset: save/load round trip is bitwise exact") {
    const auto cohort = generate_cohort(small_spec());
    const auto dir = (fs::temp_directory_path() / "tads_roundtrip").string();
    fs::remove_all(dir);
    save_dataset(dir, cohort);
    const auto loaded = load_dataset(dir);

    REQUIRE(loaded.subjects.size() == cohort.subjects.size());
    CHECK(loaded.spec.seed == cohort.spec.seed);
    CHECK(loaded.scale_names == cohort.scale_names);
    for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
        const auto& a = cohort.subjects[i];
        const auto& b = loaded.subjects[i];
        CHECK(a.trait == b.trait);
        CHECK(a.label == b.label);
        CHECK(std::memcmp(a.eeg.data(), b.eeg.data(), a.eeg.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(a.fmri.data(), b.fmri.data(), a.fmri.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(a.behavior.data(), b.behavior.data(),
                          a.behavior.size() * sizeof(double)) == 0);
        CHECK(a.eeg_corrupt_spans == b.eeg_corrupt_spans);
    }
    fs::remove_all(dir);
}

TEST_CASE("dataset: corrupted magic and inconsistent manifest are errors") {
    const auto cohort = generate_cohort(small_spec());
    const auto dir = (fs::temp_directory_path() / "tads_corrupt").string();
    fs::remove_all(dir);
    save_dataset(dir, cohort);

    // Corrupt one array's magic bytes.
    const auto victim = fs::path(dir) / "sub000_eeg.bin";
    {
        std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
        f.write("ZZZZ", 4);
    }
    CHECK_THROWS_AS(load_dataset(dir), DataError);

    // Restore, then delete a file the manifest promises.
    save_dataset(dir, cohort);
    fs::remove(fs::path(dir) / "sub001_fmri.bin");
    CHECK_THROWS_AS(load_dataset(dir), DataError);

    // Manifest/subject-count mismatch.
    save_dataset(dir, cohort);
    {
        std::ifstream is(fs::path(dir) / "manifest.json");
        std::string text((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
        is.close();
        const auto pos = text.find("\"n_subjects\": 8");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 15, "\"n_subjects\": 9");
        std::ofstream os(fs::path(dir) / "manifest.json");
        os << text;
    }
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    fs::remove_all(dir);
}

TEST_CASE("dataset: single array files round trip") {
    std::vector<double> data = {1.5, -2.25, 0.0, 1e-300};
    const auto path = (fs::temp_directory_path() / "tads_single.bin").string();
    save_array(path, data, {2, 2});
    std::vector<std::size_t> dims;
    const auto loaded = load_array(path, dims);
    CHECK(dims == std::vector<std::size_t>{2, 2});
    CHECK(std::memcmp(loaded.data(), data.data(), data.size() * sizeof(double)) == 0);
    fs::remove(path);
}
