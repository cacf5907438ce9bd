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

#include "traitalign/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "io_util.hpp"
#include "traitalign/errors.hpp"
#include "traitalign/rng.hpp"

namespace traitalign {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kArrayMagic[4] = {'T', 'A', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Iterative radix-2 FFT, n must be a power of two. Only used to shape the
// pink-noise spectrum, so no need for anything fancier.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 1.0 : -1.0) * kTwoPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

// 1/f-shaped noise via spectral filtering of white noise, unit variance.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
    std::size_t n2 = 1;
    while (n2 < n) n2 <<= 1;
    std::vector<std::complex<double>> spec(n2);
    for (auto& v : spec) v = std::complex<double>(rng.normal(), 0.0);
    fft_inplace(spec, false);
    spec[0] = 0.0;
    for (std::size_t k = 1; k < n2; ++k) {
        const std::size_t f = std::min(k, n2 - k);  // symmetric: keeps ifft real
        spec[k] /= std::sqrt(static_cast<double>(f));
    }
    fft_inplace(spec, true);

    std::vector<double> out(n);
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += (out[t] = spec[t].real());
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double& v : out) {
        v -= mean;
        var += v * v;
    }
    var /= static_cast<double>(n);
    const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (double& v : out) v *= inv_std;
    return out;
}

// Cholesky with diagonal jitter fallback; returns lower factor.
std::vector<double> cholesky_psd(std::vector<double> m, std::size_t n) {
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<double> l(n * n, 0.0);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = m[i * n + j];
                for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
                if (i == j) {
                    if (s <= 0.0) {
                        ok = false;
                        break;
                    }
                    l[i * n + i] = std::sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        if (ok) return l;
        for (std::size_t i = 0; i < n; ++i) m[i * n + i] += 1e-3 * (1 << attempt);
    }
    throw NumericError("synthdata: covariance not positive definite");
}

SpanList corrupt_spans(std::size_t total, std::size_t n_segments, double rate, Rng& rng) {
    SpanList spans;
    if (rate <= 0.0) return spans;
    const std::size_t seg = total / n_segments;
    for (std::size_t s = 0; s < n_segments; ++s) {
        const bool hit = rng.uniform() < rate;
        if (!hit) continue;
        const std::size_t b = s * seg;
        const std::size_t e = s + 1 == n_segments ? total : b + seg;
        spans.emplace_back(b, e);
    }
    return spans;
}

std::vector<std::string> default_scale_names(std::size_t q) {
    static const std::vector<std::string> named = {"SRQS", "LSNS", "IUS", "GSES", "MLQ"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < q; ++i) {
        out.push_back(i < named.size() ? named[i] : "SCALE" + std::to_string(i + 1));
    }
    return out;
}

}  // namespace

void save_array(const std::string& path, const std::vector<double>& data,
                const std::vector<std::size_t>& dims) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("dataset: cannot write " + path);
    os.write(kArrayMagic, 4);
    ioutil::write_u32(os, kFormatVersion);
    ioutil::write_u64(os, dims.size());
    for (auto d : dims) ioutil::write_u64(os, d);
    for (double v : data) ioutil::write_f64(os, v);
    if (!os) throw DataError("dataset: write failed for " + path);
}

std::vector<double> load_array(const std::string& path, std::vector<std::size_t>& dims) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("dataset: missing array file " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kArrayMagic, 4)) {
        throw DataError("dataset: bad magic in " + path);
    }
    if (ioutil::read_u32(is, "array version") != kFormatVersion) {
        throw DataError("dataset: unsupported version in " + path);
    }
    const auto rank = ioutil::read_u64(is, "array rank");
    dims.resize(rank);
    std::size_t n = 1;
    for (auto& d : dims) {
        d = static_cast<std::size_t>(ioutil::read_u64(is, "array dim"));
        n *= d;
    }
    std::vector<double> data(n);
    for (auto& v : data) v = ioutil::read_f64(is, "array payload");
    is.peek();
    if (!is.eof()) throw DataError("dataset: trailing bytes in " + path);
    return data;
}

void CohortSpec::validate() const {
    if (n_subjects == 0 || channels == 0 || timepoints == 0 || rois == 0 || scans < 2 ||
        scales == 0) {
        throw ConfigError("cohort spec: all counts must be positive (scans >= 2)");
    }
    if (sample_rate <= 0.0) throw ConfigError("cohort spec: sample rate must be positive");
    if (!std::isfinite(eeg_effect) || !std::isfinite(fmri_effect)) {
        throw ConfigError("cohort spec: effect sizes must be finite");
    }
    if (chunk_noise_rate < 0.0 || chunk_noise_rate > 1.0) {
        throw ConfigError("cohort spec: chunk_noise_rate in [0,1]");
    }
    if (burst_period != 0 && burst_period > timepoints) {
        throw ConfigError("cohort spec: burst period longer than the recording");
    }
}

Cohort generate_cohort(const CohortSpec& spec) {
    spec.validate();
    Cohort cohort;
    cohort.spec = spec;
    cohort.scale_names = default_scale_names(spec.scales);

    // Cohort-level draws: behavior readout weights, shared by all subjects.
    Rng cohort_rng(mix_seed(spec.seed, 0x10ad));
    std::vector<double> beh_weight(spec.scales);
    for (std::size_t q = 0; q < spec.scales; ++q) {
        const double sign = q % 2 == 0 ? 1.0 : -1.0;
        beh_weight[q] = sign * cohort_rng.uniform(0.8, 1.6);
    }

    const std::size_t c_mid = spec.channels / 2;
    // Trait carriers: C4/O2 analogs when six channels are present.
    const std::size_t ch_a = spec.channels > 3 ? 3 : spec.channels - 1;
    const std::size_t ch_b = spec.channels > 5 ? 5 : spec.channels - 1;
    (void)c_mid;

    for (std::size_t s = 0; s < spec.n_subjects; ++s) {
        Rng rng(mix_seed(spec.seed, s));
        SubjectRecord rec;
        rec.id = static_cast<int>(s);
        rec.trait = rng.uniform();
        const double mod = 1.0 + spec.eeg_effect * (2.0 * rec.trait - 1.0);

        // --- EEG ---
        rec.eeg.resize(spec.channels * spec.timepoints);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            auto base = pink_noise(spec.timepoints, rng);
            const bool designated = c == ch_a || c == ch_b;
            const double amp_theta = (designated ? 0.6 * mod : 0.3);
            const double amp_alpha = (designated ? 0.9 * mod : 0.45);
            // Trait carriers sit at fixed band centers; background channels
            // wander within the band.
            double f_theta = rng.uniform(4.0, 8.0);
            double f_alpha = rng.uniform(8.0, 12.0);
            if (designated) {
                f_theta = 6.0;
                f_alpha = 10.0;
            }
            const double ph_theta = rng.uniform(0.0, kTwoPi);
            const double ph_alpha = rng.uniform(0.0, kTwoPi);
            const std::size_t burst_offset =
                spec.burst_period > 0
                    ? static_cast<std::size_t>(rng.randint(
                          0, static_cast<std::int64_t>(spec.burst_period) - 1))
                    : 0;

            double* row = &rec.eeg[c * spec.timepoints];
            for (std::size_t t = 0; t < spec.timepoints; ++t) {
                const double tt = static_cast<double>(t) / spec.sample_rate;
                double gate = 1.0;
                if (spec.burst_period > 0) {
                    gate = ((t + burst_offset) % spec.burst_period) < spec.burst_period / 5
                               ? 1.0
                               : 0.0;
                }
                const double osc = amp_theta * std::sin(kTwoPi * f_theta * tt + ph_theta) +
                                   amp_alpha * std::sin(kTwoPi * f_alpha * tt + ph_alpha);
                row[t] = spec.eeg_noise * base[t] + gate * osc;
            }
            // Per-channel z-score.
            double mean = 0.0;
            for (std::size_t t = 0; t < spec.timepoints; ++t) mean += row[t];
            mean /= static_cast<double>(spec.timepoints);
            double var = 0.0;
            for (std::size_t t = 0; t < spec.timepoints; ++t) {
                row[t] -= mean;
                var += row[t] * row[t];
            }
            var /= static_cast<double>(spec.timepoints);
            const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
            for (std::size_t t = 0; t < spec.timepoints; ++t) row[t] *= inv;
        }
        rec.eeg_corrupt_spans = corrupt_spans(spec.timepoints, 8, spec.chunk_noise_rate, rng);
        for (const auto& [b, e] : rec.eeg_corrupt_spans) {
            for (std::size_t c = 0; c < spec.channels; ++c) {
                double* row = &rec.eeg[c * spec.timepoints];
                for (std::size_t t = b; t < e; ++t) row[t] += rng.normal(0.0, 4.0);
            }
        }

        // --- fMRI: block-correlated Gaussian series ---
        const std::size_t r = spec.rois;
        const std::size_t half = r / 2;
        std::vector<double> corr(r * r, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
            corr[i * r + i] = 1.0;
            for (std::size_t j = i + 1; j < r; ++j) {
                const bool same_block = (i < half) == (j < half);
                double rho = same_block ? 0.5 : 0.0;
                if (!same_block && j == i + half && i < std::min<std::size_t>(4, half)) {
                    rho = 0.6 * spec.fmri_effect * (2.0 * rec.trait - 1.0);
                }
                corr[i * r + j] = rho;
                corr[j * r + i] = rho;
            }
        }
        auto chol = cholesky_psd(corr, r);
        rec.fmri.resize(r * spec.scans);
        std::vector<double> z(r);
        for (std::size_t t = 0; t < spec.scans; ++t) {
            for (auto& v : z) v = rng.normal();
            for (std::size_t i = 0; i < r; ++i) {
                double acc = 0.0;
                for (std::size_t k = 0; k <= i; ++k) acc += chol[i * r + k] * z[k];
                rec.fmri[i * spec.scans + t] = acc;
            }
        }
        rec.fmri_corrupt_spans = corrupt_spans(spec.scans, 4, spec.chunk_noise_rate, rng);
        for (const auto& [b, e] : rec.fmri_corrupt_spans) {
            for (std::size_t i = 0; i < r; ++i) {
                double* row = &rec.fmri[i * spec.scans];
                for (std::size_t t = b; t < e; ++t) row[t] += rng.normal(0.0, 4.0);
            }
        }

        // --- behavior: linear readout of the trait plus noise ---
        rec.behavior.resize(spec.scales);
        for (std::size_t q = 0; q < spec.scales; ++q) {
            rec.behavior[q] =
                beh_weight[q] * (rec.trait - 0.5) + rng.normal(0.0, spec.behavior_noise);
        }
        cohort.subjects.push_back(std::move(rec));
    }

    // Median split over the cohort: balanced to within one subject.
    std::vector<double> traits;
    for (const auto& rec : cohort.subjects) traits.push_back(rec.trait);
    std::vector<double> sorted = traits;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    for (auto& rec : cohort.subjects) rec.label = rec.trait > median ? 1 : 0;

    return cohort;
}

void save_dataset(const std::string& dir, const Cohort& cohort) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "TADS";
    manifest["version"] = kFormatVersion;
    manifest["seed"] = cohort.spec.seed;
    const auto& sp = cohort.spec;
    manifest["spec"] = {{"n_subjects", sp.n_subjects},
                        {"channels", sp.channels},
                        {"timepoints", sp.timepoints},
                        {"sample_rate", sp.sample_rate},
                        {"rois", sp.rois},
                        {"scans", sp.scans},
                        {"scales", sp.scales},
                        {"eeg_effect", sp.eeg_effect},
                        {"fmri_effect", sp.fmri_effect},
                        {"behavior_noise", sp.behavior_noise},
                        {"eeg_noise", sp.eeg_noise},
                        {"chunk_noise_rate", sp.chunk_noise_rate},
                        {"burst_period", sp.burst_period}};
    manifest["scale_names"] = cohort.scale_names;

    json subjects = json::array();
    for (const auto& rec : cohort.subjects) {
        char tag[16];
        std::snprintf(tag, sizeof tag, "sub%03d", rec.id);
        const std::string stem(tag);
        save_array((fs::path(dir) / (stem + "_eeg.bin")).string(), rec.eeg,
                   {sp.channels, sp.timepoints});
        save_array((fs::path(dir) / (stem + "_fmri.bin")).string(), rec.fmri, {sp.rois, sp.scans});
        save_array((fs::path(dir) / (stem + "_behavior.bin")).string(), rec.behavior, {sp.scales});
        json spans_e = json::array(), spans_m = json::array();
        for (const auto& [b, e] : rec.eeg_corrupt_spans) spans_e.push_back({b, e});
        for (const auto& [b, e] : rec.fmri_corrupt_spans) spans_m.push_back({b, e});
        subjects.push_back({{"id", rec.id},
                            {"trait", rec.trait},
                            {"label", rec.label},
                            {"stem", stem},
                            {"eeg_corrupt_spans", spans_e},
                            {"fmri_corrupt_spans", spans_m}});
    }
    manifest["subjects"] = subjects;

    std::ofstream os(fs::path(dir) / "manifest.json");
    if (!os) throw DataError("dataset: cannot write manifest in " + dir);
    os << manifest.dump(2) << "\n";
}

Cohort load_dataset(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw DataError("dataset: missing manifest.json in " + dir);
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw DataError(std::string("dataset: malformed manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "TADS" ||
        manifest.value("version", 0u) != kFormatVersion) {
        throw DataError("dataset: manifest format/version mismatch");
    }

    Cohort cohort;
    const auto& sj = manifest.at("spec");
    auto& sp = cohort.spec;
    sp.n_subjects = sj.at("n_subjects").get<std::size_t>();
    sp.channels = sj.at("channels").get<std::size_t>();
    sp.timepoints = sj.at("timepoints").get<std::size_t>();
    sp.sample_rate = sj.at("sample_rate").get<double>();
    sp.rois = sj.at("rois").get<std::size_t>();
    sp.scans = sj.at("scans").get<std::size_t>();
    sp.scales = sj.at("scales").get<std::size_t>();
    sp.eeg_effect = sj.at("eeg_effect").get<double>();
    sp.fmri_effect = sj.at("fmri_effect").get<double>();
    sp.behavior_noise = sj.at("behavior_noise").get<double>();
    sp.eeg_noise = sj.at("eeg_noise").get<double>();
    sp.chunk_noise_rate = sj.at("chunk_noise_rate").get<double>();
    sp.burst_period = sj.at("burst_period").get<std::size_t>();
    sp.seed = manifest.at("seed").get<std::uint64_t>();
    cohort.scale_names = manifest.at("scale_names").get<std::vector<std::string>>();

    const auto& subjects = manifest.at("subjects");
    if (subjects.size() != sp.n_subjects) {
        throw DataError("dataset: manifest subject count does not match spec");
    }
    for (const auto& sjrec : subjects) {
        SubjectRecord rec;
        rec.id = sjrec.at("id").get<int>();
        rec.trait = sjrec.at("trait").get<double>();
        rec.label = sjrec.at("label").get<int>();
        const auto stem = sjrec.at("stem").get<std::string>();
        std::vector<std::size_t> dims;
        rec.eeg = load_array((fs::path(dir) / (stem + "_eeg.bin")).string(), dims);
        if (dims != std::vector<std::size_t>{sp.channels, sp.timepoints}) {
            throw DataError("dataset: eeg dims inconsistent with manifest for " + stem);
        }
        rec.fmri = load_array((fs::path(dir) / (stem + "_fmri.bin")).string(), dims);
        if (dims != std::vector<std::size_t>{sp.rois, sp.scans}) {
            throw DataError("dataset: fmri dims inconsistent with manifest for " + stem);
        }
        rec.behavior = load_array((fs::path(dir) / (stem + "_behavior.bin")).string(), dims);
        if (dims != std::vector<std::size_t>{sp.scales}) {
            throw DataError("dataset: behavior dims inconsistent with manifest for " + stem);
        }
        for (const auto& spn : sjrec.at("eeg_corrupt_spans")) {
            rec.eeg_corrupt_spans.emplace_back(spn.at(0).get<std::size_t>(),
                                               spn.at(1).get<std::size_t>());
        }
        for (const auto& spn : sjrec.at("fmri_corrupt_spans")) {
            rec.fmri_corrupt_spans.emplace_back(spn.at(0).get<std::size_t>(),
                                                spn.at(1).get<std::size_t>());
        }
        cohort.subjects.push_back(std::move(rec));
    }
    return cohort;
}

}  // namespace traitalign
