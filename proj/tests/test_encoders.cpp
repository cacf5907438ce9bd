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
#include <numeric>

#include "test_util.hpp"
#include "traitalign/encoders.hpp"
#include "traitalign/errors.hpp"
#include "traitalign/objective.hpp"

using namespace traitalign;

namespace {

EncoderConfig small_config() {
    EncoderConfig cfg;
    cfg.channels = 3;
    cfg.rois = 5;
    cfg.scales = 4;
    cfg.embed_dim = 6;
    cfg.mix_width = 4;
    cfg.twc_depth = 2;
    cfg.kernel = 3;
    cfg.gcn_features = 4;
    return cfg;
}

Chunk make_chunk(std::size_t rows, std::size_t cols, Rng& rng, int subject = 0,
                 Modality mod = Modality::kEeg) {
    Chunk c;
    c.subject_id = subject;
    c.modality = mod;
    c.rows = rows;
    c.cols = cols;
    c.data.resize(rows * cols);
    for (auto& v : c.data) v = rng.normal();
    return c;
}

// Textbook one-pass Pearson, independent of the two-pass implementation.
double pearson_onepass(const double* a, const double* b, std::size_t n) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t t = 0; t < n; ++t) {
        sa += a[t];
        sb += b[t];
        saa += a[t] * a[t];
        sbb += b[t] * b[t];
        sab += a[t] * b[t];
    }
    const double nn = static_cast<double>(n);
    const double cov = sab - sa * sb / nn;
    const double va = saa - sa * sa / nn;
    const double vb = sbb - sb * sb / nn;
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("time_wise_conv: unit kernel and constant input") {
    // K=1, all-ones filter: output == selu(input).
    Rng rng(21);
    auto x = testutil::random_tensor({8, 3}, rng, -2.0, 2.0, false);
    auto w1 = Tensor::from({1, 3}, {1.0, 1.0, 1.0});
    auto out = time_wise_conv(x, w1);
    auto ref = selu(x);
    for (std::size_t i = 0; i < out->size(); ++i) {
        CHECK(out->data[i] == doctest::Approx(ref->data[i]));
    }

    // Constant input c per channel: pre-activation is c * sum_k W.
    auto xc = Tensor::from({6, 2}, std::vector<double>(12, 0.0));
    for (std::size_t l = 0; l < 6; ++l) {
        xc->at(l, 0) = 2.0;
        xc->at(l, 1) = -0.5;
    }
    auto w = testutil::random_tensor({4, 2}, rng, -1.0, 1.0, false);
    auto conv = depthwise_conv_valid(xc, w);
    for (std::size_t d = 0; d < 2; ++d) {
        double wsum = 0.0;
        for (std::size_t k = 0; k < 4; ++k) wsum += w->at(k, d);
        for (std::size_t l = 0; l < conv->rows(); ++l) {
            CHECK(conv->at(l, d) == doctest::Approx(xc->at(0, d) * wsum));
        }
    }
}

TEST_CASE("time_wise_conv: matches the nested-loop oracle") {
    Rng rng(22);
    auto x = testutil::random_tensor({12, 3}, rng, -2.0, 2.0, false);
    auto w = testutil::random_tensor({4, 3}, rng, -1.0, 1.0, false);
    auto out = depthwise_conv_valid(x, w);
    for (std::size_t l = 0; l < 9; ++l) {
        for (std::size_t d = 0; d < 3; ++d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k) acc += x->at(l + k, d) * w->at(k, d);
            CHECK(out->at(l, d) == doctest::Approx(acc).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(depthwise_conv_valid(testutil::random_tensor({2, 3}, rng), w),
                    ConfigError);
}

TEST_CASE("electrode_wise_conv: identity, selection, loop oracle") {
    Rng rng(23);
    auto x = testutil::random_tensor({7, 4}, rng, -2.0, 2.0, false);

    std::vector<double> eye(16, 0.0);
    for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
    auto out = electrode_wise_conv(x, Tensor::from({4, 4}, eye));
    auto ref = selu(x);
    for (std::size_t i = 0; i < out->size(); ++i) {
        CHECK(out->data[i] == doctest::Approx(ref->data[i]));
    }

    // One-hot column selects one electrode.
    auto onehot = Tensor::from({4, 1}, {0.0, 0.0, 1.0, 0.0});
    auto sel = electrode_wise_conv(x, onehot);
    for (std::size_t l = 0; l < 7; ++l) {
        CHECK(sel->at(l, 0) == doctest::Approx(selu(x)->at(l, 2)));
    }

    auto w = testutil::random_tensor({4, 5}, rng, -1.0, 1.0, false);
    auto mixed = matmul(x, w);
    for (std::size_t l = 0; l < 7; ++l) {
        for (std::size_t o = 0; o < 5; ++o) {
            double acc = 0.0;
            for (std::size_t d = 0; d < 4; ++d) acc += x->at(l, d) * w->at(d, o);
            CHECK(mixed->at(l, o) == doctest::Approx(acc).epsilon(1e-10));
        }
    }
}

TEST_CASE("temporal_pool: mean over timesteps, permutation invariant") {
    auto x = Tensor::from({2, 1}, {1.0, 3.0});
    CHECK(temporal_pool(x)->data[0] == doctest::Approx(2.0));

    Rng rng(24);
    auto y = testutil::random_tensor({9, 4}, rng, -2.0, 2.0, false);
    const auto pooled = temporal_pool(y)->data;
    // Reverse the rows; the pool must not change.
    std::vector<double> rev(y->size());
    for (std::size_t l = 0; l < 9; ++l) {
        for (std::size_t d = 0; d < 4; ++d) rev[(8 - l) * 4 + d] = y->at(l, d);
    }
    const auto pooled_rev = temporal_pool(Tensor::from({9, 4}, rev))->data;
    for (std::size_t d = 0; d < 4; ++d) {
        CHECK(pooled[d] == doctest::Approx(pooled_rev[d]).epsilon(1e-12));
    }
}

TEST_CASE("connectivity: affine dependence, symmetry, oracle equivalence") {
    Rng rng(25);
    const std::size_t scans = 50;
    std::vector<double> series(3 * scans);
    for (std::size_t t = 0; t < scans; ++t) {
        series[t] = rng.normal();
        series[scans + t] = 2.0 * series[t] + 3.0;  // affine of row 0
        series[2 * scans + t] = rng.normal();
    }
    const auto g = connectivity(series, 3, scans);
    CHECK(g.adjacency[0 * 3 + 1] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(g.adjacency[i * 3 + i] == 1.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(g.adjacency[i * 3 + j] == g.adjacency[j * 3 + i]);
            const double oracle =
                pearson_onepass(&series[i * scans], &series[j * scans], scans);
            CHECK(g.adjacency[i * 3 + j] == doctest::Approx(oracle).epsilon(1e-10));
        }
    }
}

TEST_CASE("connectivity: long independent rows decorrelate") {
    Rng rng(26);
    const std::size_t scans = 200;
    std::vector<double> series(2 * scans);
    for (auto& v : series) v = rng.normal();
    const auto g = connectivity(series, 2, scans);
    CHECK(std::abs(g.adjacency[1]) < 0.2);
}

TEST_CASE("connectivity: constant row handled with zeroed correlations") {
    std::vector<double> series = {1.0, 1.0, 1.0, 1.0, 0.3, -0.1, 0.9, 0.2};
    const auto g = connectivity(series, 2, 4);
    CHECK(g.adjacency[0 * 2 + 1] == 0.0);
    CHECK(g.adjacency[0 * 2 + 0] == 1.0);
    CHECK_THROWS_AS(connectivity(series, 2, 3), DataError);
}

TEST_CASE("gcn_forward: isolated nodes and zero weights") {
    // A = 0 (R=2): A+I = I, normalized operator = I, so out = leaky(XW).
    ConnectivityGraph g;
    g.rois = 2;
    g.adjacency.assign(4, 0.0);
    g.propagation = {1.0, 0.0, 0.0, 1.0};

    Rng rng(27);
    auto x = testutil::random_tensor({2, 2}, rng, -2.0, 2.0, false);
    auto w = testutil::random_tensor({2, 3}, rng, -1.0, 1.0, false);
    auto out = gcn_forward(g, x, w, 0.01);
    auto ref = leaky_relu(matmul(x, w), 0.01);
    for (std::size_t i = 0; i < out->size(); ++i) {
        CHECK(out->data[i] == doctest::Approx(ref->data[i]).epsilon(1e-12));
    }

    auto w0 = Tensor::from({2, 3}, std::vector<double>(6, 0.0));
    for (double v : gcn_forward(g, x, w0, 0.01)->data) CHECK(v == 0.0);
}

TEST_CASE("gcn_forward: matches a dense oracle on a random graph") {
    Rng rng(28);
    const std::size_t r = 5, scans = 40, f = 3;
    std::vector<double> series(r * scans);
    for (auto& v : series) v = rng.normal();
    const auto g = connectivity(series, r, scans);
    auto x = Tensor::from({r, r}, g.adjacency);
    auto w = testutil::random_tensor({r, f}, rng, -1.0, 1.0, false);
    const auto out = gcn_forward(g, x, w, 0.01);

    // Dense oracle: build A+I, D, and the triple product explicitly.
    std::vector<double> deg(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            deg[i] += g.adjacency[i * r + j] + (i == j ? 1.0 : 0.0);
        }
    }
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t ff = 0; ff < f; ++ff) {
            double acc = 0.0;
            for (std::size_t j = 0; j < r; ++j) {
                const double a_tilde = g.adjacency[i * r + j] + (i == j ? 1.0 : 0.0);
                const double norm = a_tilde / std::sqrt(deg[i] * deg[j]);
                for (std::size_t kk = 0; kk < r; ++kk) {
                    acc += norm * g.adjacency[j * r + kk] * w->at(kk, ff);
                }
            }
            const double expect = acc > 0.0 ? acc : 0.01 * acc;
            CHECK(out->at(i, ff) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("gcn_forward: permutation equivariance") {
    Rng rng(29);
    const std::size_t r = 6, scans = 30;
    std::vector<double> series(r * scans);
    for (auto& v : series) v = rng.normal();

    std::vector<std::size_t> perm(r);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    std::vector<double> permuted(r * scans);
    for (std::size_t i = 0; i < r; ++i) {
        std::copy(&series[perm[i] * scans], &series[perm[i] * scans] + scans,
                  &permuted[i * scans]);
    }

    const auto g1 = connectivity(series, r, scans);
    const auto g2 = connectivity(permuted, r, scans);

    // Node features permuted consistently (rows and columns of A).
    auto x1 = Tensor::from({r, r}, g1.adjacency);
    auto x2 = Tensor::from({r, r}, g2.adjacency);
    // Weight rows follow the node permutation as well: W2[i] = W1[perm[i]].
    auto w1 = testutil::random_tensor({r, 4}, rng, -1.0, 1.0, false);
    std::vector<double> w2v(r * 4);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t c = 0; c < 4; ++c) w2v[i * 4 + c] = w1->at(perm[i], c);
    }
    auto out1 = gcn_forward(g1, x1, w1, 0.01);
    auto out2 = gcn_forward(g2, x2, Tensor::from({r, 4}, w2v), 0.01);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(out2->at(i, c) == doctest::Approx(out1->at(perm[i], c)).epsilon(1e-9));
        }
    }
}

TEST_CASE("roi_pool: constant rows pass through") {
    auto x = Tensor::from({3, 2}, {0.5, -1.0, 0.5, -1.0, 0.5, -1.0});
    const auto pooled = roi_pool(x);
    CHECK(pooled->data[0] == doctest::Approx(0.5));
    CHECK(pooled->data[1] == doctest::Approx(-1.0));
}

TEST_CASE("encoders: determinism and unit-norm embeddings") {
    const auto cfg = small_config();
    Rng rng(30);
    auto enc = EncoderSet::init(cfg, rng);

    Rng data_rng(31);
    auto eeg_chunk = make_chunk(cfg.channels, 24, data_rng);
    auto fmri_chunk = make_chunk(cfg.rois, 20, data_rng, 0, Modality::kFmri);
    std::vector<double> beh = {0.1, -0.4, 0.7, 0.2};

    for (const auto& emb :
         {encode_eeg(eeg_chunk, enc.eeg), encode_fmri(fmri_chunk, enc.fmri),
          encode_behavior(beh, enc.behavior)}) {
        double n2 = 0.0;
        for (double v : emb->data) n2 += v * v;
        CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-9);
    }

    CHECK(encode_eeg(eeg_chunk, enc.eeg)->data == encode_eeg(eeg_chunk, enc.eeg)->data);
    CHECK(encode_behavior(beh, enc.behavior)->data ==
          encode_behavior(beh, enc.behavior)->data);

    // Zero chunk: a fixed net maps it to a fixed embedding (regression point).
    Chunk zero = eeg_chunk;
    std::fill(zero.data.begin(), zero.data.end(), 0.0);
    CHECK(encode_eeg(zero, enc.eeg)->data == encode_eeg(zero, enc.eeg)->data);

    Chunk tiny = eeg_chunk;
    tiny.cols = 3;
    tiny.data.resize(cfg.channels * 3);
    CHECK_THROWS_AS(encode_eeg(tiny, enc.eeg), DataError);
}

TEST_CASE("encoders: gradients through each encoder match finite differences") {
    const auto cfg = small_config();
    Rng rng(32);
    auto enc = EncoderSet::init(cfg, rng);

    Rng data_rng(33);
    auto eeg_a = make_chunk(cfg.channels, 20, data_rng, 1);
    auto eeg_b = make_chunk(cfg.channels, 20, data_rng, 2);
    auto fmri_a = make_chunk(cfg.rois, 16, data_rng, 1, Modality::kFmri);
    auto fmri_b = make_chunk(cfg.rois, 16, data_rng, 2, Modality::kFmri);
    std::vector<double> beh_a = {0.2, -0.3, 0.5, -0.8};
    std::vector<double> beh_b = {-0.6, 0.4, 0.1, 0.3};

    auto build = [&] {
        BatchEmbeddings batch;
        batch.eeg = stack_rows({encode_eeg(eeg_a, enc.eeg), encode_eeg(eeg_b, enc.eeg)});
        batch.fmri =
            stack_rows({encode_fmri(fmri_a, enc.fmri), encode_fmri(fmri_b, enc.fmri)});
        batch.behavior = stack_rows({encode_behavior(beh_a, enc.behavior),
                                     encode_behavior(beh_b, enc.behavior)});
        batch.subject_ids = {1, 2};
        batch.tau = 0.5;
        return total_loss(batch, 1.0).total;
    };
    const auto report = testutil::fd_check(build, enc.params(), 1e-6);
    CHECK_MESSAGE(report.max_rel_err < 1e-4, "analytic=", report.worst_analytic,
                  " numeric=", report.worst_numeric);
}

TEST_CASE("encoders: checkpoint round trip preserves parameters") {
    const auto cfg = small_config();
    Rng rng(34);
    auto enc = EncoderSet::init(cfg, rng);
    const auto tensors = enc.named_tensors();
    auto restored = EncoderSet::from_named_tensors(cfg, tensors);

    Rng data_rng(35);
    auto chunk = make_chunk(cfg.channels, 24, data_rng);
    CHECK(encode_eeg(chunk, enc.eeg)->data == encode_eeg(chunk, restored.eeg)->data);
}
