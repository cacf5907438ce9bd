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

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "traitalign/adam.hpp"
#include "traitalign/checkpoint.hpp"
#include "traitalign/errors.hpp"
#include "traitalign/tensor.hpp"

using namespace traitalign;

TEST_CASE("backward: identity and square") {
    auto x = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
    backward(sum(x));
    CHECK(x->grad == std::vector<double>{1.0, 1.0, 1.0});

    auto y = Tensor::from({3}, {2.0, -1.0, 0.0}, true);
    backward(sum(mul(y, y)));
    CHECK(y->grad == std::vector<double>{4.0, -2.0, 0.0});
}

TEST_CASE("backward: accumulates across calls") {
    auto x = Tensor::from({2}, {1.0, 4.0}, true);
    auto loss = sum(mul(x, x));
    backward(loss);
    backward(loss);
    CHECK(x->grad[0] == doctest::Approx(4.0));
    CHECK(x->grad[1] == doctest::Approx(16.0));
}

TEST_CASE("backward: rejects non-scalar loss and non-finite values") {
    auto x = Tensor::from({2}, {1.0, 2.0}, true);
    CHECK_THROWS_AS(backward(mul(x, x)), ConfigError);

    auto big = Tensor::from({1}, {1e308}, true);
    CHECK_THROWS_AS(sum(mul(big, big)), NumericError);
}

TEST_CASE("gradient check: every differentiable op") {
    Rng rng(42);
    testutil::FdReport worst;
    auto track = [&](const testutil::FdReport& r) {
        if (r.max_rel_err > worst.max_rel_err) worst = r;
    };

    for (int rep = 0; rep < 4; ++rep) {
        auto a = testutil::random_tensor({3, 4}, rng);
        auto b = testutil::random_tensor({3, 4}, rng);
        track(testutil::fd_check([&] { return sum(mul(add(a, b), sub(a, b))); }, {a, b}));
        track(testutil::fd_check([&] { return sum(scale(mul(a, b), 1.7)); }, {a, b}));

        auto m1 = testutil::random_tensor({3, 5}, rng);
        auto m2 = testutil::random_tensor({5, 2}, rng);
        auto m3 = testutil::random_tensor({4, 5}, rng);
        track(testutil::fd_check([&] { return sum(matmul(m1, m2)); }, {m1, m2}));
        track(testutil::fd_check([&] { return sum(selu(matmul_nt(m1, m3))); }, {m1, m3}));

        auto x = testutil::random_tensor({6}, rng);
        track(testutil::fd_check([&] { return sum(selu(x)); }, {x}));
        track(testutil::fd_check([&] { return sum(leaky_relu(x, 0.01)); }, {x}));
        track(testutil::fd_check([&] { return sum(tanh_act(x)); }, {x}));
        track(testutil::fd_check([&] { return sum(l2_normalize(x)); }, {x}));

        auto sm = testutil::random_tensor({3, 4}, rng);
        auto w = testutil::random_tensor({3, 4}, rng, -1.0, 1.0, false);
        track(testutil::fd_check([&] { return sum(mul(softmax_row(sm), w)); }, {sm}));

        auto v1 = testutil::random_tensor({5}, rng);
        auto v2 = testutil::random_tensor({5}, rng);
        track(testutil::fd_check([&] { return cosine_sim(v1, v2); }, {v1, v2}));
        track(testutil::fd_check([&] { return sum(concat(v1, v2)); }, {v1, v2}));
        track(testutil::fd_check(
            [&] { return sum(mul(stack_rows({v1, v2, v1}), stack_rows({v2, v1, v2}))); },
            {v1, v2}));

        auto sig = testutil::random_tensor({12, 3}, rng);
        auto ker = testutil::random_tensor({4, 3}, rng);
        track(testutil::fd_check([&] { return sum(depthwise_conv_valid(sig, ker)); },
                                 {sig, ker}));
        track(testutil::fd_check([&] { return sum(mean_rows(selu(matmul(m1, m2)))); },
                                 {m1, m2}));
    }
    CHECK_MESSAGE(worst.max_rel_err < 1e-4, "worst analytic=", worst.worst_analytic,
                  " numeric=", worst.worst_numeric);
}

TEST_CASE("activations: pinned values") {
    auto zero = Tensor::from({1}, {0.0});
    CHECK(selu(zero)->data[0] == 0.0);
    auto neg = Tensor::from({1}, {-1.0});
    CHECK(leaky_relu(neg, 0.01)->data[0] == doctest::Approx(-0.01));

    // SELU constants from the self-normalizing formulation.
    auto one = Tensor::from({1}, {1.0});
    CHECK(selu(one)->data[0] == doctest::Approx(1.0507).epsilon(1e-4));
}

TEST_CASE("softmax rows sum to one and stay positive") {
    Rng rng(7);
    auto x = testutil::random_tensor({5, 8}, rng, -30.0, 30.0, false);
    auto y = softmax_row(x);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(y->at(i, j) > 0.0);
            s += y->at(i, j);
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("cosine_sim: self similarity, orthogonality, symmetry, scale invariance") {
    auto v = Tensor::from({3}, {0.3, -2.0, 1.1});
    CHECK(cosine_sim(v, v)->value() == doctest::Approx(1.0));

    auto e1 = Tensor::from({2}, {1.0, 0.0});
    auto e2 = Tensor::from({2}, {0.0, 1.0});
    CHECK(cosine_sim(e1, e2)->value() == 0.0);

    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        auto a = testutil::random_tensor({6}, rng, -2.0, 2.0, false);
        auto b = testutil::random_tensor({6}, rng, -2.0, 2.0, false);
        const double sab = cosine_sim(a, b)->value();
        CHECK(sab == doctest::Approx(cosine_sim(b, a)->value()).epsilon(1e-15));
        CHECK(sab >= -1.0 - 1e-12);
        CHECK(sab <= 1.0 + 1e-12);
        const double alpha = rng.uniform(0.1, 9.0);
        auto scaled = scale(a, alpha);
        CHECK(std::abs(cosine_sim(scaled, b)->value() - sab) < 1e-12);
    }

    auto zero = Tensor::from({2}, {0.0, 0.0});
    CHECK_THROWS_AS(cosine_sim(zero, e1), NumericError);
}

TEST_CASE("adam: zero gradient is a fixed point") {
    auto p = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
    const auto before = p->data;
    Adam opt({p});
    p->ensure_grad();
    opt.step();
    CHECK(p->data == before);
}

TEST_CASE("adam: first-step magnitude on a unit gradient") {
    auto p = Tensor::from({1}, {1.0}, true);
    Adam opt({p});
    p->ensure_grad();
    p->grad[0] = 1.0;
    opt.step();
    // Bias-corrected first step is -lr * g/(|g| + eps) = -0.001 up to eps.
    CHECK(p->data[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-6));
}

TEST_CASE("adam: two steps reduce a convex quadratic") {
    auto p = Tensor::from({1}, {2.0}, true);
    auto target = Tensor::from({1}, {3.0});
    auto f = [&] {
        auto d = sub(p, target);
        return sum(mul(d, d));
    };
    const double f0 = f()->value();
    Adam opt({p});
    for (int i = 0; i < 2; ++i) {
        auto loss = f();
        opt.zero_grad();
        backward(loss);
        opt.step();
    }
    CHECK(f()->value() < f0);
}

TEST_CASE("determinism: same seed gives bitwise-identical trajectories") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        auto w = testutil::random_tensor({4, 4}, rng);
        auto x = testutil::random_tensor({4, 4}, rng, -2.0, 2.0, false);
        Adam opt({w});
        for (int i = 0; i < 20; ++i) {
            auto loss = sum(mul(matmul(w, x), matmul(w, x)));
            opt.zero_grad();
            backward(loss);
            opt.step();
        }
        return w->data;
    };
    const auto a = run(123);
    const auto b = run(123);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint: bit-exact round trip") {
    Rng rng(99);
    std::vector<NamedTensor> tensors;
    tensors.push_back({"w/alpha", testutil::random_tensor({3, 4}, rng)});
    tensors.push_back({"w/beta", testutil::random_tensor({2, 2, 5}, rng)});
    tensors.push_back({"scalar", Tensor::scalar(-0.0)});

    const auto path = std::filesystem::temp_directory_path() / "tacp_roundtrip.bin";
    save_checkpoint(path.string(), tensors);
    const auto loaded = load_checkpoint(path.string());

    REQUIRE(loaded.size() == tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        CHECK(loaded[i].name == tensors[i].name);
        CHECK(loaded[i].tensor->shape == tensors[i].tensor->shape);
        CHECK(std::memcmp(loaded[i].tensor->data.data(), tensors[i].tensor->data.data(),
                          tensors[i].tensor->data.size() * sizeof(double)) == 0);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint: bad magic and truncation are data errors") {
    const auto path = std::filesystem::temp_directory_path() / "tacp_bad.bin";
    {
        std::ofstream os(path, std::ios::binary);
        os << "XXXX";
    }
    CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);

    std::vector<NamedTensor> tensors{{"t", Tensor::from({4}, {1, 2, 3, 4})}};
    save_checkpoint(path.string(), tensors);
    const auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full - 8);
    CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);
    std::filesystem::remove(path);
}
