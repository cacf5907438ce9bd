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

#include <numeric>

#include "test_util.hpp"
#include "traitalign/chunking.hpp"
#include "traitalign/errors.hpp"

using namespace traitalign;

TEST_CASE("augment: window arithmetic") {
    // T=10, L=4, V=2 -> stride 2, windows {0,2,4,6}.
    const auto w = augment_windows(10, {4, 2});
    REQUIRE(w.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(w[i].begin == 2 * i);
        CHECK(w[i].length == 4);
    }

    // V=0 with L | T tiles the recording disjointly.
    CHECK(augment_windows(12, {4, 0}).size() == 3);

    // T=10, L=4, V=3 -> stride 1 -> 7 windows.
    CHECK(augment_windows(10, {4, 3}).size() == 7);
}

TEST_CASE("augment: too-short recordings and bad specs are errors") {
    CHECK_THROWS_AS(augment_windows(3, {4, 2}), DataError);
    CHECK_THROWS_AS(augment_windows(10, {4, 4}), ConfigError);
    CHECK_THROWS_AS(augment_windows(10, {0, 0}), ConfigError);
}

TEST_CASE("augment: slices copy the right columns") {
    // 2x6 recording, values 10*r + t.
    std::vector<double> rec;
    for (int r = 0; r < 2; ++r)
        for (int t = 0; t < 6; ++t) rec.push_back(10.0 * r + t);
    const auto chunks = augment(rec, 2, 6, {4, 2}, 7, Modality::kEeg);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].subject_id == 7);
    CHECK(chunks[0].window_index == 0);
    CHECK(chunks[1].data == std::vector<double>{2, 3, 4, 5, 12, 13, 14, 15});
}

TEST_CASE("augment: reconstruction with zero overlap") {
    Rng rng(13);
    std::vector<double> rec(3 * 17);
    for (auto& v : rec) v = rng.normal();
    const ChunkSpec spec{5, 0};
    const auto chunks = augment(rec, 3, 17, spec, 0, Modality::kEeg);
    REQUIRE(chunks.size() == 3);  // remainder of 2 dropped
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            for (std::size_t t = 0; t < 5; ++t) {
                CHECK(chunks[i].data[r * 5 + t] == rec[r * 17 + i * 5 + t]);
            }
        }
    }
}

TEST_CASE("augment: coverage and overlap monotonicity properties") {
    Rng rng(14);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t total = 20 + static_cast<std::size_t>(rng.randint(0, 200));
        const std::size_t length = 2 + static_cast<std::size_t>(
                                           rng.randint(0, static_cast<std::int64_t>(total) - 2));
        std::size_t prev_k = 0;
        for (std::size_t overlap = 0; overlap < length; ++overlap) {
            const auto windows = augment_windows(total, {length, overlap});
            CHECK(windows.size() >= prev_k);  // more overlap never yields fewer chunks
            prev_k = windows.size();

            // Union of half-open windows covers [0, S*(K-1)+L) with no gaps:
            // consecutive windows start within `length` of each other.
            for (std::size_t i = 1; i < windows.size(); ++i) {
                CHECK(windows[i].begin <= windows[i - 1].begin + length);
            }
            const auto& last = windows.back();
            CHECK(last.begin + last.length <= total);
            CHECK(total - (last.begin + last.length) < length - overlap);  // remainder < stride
        }
    }
}

TEST_CASE("pair_chunks: cartesian pairing") {
    const auto pairs = pair_chunks(3, 2);
    REQUIRE(pairs.size() == 6);
    CHECK(pairs[0] == std::make_pair<std::size_t, std::size_t>(0, 0));
    CHECK(pairs[1] == std::make_pair<std::size_t, std::size_t>(0, 1));
    CHECK(pairs[5] == std::make_pair<std::size_t, std::size_t>(2, 1));

    CHECK(pair_chunks(1, 1).size() == 1);
    CHECK_THROWS_AS(pair_chunks(0, 2), DataError);
}

TEST_CASE("pair_chunks: cohort pair count equals the augment arithmetic") {
    Rng rng(15);
    std::size_t expected = 0, actual = 0;
    for (int subject = 0; subject < 10; ++subject) {
        const std::size_t t_e = 100 + static_cast<std::size_t>(rng.randint(0, 100));
        const std::size_t t_m = 40 + static_cast<std::size_t>(rng.randint(0, 40));
        const ChunkSpec se{32, 16}, sm{8, 4};
        const std::size_t ke = (t_e - se.length) / se.stride() + 1;
        const std::size_t km = (t_m - sm.length) / sm.stride() + 1;
        expected += ke * km;
        actual += pair_chunks(augment_windows(t_e, se).size(), augment_windows(t_m, sm).size())
                      .size();
    }
    CHECK(actual == expected);
}
