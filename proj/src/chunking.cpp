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

#include "traitalign/chunking.hpp"

#include "traitalign/errors.hpp"

namespace traitalign {

void ChunkSpec::validate() const {
    if (length == 0) throw ConfigError("chunking: length must be positive");
    if (overlap >= length) throw ConfigError("chunking: overlap must be < length");
}

std::vector<ChunkWindow> augment_windows(std::size_t total, const ChunkSpec& spec) {
    spec.validate();
    if (total < spec.length) {
        throw DataError("chunking: recording shorter than one chunk");
    }
    const std::size_t s = spec.stride();
    const std::size_t k = (total - spec.length) / s + 1;
    std::vector<ChunkWindow> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({i, i * s, spec.length});
    }
    return out;
}

std::vector<Chunk> augment(const std::vector<double>& recording, std::size_t rows,
                           std::size_t total, const ChunkSpec& spec, int subject_id,
                           Modality modality) {
    if (rows == 0 || recording.size() != rows * total) {
        throw DataError("chunking: recording size does not match rows x total");
    }
    auto windows = augment_windows(total, spec);
    std::vector<Chunk> chunks;
    chunks.reserve(windows.size());
    for (const auto& w : windows) {
        Chunk c;
        c.subject_id = subject_id;
        c.modality = modality;
        c.window_index = w.index;
        c.rows = rows;
        c.cols = w.length;
        c.data.resize(rows * w.length);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* src = &recording[r * total + w.begin];
            std::copy(src, src + w.length, &c.data[r * w.length]);
        }
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_chunks(std::size_t n_eeg,
                                                             std::size_t n_fmri) {
    if (n_eeg == 0 || n_fmri == 0) throw DataError("pair_chunks: empty chunk list");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n_eeg * n_fmri);
    for (std::size_t i = 0; i < n_eeg; ++i)
        for (std::size_t j = 0; j < n_fmri; ++j) pairs.emplace_back(i, j);
    return pairs;
}

}  // namespace traitalign
