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
#include <utility>
#include <vector>

namespace traitalign {

enum class Modality { kEeg, kFmri };

/// Overlapping-window parameters. Stride is length - overlap.
struct ChunkSpec {
    std::size_t length = 0;
    std::size_t overlap = 0;

    std::size_t stride() const { return length - overlap; }
    void validate() const;  // 0 <= overlap < length, stride >= 1
};

/// Half-open window [begin, begin+length) on the time axis.
struct ChunkWindow {
    std::size_t index = 0;
    std::size_t begin = 0;
    std::size_t length = 0;
};

/// One materialized modality segment with provenance.
struct Chunk {
    int subject_id = -1;
    Modality modality = Modality::kEeg;
    std::size_t window_index = 0;
    std::size_t rows = 0;  // channels or ROIs
    std::size_t cols = 0;  // window length
    std::vector<double> data;  // row-major rows x cols
};

/// Window arithmetic: K = floor((total - L) / S) + 1, trailing remainder
/// dropped. Throws DataError when the recording is shorter than one window.
std::vector<ChunkWindow> augment_windows(std::size_t total, const ChunkSpec& spec);

/// Slices a row-major (rows x total) recording into K chunks.
std::vector<Chunk> augment(const std::vector<double>& recording, std::size_t rows,
                           std::size_t total, const ChunkSpec& spec, int subject_id,
                           Modality modality);

/// All cross-modal (eeg_index, fmri_index) pairs for one subject, i-major.
std::vector<std::pair<std::size_t, std::size_t>> pair_chunks(std::size_t n_eeg,
                                                             std::size_t n_fmri);

}  // namespace traitalign
