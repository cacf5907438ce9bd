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

#include <vector>

#include "traitalign/chunking.hpp"
#include "traitalign/checkpoint.hpp"
#include "traitalign/kan.hpp"
#include "traitalign/rng.hpp"
#include "traitalign/tensor.hpp"

namespace traitalign {

/// Architecture knobs shared by the three modality encoders. All encoders
/// emit L2-normalized embeddings of width embed_dim.
struct EncoderConfig {
    std::size_t channels = 6;      // EEG electrodes
    std::size_t rois = 16;         // fMRI graph nodes
    std::size_t scales = 5;        // behavior vector width
    std::size_t embed_dim = 32;    // D
    std::size_t mix_width = 16;    // O, electrode-mix output channels
    std::size_t twc_depth = 3;     // time-wise conv layers in total
    std::size_t kernel = 7;        // K
    std::size_t gcn_features = 16;  // F
    std::size_t spline_basis = 8;  // M
    int spline_degree = 3;
    double leaky_slope = 0.01;
};

struct EegEncoderParams {
    std::vector<TensorPtr> tw_filters;  // [0]: (K, C); rest: (K, O)
    TensorPtr ew_filter;                // (C, O)
    KanLayer kan;                       // O -> D

    static EegEncoderParams init(const EncoderConfig& cfg, Rng& rng);
    std::vector<TensorPtr> params() const;
    /// Total receptive field of the stacked valid convolutions.
    std::size_t min_chunk_length() const;
};

struct FmriEncoderParams {
    TensorPtr gcn_weight;  // (R, F)
    KanLayer kan;          // F -> D
    double leaky_slope = 0.01;

    static FmriEncoderParams init(const EncoderConfig& cfg, Rng& rng);
    std::vector<TensorPtr> params() const;
};

struct BehaviorEncoderParams {
    KanLayer kan;  // Q -> D

    static BehaviorEncoderParams init(const EncoderConfig& cfg, Rng& rng);
    std::vector<TensorPtr> params() const;
};

/// Functional connectivity graph: Pearson adjacency plus the
/// symmetric-normalized propagation operator with self-loops.
struct ConnectivityGraph {
    std::size_t rois = 0;
    std::vector<double> adjacency;  // R x R, symmetric, diag 1
    std::vector<double> propagation;  // D^-1/2 (A+I) D^-1/2
};

// Individual pipeline stages, exposed for direct testing.
TensorPtr time_wise_conv(const TensorPtr& x, const TensorPtr& w);       // selu(valid depthwise)
TensorPtr electrode_wise_conv(const TensorPtr& x, const TensorPtr& w);  // selu(x * w)
TensorPtr temporal_pool(const TensorPtr& x);                            // mean over timesteps
TensorPtr roi_pool(const TensorPtr& x);                                 // mean over ROIs

/// Pearson correlation between ROI rows. Constant rows yield 0 off-diagonal
/// (with a warning) so the graph stays well defined.
ConnectivityGraph connectivity(const std::vector<double>& series, std::size_t rois,
                               std::size_t scans);

/// leaky_relu(P X W) with P the precomputed normalized operator.
TensorPtr gcn_forward(const ConnectivityGraph& graph, const TensorPtr& node_features,
                      const TensorPtr& weight, double slope = 0.01);

// Full encoders: chunk/vector in, L2-normalized embedding out.
TensorPtr encode_eeg(const Chunk& chunk, const EegEncoderParams& params);
TensorPtr encode_fmri(const Chunk& chunk, const FmriEncoderParams& params);
TensorPtr encode_behavior(const std::vector<double>& standardized,
                          const BehaviorEncoderParams& params);

/// The three encoders trained jointly, plus checkpoint (de)serialization.
struct EncoderSet {
    EncoderConfig config;
    EegEncoderParams eeg;
    FmriEncoderParams fmri;
    BehaviorEncoderParams behavior;

    static EncoderSet init(const EncoderConfig& cfg, Rng& rng);
    std::vector<TensorPtr> params() const;
    std::vector<NamedTensor> named_tensors() const;
    static EncoderSet from_named_tensors(const EncoderConfig& cfg,
                                         const std::vector<NamedTensor>& tensors);
};

}  // namespace traitalign
