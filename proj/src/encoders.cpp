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

#include "traitalign/encoders.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <string>

#include "traitalign/errors.hpp"

namespace traitalign {

namespace {

TensorPtr normal_tensor(std::vector<std::size_t> shape, double stddev, Rng& rng) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(0.0, stddev);
    return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

EegEncoderParams EegEncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
    if (cfg.twc_depth < 1 || cfg.kernel < 1) throw ConfigError("eeg encoder: bad depth/kernel");
    EegEncoderParams p;
    const double k_std = 1.0 / std::sqrt(static_cast<double>(cfg.kernel));
    p.tw_filters.push_back(normal_tensor({cfg.kernel, cfg.channels}, k_std, rng));
    p.ew_filter = normal_tensor({cfg.channels, cfg.mix_width},
                                1.0 / std::sqrt(static_cast<double>(cfg.channels)), rng);
    for (std::size_t l = 1; l < cfg.twc_depth; ++l) {
        p.tw_filters.push_back(normal_tensor({cfg.kernel, cfg.mix_width}, k_std, rng));
    }
    p.kan = KanLayer::init(cfg.mix_width, cfg.embed_dim,
                           SplineGrid::make_uniform(cfg.spline_degree, cfg.spline_basis), rng);
    return p;
}

std::vector<TensorPtr> EegEncoderParams::params() const {
    std::vector<TensorPtr> out(tw_filters.begin(), tw_filters.end());
    out.push_back(ew_filter);
    for (const auto& t : kan.params()) out.push_back(t);
    return out;
}

std::size_t EegEncoderParams::min_chunk_length() const {
    std::size_t shrink = 0;
    for (const auto& w : tw_filters) shrink += w->shape[0] - 1;
    return shrink + 1;
}

FmriEncoderParams FmriEncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
    FmriEncoderParams p;
    p.gcn_weight = normal_tensor({cfg.rois, cfg.gcn_features},
                                 1.0 / std::sqrt(static_cast<double>(cfg.rois)), rng);
    p.kan = KanLayer::init(cfg.gcn_features, cfg.embed_dim,
                           SplineGrid::make_uniform(cfg.spline_degree, cfg.spline_basis), rng);
    p.leaky_slope = cfg.leaky_slope;
    return p;
}

std::vector<TensorPtr> FmriEncoderParams::params() const {
    std::vector<TensorPtr> out{gcn_weight};
    for (const auto& t : kan.params()) out.push_back(t);
    return out;
}

BehaviorEncoderParams BehaviorEncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
    BehaviorEncoderParams p;
    p.kan = KanLayer::init(cfg.scales, cfg.embed_dim,
                           SplineGrid::make_uniform(cfg.spline_degree, cfg.spline_basis), rng);
    return p;
}

std::vector<TensorPtr> BehaviorEncoderParams::params() const { return kan.params(); }

TensorPtr time_wise_conv(const TensorPtr& x, const TensorPtr& w) {
    return selu(depthwise_conv_valid(x, w));
}

TensorPtr electrode_wise_conv(const TensorPtr& x, const TensorPtr& w) {
    return selu(matmul(x, w));
}

TensorPtr temporal_pool(const TensorPtr& x) { return mean_rows(x); }

TensorPtr roi_pool(const TensorPtr& x) { return mean_rows(x); }

ConnectivityGraph connectivity(const std::vector<double>& series, std::size_t rois,
                               std::size_t scans) {
    if (rois == 0 || scans < 2 || series.size() != rois * scans) {
        throw DataError("connectivity: need a rois x scans matrix with scans >= 2");
    }
    std::vector<double> mean(rois, 0.0), sd(rois, 0.0);
    std::vector<bool> constant(rois, false);
    for (std::size_t r = 0; r < rois; ++r) {
        const double* row = &series[r * scans];
        double m = 0.0;
        for (std::size_t t = 0; t < scans; ++t) m += row[t];
        m /= static_cast<double>(scans);
        double var = 0.0;
        for (std::size_t t = 0; t < scans; ++t) var += (row[t] - m) * (row[t] - m);
        mean[r] = m;
        sd[r] = std::sqrt(var);
        if (sd[r] == 0.0) {
            constant[r] = true;
            std::cerr << "[traitalign] warning: constant ROI series " << r
                      << ", correlations set to 0\n";
        }
    }

    ConnectivityGraph g;
    g.rois = rois;
    g.adjacency.assign(rois * rois, 0.0);
    for (std::size_t i = 0; i < rois; ++i) {
        g.adjacency[i * rois + i] = 1.0;
        for (std::size_t j = i + 1; j < rois; ++j) {
            double corr = 0.0;
            if (!constant[i] && !constant[j]) {
                const double* a = &series[i * scans];
                const double* b = &series[j * scans];
                double cov = 0.0;
                for (std::size_t t = 0; t < scans; ++t)
                    cov += (a[t] - mean[i]) * (b[t] - mean[j]);
                corr = cov / (sd[i] * sd[j]);
                corr = std::clamp(corr, -1.0, 1.0);
            }
            g.adjacency[i * rois + j] = corr;
            g.adjacency[j * rois + i] = corr;
        }
    }

    // Normalized operator with self-loops.
    std::vector<double> inv_sqrt_deg(rois);
    for (std::size_t i = 0; i < rois; ++i) {
        double deg = 1.0;  // self-loop
        for (std::size_t j = 0; j < rois; ++j) deg += g.adjacency[i * rois + j];
        if (deg <= 0.0) throw NumericError("connectivity: nonpositive node degree");
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    g.propagation.assign(rois * rois, 0.0);
    for (std::size_t i = 0; i < rois; ++i) {
        for (std::size_t j = 0; j < rois; ++j) {
            const double a_tilde =
                g.adjacency[i * rois + j] + (i == j ? 1.0 : 0.0);
            g.propagation[i * rois + j] = inv_sqrt_deg[i] * a_tilde * inv_sqrt_deg[j];
        }
    }
    return g;
}

TensorPtr gcn_forward(const ConnectivityGraph& graph, const TensorPtr& node_features,
                      const TensorPtr& weight, double slope) {
    const std::size_t r = graph.rois;
    if (node_features->rank() != 2 || node_features->rows() != r) {
        throw ConfigError("gcn_forward: node feature rows must match ROI count");
    }
    auto prop = Tensor::from({r, r}, graph.propagation);
    auto mixed = matmul(prop, node_features);
    return leaky_relu(matmul(mixed, weight), slope);
}

namespace {

// (C, L) chunk stored row-major per channel -> (L, C) input layout.
TensorPtr transpose_chunk(const Chunk& chunk) {
    std::vector<double> t(chunk.rows * chunk.cols);
    for (std::size_t r = 0; r < chunk.rows; ++r)
        for (std::size_t c = 0; c < chunk.cols; ++c)
            t[c * chunk.rows + r] = chunk.data[r * chunk.cols + c];
    return Tensor::from({chunk.cols, chunk.rows}, std::move(t));
}

}  // namespace

TensorPtr encode_eeg(const Chunk& chunk, const EegEncoderParams& params) {
    if (chunk.cols < params.min_chunk_length()) {
        throw DataError("encode_eeg: chunk shorter than the conv receptive field");
    }
    if (chunk.rows != params.tw_filters[0]->shape[1]) {
        throw DataError("encode_eeg: channel count mismatch");
    }
    auto h = time_wise_conv(transpose_chunk(chunk), params.tw_filters[0]);
    h = electrode_wise_conv(h, params.ew_filter);
    for (std::size_t l = 1; l < params.tw_filters.size(); ++l) {
        h = time_wise_conv(h, params.tw_filters[l]);
    }
    auto pooled = temporal_pool(h);
    return l2_normalize(kan_forward(tanh_act(pooled), params.kan));
}

TensorPtr encode_fmri(const Chunk& chunk, const FmriEncoderParams& params) {
    if (chunk.rows != params.gcn_weight->shape[0]) {
        throw DataError("encode_fmri: ROI count mismatch");
    }
    auto graph = connectivity(chunk.data, chunk.rows, chunk.cols);
    auto features = Tensor::from({graph.rois, graph.rois}, graph.adjacency);
    auto g = gcn_forward(graph, features, params.gcn_weight, params.leaky_slope);
    auto pooled = roi_pool(g);
    return l2_normalize(kan_forward(tanh_act(pooled), params.kan));
}

TensorPtr encode_behavior(const std::vector<double>& standardized,
                          const BehaviorEncoderParams& params) {
    auto h = Tensor::from({standardized.size()}, standardized);
    return l2_normalize(kan_forward(tanh_act(h), params.kan));
}

EncoderSet EncoderSet::init(const EncoderConfig& cfg, Rng& rng) {
    EncoderSet s;
    s.config = cfg;
    s.eeg = EegEncoderParams::init(cfg, rng);
    s.fmri = FmriEncoderParams::init(cfg, rng);
    s.behavior = BehaviorEncoderParams::init(cfg, rng);
    return s;
}

std::vector<TensorPtr> EncoderSet::params() const {
    std::vector<TensorPtr> out;
    for (const auto& t : eeg.params()) out.push_back(t);
    for (const auto& t : fmri.params()) out.push_back(t);
    for (const auto& t : behavior.params()) out.push_back(t);
    return out;
}

std::vector<NamedTensor> EncoderSet::named_tensors() const {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < eeg.tw_filters.size(); ++i) {
        out.push_back({"eeg/tw" + std::to_string(i), eeg.tw_filters[i]});
    }
    out.push_back({"eeg/ew", eeg.ew_filter});
    out.push_back({"eeg/kan/w_base", eeg.kan.w_base});
    out.push_back({"eeg/kan/w_spline", eeg.kan.w_spline});
    out.push_back({"eeg/kan/coeffs", eeg.kan.coeffs});
    out.push_back({"fmri/gcn_w", fmri.gcn_weight});
    out.push_back({"fmri/kan/w_base", fmri.kan.w_base});
    out.push_back({"fmri/kan/w_spline", fmri.kan.w_spline});
    out.push_back({"fmri/kan/coeffs", fmri.kan.coeffs});
    out.push_back({"beh/kan/w_base", behavior.kan.w_base});
    out.push_back({"beh/kan/w_spline", behavior.kan.w_spline});
    out.push_back({"beh/kan/coeffs", behavior.kan.coeffs});
    return out;
}

EncoderSet EncoderSet::from_named_tensors(const EncoderConfig& cfg,
                                          const std::vector<NamedTensor>& tensors) {
    std::map<std::string, TensorPtr> by_name;
    for (const auto& nt : tensors) by_name[nt.name] = nt.tensor;
    auto take = [&](const std::string& name) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw DataError("checkpoint: missing tensor " + name);
        it->second->requires_grad = true;
        return it->second;
    };

    Rng rng(0);  // shapes come from the checkpoint; init values are replaced
    EncoderSet s = EncoderSet::init(cfg, rng);
    for (std::size_t i = 0; i < s.eeg.tw_filters.size(); ++i) {
        auto t = take("eeg/tw" + std::to_string(i));
        if (t->shape != s.eeg.tw_filters[i]->shape) {
            throw DataError("checkpoint: eeg conv shape mismatch");
        }
        s.eeg.tw_filters[i] = t;
    }
    auto assign = [&](TensorPtr& dst, const std::string& name) {
        auto t = take(name);
        if (t->shape != dst->shape) throw DataError("checkpoint: shape mismatch for " + name);
        dst = t;
    };
    assign(s.eeg.ew_filter, "eeg/ew");
    assign(s.eeg.kan.w_base, "eeg/kan/w_base");
    assign(s.eeg.kan.w_spline, "eeg/kan/w_spline");
    assign(s.eeg.kan.coeffs, "eeg/kan/coeffs");
    assign(s.fmri.gcn_weight, "fmri/gcn_w");
    assign(s.fmri.kan.w_base, "fmri/kan/w_base");
    assign(s.fmri.kan.w_spline, "fmri/kan/w_spline");
    assign(s.fmri.kan.coeffs, "fmri/kan/coeffs");
    assign(s.behavior.kan.w_base, "beh/kan/w_base");
    assign(s.behavior.kan.w_spline, "beh/kan/w_spline");
    assign(s.behavior.kan.coeffs, "beh/kan/coeffs");
    return s;
}

}  // namespace traitalign
