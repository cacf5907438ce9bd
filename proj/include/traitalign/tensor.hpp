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
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace traitalign {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major f64 tensor participating in a dynamic reverse-mode tape.
/// Nodes record their parents and a closure that scatters the incoming
/// gradient; backward() replays the recorded graph in reverse topological
/// order. Data is immutable once an op has consumed it; grad buffers are the
/// only mutable state. A graph and its tensors belong to one worker.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // same length as data once ensure_grad() ran
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backprop;  // accumulates into parents' grads

    static TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static TensorPtr from(std::vector<std::size_t> shape, std::vector<double> values,
                          bool requires_grad = false);
    static TensorPtr scalar(double v, bool requires_grad = false);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return data.size() == 1; }
    double value() const;  // scalar tensors only

    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    void ensure_grad();
    void zero_grad();
};

/// Thread-local switch; with recording off, ops produce constant tensors
/// (no parents, no closures). Used for inference passes.
class GradMode {
public:
    static bool enabled();
    static void set(bool on);
};

struct NoGradGuard {
    NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
    ~NoGradGuard() { GradMode::set(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

/// Reverse pass from a scalar loss. Grads accumulate across calls until
/// zero_grad(); throws NumericError on non-finite values in flight.
void backward(const TensorPtr& loss);

// Elementwise / linear algebra ops. All record onto the tape when grad
// mode is on and any input requires grad.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double s);
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);     // (n,k)x(k,m)
TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b);  // (n,k)x(m,k)^T
TensorPtr sum(const TensorPtr& x);
TensorPtr mean_rows(const TensorPtr& x);  // (n,m) -> (m), mean over axis 0
TensorPtr stack_rows(const std::vector<TensorPtr>& rows);
TensorPtr concat(const TensorPtr& a, const TensorPtr& b);  // vectors
TensorPtr l2_normalize(const TensorPtr& x);                // vector

// Activations and similarity kernels.
TensorPtr selu(const TensorPtr& x);
TensorPtr leaky_relu(const TensorPtr& x, double slope);
TensorPtr tanh_act(const TensorPtr& x);
TensorPtr softmax_row(const TensorPtr& x);                       // (n,m)
TensorPtr cosine_sim(const TensorPtr& a, const TensorPtr& b);    // vectors -> scalar

/// Valid (no padding) per-channel convolution: x (L,D), w (K,D) -> (L-K+1,D).
TensorPtr depthwise_conv_valid(const TensorPtr& x, const TensorPtr& w);

// SELU constants from the self-normalizing-networks formulation.
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

namespace detail {
// Finite check shared by op implementations in other modules: full sweep in
// debug builds, sampled in release. Throws NumericError.
void check_finite(const Tensor& t, const char* op_name);
TensorPtr make_node(std::vector<std::size_t> shape, std::vector<TensorPtr> parents,
                    const char* op_name);
}  // namespace detail

}  // namespace traitalign
