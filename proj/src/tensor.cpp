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

#include "traitalign/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "traitalign/errors.hpp"

namespace traitalign {

namespace {

thread_local bool g_grad_enabled = true;
thread_local std::uint64_t g_op_counter = 0;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

TensorPtr Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data.assign(shape_numel(t->shape), 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw ConfigError("tensor: data length does not match shape");
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

double Tensor::value() const {
    if (!is_scalar()) throw ConfigError("tensor: value() on non-scalar");
    return data[0];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ConfigError("tensor: rows() on non-matrix");
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ConfigError("tensor: cols() on non-matrix");
    return shape[1];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

namespace detail {

void check_finite(const Tensor& t, const char* op_name) {
#ifdef NDEBUG
    // Sampled in release: scalars always, full sweep every 32nd op.
    if (!t.is_scalar() && (++g_op_counter & 31u) != 0) return;
#endif
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by ") + op_name);
        }
    }
}

TensorPtr make_node(std::vector<std::size_t> shape, std::vector<TensorPtr> parents,
                    const char* /*op_name*/) {
    auto t = Tensor::zeros(std::move(shape));
    if (GradMode::enabled()) {
        bool any = false;
        for (const auto& p : parents) any = any || p->requires_grad;
        if (any) {
            t->requires_grad = true;
            t->parents = std::move(parents);
        }
    }
    return t;
}

}  // namespace detail

void backward(const TensorPtr& loss) {
    if (!loss->is_scalar()) throw ConfigError("backward: loss must be scalar");
    if (!std::isfinite(loss->data[0])) throw NumericError("backward: loss is not finite");

    // Reverse topological order via iterative DFS.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (!node->backprop) continue;
        for (double g : node->grad) {
            if (!std::isfinite(g)) throw NumericError("backward: non-finite gradient");
        }
        node->backprop(*node);
    }
}

namespace {

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) throw ConfigError(std::string(op) + ": shape mismatch");
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    auto out = detail::make_node(a->shape, {a, b}, "add");
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] + b->data[i];
    if (out->requires_grad) {
        out->backprop = [](Tensor& self) {
            for (int s = 0; s < 2; ++s) {
                Tensor& p = *self.parents[s];
                if (!p.requires_grad) continue;
                p.ensure_grad();
                for (std::size_t i = 0; i < self.size(); ++i) p.grad[i] += self.grad[i];
            }
        };
    }
    detail::check_finite(*out, "add");
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    auto out = detail::make_node(a->shape, {a, b}, "sub");
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] - b->data[i];
    if (out->requires_grad) {
        out->backprop = [](Tensor& self) {
            Tensor& a = *self.parents[0];
            Tensor& b = *self.parents[1];
            if (a.requires_grad) {
                a.ensure_grad();
                for (std::size_t i = 0; i < self.size(); ++i) a.grad[i] += self.grad[i];
            }
            if (b.requires_grad) {
                b.ensure_grad();
                for (std::size_t i = 0; i < self.size(); ++i) b.grad[i] -= self.grad[i];
            }
        };
    }
    detail::check_finite(*out, "sub");
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    auto out = detail::make_node(a->shape, {a, b}, "mul");
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * b->data[i];
    if (out->requires_grad) {
        out->backprop = [](Tensor& self) {
            Tensor& a = *self.parents[0];
            Tensor& b = *self.parents[1];
            if (a.requires_grad) {
                a.ensure_grad();
                for (std::size_t i = 0; i < self.size(); ++i)
                    a.grad[i] += self.grad[i] * b.data[i];
            }
            if (b.requires_grad) {
                b.ensure_grad();
                for (std::size_t i = 0; i < self.size(); ++i)
                    b.grad[i] += self.grad[i] * a.data[i];
            }
        };
    }
    detail::check_finite(*out, "mul");
    return out;
}

TensorPtr scale(const TensorPtr& a, double s) {
    auto out = detail::make_node(a->shape, {a}, "scale");
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * s;
    if (out->requires_grad) {
        out->backprop = [s](Tensor& self) {
            Tensor& a = *self.parents[0];
            a.ensure_grad();
            for (std::size_t i = 0; i < self.size(); ++i) a.grad[i] += self.grad[i] * s;
        };
    }
    detail::check_finite(*out, "scale");
    return out;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 2 || b->rank() != 2 || a->cols() != b->rows()) {
        throw ConfigError("matmul: incompatible shapes");
    }
    const std::size_t n = a->rows(), k = a->cols(), m = b->cols();
    auto out = detail::make_node({n, m}, {a, b}, "matmul");
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = &a->data[i * k];
        double* orow = &out->data[i * m];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = &b->data[kk * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    if (out->requires_grad) {
        out->backprop = [n, k, m](Tensor& self) {
            Tensor& a = *self.parents[0];
            Tensor& b = *self.parents[1];
            if (a.requires_grad) {
                a.ensure_grad();
                // dA = dOut * B^T
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        double acc = 0.0;
                        const double* grow = &self.grad[i * m];
                        const double* brow = &b.data[kk * m];
                        for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
                        a.grad[i * k + kk] += acc;
                    }
            }
            if (b.requires_grad) {
                b.ensure_grad();
                // dB = A^T * dOut
                for (std::size_t kk = 0; kk < k; ++kk)
                    for (std::size_t i = 0; i < n; ++i) {
                        const double av = a.data[i * k + kk];
                        if (av == 0.0) continue;
                        const double* grow = &self.grad[i * m];
                        double* brow = &b.grad[kk * m];
                        for (std::size_t j = 0; j < m; ++j) brow[j] += av * grow[j];
                    }
            }
        };
    }
    detail::check_finite(*out, "matmul");
    return out;
}

TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 2 || b->rank() != 2 || a->cols() != b->cols()) {
        throw ConfigError("matmul_nt: incompatible shapes");
    }
    const std::size_t n = a->rows(), k = a->cols(), m = b->rows();
    auto out = detail::make_node({n, m}, {a, b}, "matmul_nt");
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = &a->data[i * k];
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = &b->data[j * k];
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            out->data[i * m + j] = acc;
        }
    }
    if (out->requires_grad) {
        out->backprop = [n, k, m](Tensor& self) {
            Tensor& a = *self.parents[0];
            Tensor& b = *self.parents[1];
            if (a.requires_grad) {
                a.ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        const double g = self.grad[i * m + j];
                        if (g == 0.0) continue;
                        const double* brow = &b.data[j * k];
                        double* arow = &a.grad[i * k];
                        for (std::size_t kk = 0; kk < k; ++kk) arow[kk] += g * brow[kk];
                    }
            }
            if (b.requires_grad) {
                b.ensure_grad();
                for (std::size_t j = 0; j < m; ++j)
                    for (std::size_t i = 0; i < n; ++i) {
                        const double g = self.grad[i * m + j];
                        if (g == 0.0) continue;
                        const double* arow = &a.data[i * k];
                        double* brow = &b.grad[j * k];
                        for (std::size_t kk = 0; kk < k; ++kk) brow[kk] += g * arow[kk];
                    }
            }
        };
    }
    detail::check_finite(*out, "matmul_nt");
    return out;
}

TensorPtr sum(const TensorPtr& x) {
    auto out = detail::make_node({1}, {x}, "sum");
    out->data[0] = std::accumulate(x->data.begin(), x->data.end(), 0.0);
    if (out->requires_grad) {
        out->backprop = [](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            const double g = self.grad[0];
            for (double& v : x.grad) v += g;
        };
    }
    detail::check_finite(*out, "sum");
    return out;
}

TensorPtr mean_rows(const TensorPtr& x) {
    const std::size_t n = x->rows(), m = x->cols();
    if (n == 0) throw ConfigError("mean_rows: empty input");
    auto out = detail::make_node({m}, {x}, "mean_rows");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out->data[j] += x->data[i * m + j];
    for (std::size_t j = 0; j < m; ++j) out->data[j] /= static_cast<double>(n);
    if (out->requires_grad) {
        out->backprop = [n, m](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            const double inv = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) x.grad[i * m + j] += self.grad[j] * inv;
        };
    }
    detail::check_finite(*out, "mean_rows");
    return out;
}

TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
    if (rows.empty()) throw ConfigError("stack_rows: no rows");
    const std::size_t m = rows[0]->size();
    for (const auto& r : rows) {
        if (r->rank() != 1 || r->size() != m) throw ConfigError("stack_rows: ragged rows");
    }
    auto out = detail::make_node({rows.size(), m}, rows, "stack_rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i]->data.begin(), rows[i]->data.end(), out->data.begin() + i * m);
    }
    if (out->requires_grad) {
        out->backprop = [m](Tensor& self) {
            for (std::size_t i = 0; i < self.parents.size(); ++i) {
                Tensor& r = *self.parents[i];
                if (!r.requires_grad) continue;
                r.ensure_grad();
                for (std::size_t j = 0; j < m; ++j) r.grad[j] += self.grad[i * m + j];
            }
        };
    }
    detail::check_finite(*out, "stack_rows");
    return out;
}

TensorPtr concat(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 1 || b->rank() != 1) throw ConfigError("concat: vectors only");
    auto out = detail::make_node({a->size() + b->size()}, {a, b}, "concat");
    std::copy(a->data.begin(), a->data.end(), out->data.begin());
    std::copy(b->data.begin(), b->data.end(), out->data.begin() + a->size());
    if (out->requires_grad) {
        const std::size_t na = a->size();
        out->backprop = [na](Tensor& self) {
            Tensor& a = *self.parents[0];
            Tensor& b = *self.parents[1];
            if (a.requires_grad) {
                a.ensure_grad();
                for (std::size_t i = 0; i < na; ++i) a.grad[i] += self.grad[i];
            }
            if (b.requires_grad) {
                b.ensure_grad();
                for (std::size_t i = 0; i < b.size(); ++i) b.grad[i] += self.grad[na + i];
            }
        };
    }
    detail::check_finite(*out, "concat");
    return out;
}

TensorPtr l2_normalize(const TensorPtr& x) {
    if (x->rank() != 1) throw ConfigError("l2_normalize: vectors only");
    double norm2 = 0.0;
    for (double v : x->data) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) throw NumericError("l2_normalize: zero vector");
    auto out = detail::make_node(x->shape, {x}, "l2_normalize");
    for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = x->data[i] / norm;
    if (out->requires_grad) {
        out->backprop = [norm](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            double dot = 0.0;
            for (std::size_t i = 0; i < self.size(); ++i) dot += self.grad[i] * self.data[i];
            for (std::size_t i = 0; i < self.size(); ++i)
                x.grad[i] += (self.grad[i] - self.data[i] * dot) / norm;
        };
    }
    detail::check_finite(*out, "l2_normalize");
    return out;
}

TensorPtr selu(const TensorPtr& x) {
    auto out = detail::make_node(x->shape, {x}, "selu");
    for (std::size_t i = 0; i < x->size(); ++i) {
        const double v = x->data[i];
        out->data[i] = v > 0.0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * std::expm1(v);
    }
    if (out->requires_grad) {
        out->backprop = [](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            for (std::size_t i = 0; i < self.size(); ++i) {
                const double v = x.data[i];
                const double d =
                    v > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(v);
                x.grad[i] += self.grad[i] * d;
            }
        };
    }
    detail::check_finite(*out, "selu");
    return out;
}

TensorPtr leaky_relu(const TensorPtr& x, double slope) {
    auto out = detail::make_node(x->shape, {x}, "leaky_relu");
    for (std::size_t i = 0; i < x->size(); ++i) {
        const double v = x->data[i];
        out->data[i] = v > 0.0 ? v : slope * v;
    }
    if (out->requires_grad) {
        out->backprop = [slope](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            for (std::size_t i = 0; i < self.size(); ++i)
                x.grad[i] += self.grad[i] * (x.data[i] > 0.0 ? 1.0 : slope);
        };
    }
    detail::check_finite(*out, "leaky_relu");
    return out;
}

TensorPtr tanh_act(const TensorPtr& x) {
    auto out = detail::make_node(x->shape, {x}, "tanh");
    for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = std::tanh(x->data[i]);
    if (out->requires_grad) {
        out->backprop = [](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            for (std::size_t i = 0; i < self.size(); ++i) {
                const double t = self.data[i];
                x.grad[i] += self.grad[i] * (1.0 - t * t);
            }
        };
    }
    detail::check_finite(*out, "tanh");
    return out;
}

TensorPtr softmax_row(const TensorPtr& x) {
    if (x->rank() != 2) throw ConfigError("softmax_row: matrix input required");
    const std::size_t n = x->rows(), m = x->cols();
    auto out = detail::make_node(x->shape, {x}, "softmax_row");
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &x->data[i * m];
        double* orow = &out->data[i * m];
        const double mx = *std::max_element(row, row + m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) z += (orow[j] = std::exp(row[j] - mx));
        for (std::size_t j = 0; j < m; ++j) orow[j] /= z;
    }
    if (out->requires_grad) {
        out->backprop = [n, m](Tensor& self) {
            Tensor& x = *self.parents[0];
            x.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double* y = &self.data[i * m];
                const double* dy = &self.grad[i * m];
                double dot = 0.0;
                for (std::size_t j = 0; j < m; ++j) dot += y[j] * dy[j];
                for (std::size_t j = 0; j < m; ++j) x.grad[i * m + j] += y[j] * (dy[j] - dot);
            }
        };
    }
    detail::check_finite(*out, "softmax_row");
    return out;
}

TensorPtr cosine_sim(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 1 || b->rank() != 1 || a->size() != b->size()) {
        throw ConfigError("cosine_sim: vectors of equal length required");
    }
    double dot = 0.0, na2 = 0.0, nb2 = 0.0;
    for (std::size_t i = 0; i < a->size(); ++i) {
        dot += a->data[i] * b->data[i];
        na2 += a->data[i] * a->data[i];
        nb2 += b->data[i] * b->data[i];
    }
    if (na2 == 0.0 || nb2 == 0.0) throw NumericError("cosine_sim: zero-norm vector");
    const double na = std::sqrt(na2), nb = std::sqrt(nb2);
    const double s = dot / (na * nb);
    auto out = detail::make_node({1}, {a, b}, "cosine_sim");
    out->data[0] = s;
    if (out->requires_grad) {
        out->backprop = [na, nb, s](Tensor& self) {
            Tensor& a = *self.parents[0];
            Tensor& b = *self.parents[1];
            const double g = self.grad[0];
            if (a.requires_grad) {
                a.ensure_grad();
                for (std::size_t i = 0; i < a.size(); ++i)
                    a.grad[i] += g * (b.data[i] / (na * nb) - s * a.data[i] / (na * na));
            }
            if (b.requires_grad) {
                b.ensure_grad();
                for (std::size_t i = 0; i < b.size(); ++i)
                    b.grad[i] += g * (a.data[i] / (na * nb) - s * b.data[i] / (nb * nb));
            }
        };
    }
    detail::check_finite(*out, "cosine_sim");
    return out;
}

TensorPtr depthwise_conv_valid(const TensorPtr& x, const TensorPtr& w) {
    if (x->rank() != 2 || w->rank() != 2 || x->cols() != w->cols()) {
        throw ConfigError("depthwise_conv_valid: channel mismatch");
    }
    const std::size_t L = x->rows(), D = x->cols(), K = w->rows();
    if (L < K) throw ConfigError("depthwise_conv_valid: input shorter than kernel");
    const std::size_t Lo = L - K + 1;
    auto out = detail::make_node({Lo, D}, {x, w}, "depthwise_conv_valid");
    for (std::size_t l = 0; l < Lo; ++l) {
        double* orow = &out->data[l * D];
        for (std::size_t k = 0; k < K; ++k) {
            const double* xrow = &x->data[(l + k) * D];
            const double* wrow = &w->data[k * D];
            for (std::size_t d = 0; d < D; ++d) orow[d] += xrow[d] * wrow[d];
        }
    }
    if (out->requires_grad) {
        out->backprop = [Lo, D, K](Tensor& self) {
            Tensor& x = *self.parents[0];
            Tensor& w = *self.parents[1];
            if (x.requires_grad) {
                x.ensure_grad();
                for (std::size_t l = 0; l < Lo; ++l) {
                    const double* grow = &self.grad[l * D];
                    for (std::size_t k = 0; k < K; ++k) {
                        double* xrow = &x.grad[(l + k) * D];
                        const double* wrow = &w.data[k * D];
                        for (std::size_t d = 0; d < D; ++d) xrow[d] += grow[d] * wrow[d];
                    }
                }
            }
            if (w.requires_grad) {
                w.ensure_grad();
                for (std::size_t l = 0; l < Lo; ++l) {
                    const double* grow = &self.grad[l * D];
                    for (std::size_t k = 0; k < K; ++k) {
                        const double* xrow = &x.data[(l + k) * D];
                        double* wrow = &w.grad[k * D];
                        for (std::size_t d = 0; d < D; ++d) wrow[d] += grow[d] * xrow[d];
                    }
                }
            }
        };
    }
    detail::check_finite(*out, "depthwise_conv_valid");
    return out;
}

}  // namespace traitalign
