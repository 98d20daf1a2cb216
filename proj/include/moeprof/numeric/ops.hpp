#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "moeprof/numeric/autodiff.hpp"

namespace moeprof::numeric {

// Differentiable operations on rank-2 Vars. Each op computes its forward
// value eagerly and registers a closure that accumulates into the parents'
// gradient buffers.

namespace detail {

template <typename T>
inline Node<T>& parent(Node<T>& n, std::size_t i) {
    return *n.parents[i];
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
    for (T v : t.data()) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
    }
}

}  // namespace detail

template <typename T>
Var<T> constant(Tensor<T> t) {
    return Var<T>(std::move(t));
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    const auto& A = a.value();
    const auto& B = b.value();
    if (A.cols() != B.rows()) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(A.shape()) + " x " +
                             shape_str(B.shape()));
    }
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor<T> C = Tensor<T>::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = &C(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = A(i, p);
            if (aip == T{0}) continue;
            const T* brow = &B(p, 0);
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return Var<T>::make_result(std::move(C), {a, b}, [m, k, n](Node<T>& self) {
        const auto& dC = self.grad;
        auto& na = detail::parent(self, 0);
        auto& nb = detail::parent(self, 1);
        if (na.requires_grad) {
            auto& dA = na.grad_buffer();
            const auto& B = nb.value;
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    T acc{0};
                    const T* brow = &B(p, 0);
                    const T* drow = &dC(i, 0);
                    for (std::size_t j = 0; j < n; ++j) acc += drow[j] * brow[j];
                    dA(i, p) += acc;
                }
            }
        }
        if (nb.requires_grad) {
            auto& dB = nb.grad_buffer();
            const auto& A = na.value;
            for (std::size_t i = 0; i < m; ++i) {
                const T* drow = &dC(i, 0);
                for (std::size_t p = 0; p < k; ++p) {
                    const T aip = A(i, p);
                    if (aip == T{0}) continue;
                    T* dbrow = &dB(p, 0);
                    for (std::size_t j = 0; j < n; ++j) dbrow[j] += aip * drow[j];
                }
            }
        }
    });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape(a.shape(), b.shape(), "add");
    Tensor<T> out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
    return Var<T>::make_result(std::move(out), {a, b}, [](Node<T>& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            auto& np = detail::parent(self, p);
            if (!np.requires_grad) continue;
            auto& g = np.grad_buffer();
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
        }
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape(a.shape(), b.shape(), "sub");
    Tensor<T> out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
    return Var<T>::make_result(std::move(out), {a, b}, [](Node<T>& self) {
        auto& na = detail::parent(self, 0);
        auto& nb = detail::parent(self, 1);
        if (na.requires_grad) {
            auto& g = na.grad_buffer();
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
        }
        if (nb.requires_grad) {
            auto& g = nb.grad_buffer();
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
        }
    });
}

/// Elementwise product.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape(a.shape(), b.shape(), "mul");
    Tensor<T> out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
    return Var<T>::make_result(std::move(out), {a, b}, [](Node<T>& self) {
        auto& na = detail::parent(self, 0);
        auto& nb = detail::parent(self, 1);
        if (na.requires_grad) {
            auto& g = na.grad_buffer();
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * nb.value[i];
        }
        if (nb.requires_grad) {
            auto& g = nb.grad_buffer();
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * na.value[i];
        }
    });
}

/// x[m x n] + bias[1 x n], bias broadcast over rows.
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
    const std::size_t m = x.rows(), n = x.cols();
    if (bias.rows() != 1 || bias.cols() != n) {
        throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " incompatible with " +
                             shape_str(x.shape()));
    }
    Tensor<T> out = x.value();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) += bias.value()[j];
    return Var<T>::make_result(std::move(out), {x, bias}, [m, n](Node<T>& self) {
        auto& nx = detail::parent(self, 0);
        auto& nb = detail::parent(self, 1);
        if (nx.requires_grad) {
            auto& g = nx.grad_buffer();
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
        }
        if (nb.requires_grad) {
            auto& g = nb.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) g[j] += self.grad(i, j);
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& a, T c) {
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v *= c;
    return Var<T>::make_result(std::move(out), {a}, [c](Node<T>& self) {
        auto& g = detail::parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += c * self.grad[i];
    });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T c) {
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v += c;
    return Var<T>::make_result(std::move(out), {a}, [](Node<T>& self) {
        auto& g = detail::parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    });
}

/// s[1 x 1] * a, the scalar broadcast over every element of a.
template <typename T>
Var<T> mul_scalar(const Var<T>& s, const Var<T>& a) {
    if (s.value().numel() != 1) throw DimensionError("mul_scalar: expected 1x1 scale, got " + shape_str(s.shape()));
    const T sv = s.value()[0];
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v *= sv;
    return Var<T>::make_result(std::move(out), {s, a}, [](Node<T>& self) {
        auto& ns = detail::parent(self, 0);
        auto& na = detail::parent(self, 1);
        if (ns.requires_grad) {
            T acc{0};
            for (std::size_t i = 0; i < self.grad.numel(); ++i) acc += self.grad[i] * na.value[i];
            ns.grad_buffer()[0] += acc;
        }
        if (na.requires_grad) {
            auto& g = na.grad_buffer();
            const T sv = ns.value[0];
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += sv * self.grad[i];
        }
    });
}

namespace detail {

template <typename T, typename Fwd, typename Deriv>
Var<T> unary(const Var<T>& a, Fwd fwd, Deriv deriv) {
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v = fwd(v);
    return Var<T>::make_result(std::move(out), {a}, [deriv](Node<T>& self) {
        auto& np = detail::parent(self, 0);
        auto& g = np.grad_buffer();
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * deriv(np.value[i], self.value[i]);
    });
}

}  // namespace detail

template <typename T>
Var<T> exp(const Var<T>& a) {
    return detail::unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> square(const Var<T>& a) {
    return detail::unary(a, [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

/// Logistic function kept strictly inside (0, 1) even where the exact
/// value rounds to 0 or 1.
template <typename T>
Var<T> sigmoid(const Var<T>& a) {
    return detail::unary(
        a,
        [](T x) {
            constexpr T lo = std::numeric_limits<T>::min();
            constexpr T hi = T{1} - std::numeric_limits<T>::epsilon() / T{2};
            T y;
            if (x >= T{0}) {
                y = T{1} / (T{1} + std::exp(-x));
            } else {
                const T e = std::exp(x);
                y = e / (T{1} + e);
            }
            return std::clamp(y, lo, hi);
        },
        [](T, T y) { return y * (T{1} - y); });
}

/// Exact (erf) GELU.
template <typename T>
Var<T> gelu(const Var<T>& a) {
    return detail::unary(
        a, [](T x) { return T(0.5) * x * (T{1} + std::erf(x / std::numbers::sqrt2_v<T>)); },
        [](T x, T) {
            const T cdf = T(0.5) * (T{1} + std::erf(x / std::numbers::sqrt2_v<T>));
            const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T{2} * std::numbers::pi_v<T>);
            return cdf + x * pdf;
        });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
    T acc{0};
    for (T v : a.value().data()) acc += v;
    return Var<T>::make_result(Tensor<T>::scalar(acc), {a}, [](Node<T>& self) {
        auto& g = detail::parent(self, 0).grad_buffer();
        const T d = self.grad[0];
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += d;
    });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
    return scale(sum(a), T{1} / static_cast<T>(a.value().numel()));
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor<T> out = Tensor<T>::matrix(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = a.value()(i, j);
    return Var<T>::make_result(std::move(out), {a}, [m, n](Node<T>& self) {
        auto& g = detail::parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g(i, j) += self.grad(j, i);
    });
}

/// [a | b] along columns; row counts must agree.
template <typename T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b) {
    const std::size_t m = a.rows();
    if (b.rows() != m) {
        throw DimensionError("concat_cols: row mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const std::size_t na = a.cols(), nb = b.cols();
    Tensor<T> out = Tensor<T>::matrix(m, na + nb);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < na; ++j) out(i, j) = a.value()(i, j);
        for (std::size_t j = 0; j < nb; ++j) out(i, na + j) = b.value()(i, j);
    }
    return Var<T>::make_result(std::move(out), {a, b}, [m, na, nb](Node<T>& self) {
        auto& pa = detail::parent(self, 0);
        auto& pb = detail::parent(self, 1);
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < na; ++j) g(i, j) += self.grad(i, j);
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < nb; ++j) g(i, j) += self.grad(i, na + j);
        }
    });
}

/// Row-wise softmax with max subtraction. Throws NumericError on NaN/inf input.
template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
    detail::check_finite(x.value(), "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor<T> out = x.value();
    for (std::size_t i = 0; i < m; ++i) {
        auto r = out.row_span(i);
        const T mx = *std::max_element(r.begin(), r.end());
        T z{0};
        for (auto& v : r) {
            v = std::exp(v - mx);
            z += v;
        }
        for (auto& v : r) v /= z;
    }
    return Var<T>::make_result(std::move(out), {x}, [m, n](Node<T>& self) {
        auto& g = detail::parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < m; ++i) {
            T dot{0};
            for (std::size_t j = 0; j < n; ++j) dot += self.grad(i, j) * self.value(i, j);
            for (std::size_t j = 0; j < n; ++j) g(i, j) += self.value(i, j) * (self.grad(i, j) - dot);
        }
    });
}

/// Per-row normalization (population variance, eps inside the sqrt) then
/// affine with gain/bias of shape 1 x d.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5)) {
    const std::size_t m = x.rows(), d = x.cols();
    if (d < 2) throw DimensionError("layer_norm: feature dimension must be >= 2");
    if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
        throw DimensionError("layer_norm: gain/bias must be 1x" + std::to_string(d));
    }
    Tensor<T> xhat = Tensor<T>::matrix(m, d);
    std::vector<T> inv_std(m);
    Tensor<T> out = Tensor<T>::matrix(m, d);
    for (std::size_t i = 0; i < m; ++i) {
        T mu{0};
        for (std::size_t j = 0; j < d; ++j) mu += x.value()(i, j);
        mu /= static_cast<T>(d);
        T var{0};
        for (std::size_t j = 0; j < d; ++j) {
            const T c = x.value()(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<T>(d);
        inv_std[i] = T{1} / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            xhat(i, j) = (x.value()(i, j) - mu) * inv_std[i];
            out(i, j) = xhat(i, j) * gain.value()[j] + bias.value()[j];
        }
    }
    return Var<T>::make_result(
        std::move(out), {x, gain, bias},
        [m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
            auto& nx = detail::parent(self, 0);
            auto& ng = detail::parent(self, 1);
            auto& nb = detail::parent(self, 2);
            if (ng.requires_grad) {
                auto& gg = ng.grad_buffer();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j) gg[j] += self.grad(i, j) * xhat(i, j);
            }
            if (nb.requires_grad) {
                auto& gb = nb.grad_buffer();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j) gb[j] += self.grad(i, j);
            }
            if (nx.requires_grad) {
                auto& gx = nx.grad_buffer();
                const T dn = static_cast<T>(d);
                for (std::size_t i = 0; i < m; ++i) {
                    T sum_dy{0}, sum_dy_xhat{0};
                    for (std::size_t j = 0; j < d; ++j) {
                        const T dy = self.grad(i, j) * ng.value[j];
                        sum_dy += dy;
                        sum_dy_xhat += dy * xhat(i, j);
                    }
                    for (std::size_t j = 0; j < d; ++j) {
                        const T dy = self.grad(i, j) * ng.value[j];
                        gx(i, j) += inv_std[i] * (dy - sum_dy / dn - xhat(i, j) * sum_dy_xhat / dn);
                    }
                }
            }
        });
}

/// Concatenation of the per-column mean and population standard deviation
/// over rows: [T x D] -> [1 x 2D]. A zero std contributes no gradient.
template <typename T>
Var<T> statistical_pooling(const Var<T>& frames) {
    const std::size_t t = frames.rows(), d = frames.cols();
    const T tn = static_cast<T>(t);
    std::vector<T> mu(d, T{0}), sd(d, T{0});
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) mu[j] += frames.value()(i, j);
    for (auto& m : mu) m /= tn;
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const T c = frames.value()(i, j) - mu[j];
            sd[j] += c * c;
        }
    for (auto& s : sd) s = std::sqrt(s / tn);
    Tensor<T> out = Tensor<T>::matrix(1, 2 * d);
    for (std::size_t j = 0; j < d; ++j) {
        out[j] = mu[j];
        out[d + j] = sd[j];
    }
    return Var<T>::make_result(std::move(out), {frames}, [t, d, tn, mu, sd](Node<T>& self) {
        auto& np = detail::parent(self, 0);
        auto& g = np.grad_buffer();
        for (std::size_t j = 0; j < d; ++j) {
            const T gm = self.grad[j] / tn;
            const T gs = sd[j] > T{0} ? self.grad[d + j] / (tn * sd[j]) : T{0};
            for (std::size_t i = 0; i < t; ++i) g(i, j) += gm + gs * (np.value(i, j) - mu[j]);
        }
    });
}

/// Strided 1-D convolution over a [L x Cin] sequence (time-major).
/// weight is [(kernel * Cin) x Cout], indexed by (k * Cin + c); bias [1 x Cout].
/// Output length is floor((L - kernel) / stride) + 1.
template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t kernel, std::size_t stride) {
    const std::size_t len = x.rows(), cin = x.cols();
    if (kernel == 0 || stride == 0) throw DimensionError("conv1d: kernel and stride must be positive");
    if (weight.rows() != kernel * cin) {
        throw DimensionError("conv1d: weight " + shape_str(weight.shape()) + " incompatible with kernel " +
                             std::to_string(kernel) + " and input " + shape_str(x.shape()));
    }
    const std::size_t cout = weight.cols();
    if (bias.rows() != 1 || bias.cols() != cout) throw DimensionError("conv1d: bias shape mismatch");
    if (len < kernel) {
        throw LengthError("conv1d: input length " + std::to_string(len) + " shorter than kernel " +
                          std::to_string(kernel));
    }
    const std::size_t out_len = (len - kernel) / stride + 1;
    const std::size_t span = kernel * cin;
    Tensor<T> out = Tensor<T>::matrix(out_len, cout);
    const auto& X = x.value();
    const auto& W = weight.value();
    for (std::size_t t = 0; t < out_len; ++t) {
        T* orow = &out(t, 0);
        for (std::size_t j = 0; j < cout; ++j) orow[j] = bias.value()[j];
        // Input window rows [t*stride, t*stride+kernel) are contiguous in memory.
        const T* win = &X(t * stride, 0);
        for (std::size_t r = 0; r < span; ++r) {
            const T xv = win[r];
            if (xv == T{0}) continue;
            const T* wrow = &W(r, 0);
            for (std::size_t j = 0; j < cout; ++j) orow[j] += xv * wrow[j];
        }
    }
    return Var<T>::make_result(
        std::move(out), {x, weight, bias}, [out_len, cout, span, stride](Node<T>& self) {
            auto& nx = detail::parent(self, 0);
            auto& nw = detail::parent(self, 1);
            auto& nb = detail::parent(self, 2);
            const auto& X = nx.value;
            const auto& W = nw.value;
            if (nb.requires_grad) {
                auto& gb = nb.grad_buffer();
                for (std::size_t t = 0; t < out_len; ++t)
                    for (std::size_t j = 0; j < cout; ++j) gb[j] += self.grad(t, j);
            }
            if (nw.requires_grad) {
                auto& gw = nw.grad_buffer();
                for (std::size_t t = 0; t < out_len; ++t) {
                    const T* drow = &self.grad(t, 0);
                    const T* win = &X(t * stride, 0);
                    for (std::size_t r = 0; r < span; ++r) {
                        const T xv = win[r];
                        if (xv == T{0}) continue;
                        T* gwrow = &gw(r, 0);
                        for (std::size_t j = 0; j < cout; ++j) gwrow[j] += xv * drow[j];
                    }
                }
            }
            if (nx.requires_grad) {
                auto& gx = nx.grad_buffer();
                for (std::size_t t = 0; t < out_len; ++t) {
                    const T* drow = &self.grad(t, 0);
                    T* gwin = &gx(t * stride, 0);
                    for (std::size_t r = 0; r < span; ++r) {
                        const T* wrow = &W(r, 0);
                        T acc{0};
                        for (std::size_t j = 0; j < cout; ++j) acc += wrow[j] * drow[j];
                        gwin[r] += acc;
                    }
                }
            }
        });
}

/// Inverted dropout: zero with probability p and scale survivors by 1/(1-p)
/// in training; identity otherwise.
template <typename T, typename Rng>
Var<T> dropout(const Var<T>& x, T p, bool training, Rng& rng) {
    if (!training || p <= T{0}) return x;
    if (p >= T{1}) throw ContractError("dropout: p must be < 1");
    std::bernoulli_distribution keep(1.0 - static_cast<double>(p));
    Tensor<T> mask(x.shape(), T{0});
    const T s = T{1} / (T{1} - p);
    for (auto& m : mask.storage()) m = keep(rng) ? s : T{0};
    return mul(x, Var<T>(std::move(mask)));
}

/// Binary cross-entropy of a probability against a (possibly fractional)
/// target, probability clamped to [eps, 1-eps]. Returns 1 x 1.
template <typename T>
Var<T> binary_cross_entropy(const Var<T>& prob, T target, T eps = T(1e-7)) {
    if (prob.value().numel() != 1) throw DimensionError("binary_cross_entropy: expected scalar probability");
    const T p = prob.value()[0];
    const T pc = std::clamp(p, eps, T{1} - eps);
    const T loss = -(target * std::log(pc) + (T{1} - target) * std::log(T{1} - pc));
    const bool clamped = pc != p;
    return Var<T>::make_result(Tensor<T>::scalar(loss), {prob}, [pc, target, clamped](Node<T>& self) {
        if (clamped) return;
        auto& g = detail::parent(self, 0).grad_buffer();
        g[0] += self.grad[0] * (-(target / pc) + (T{1} - target) / (T{1} - pc));
    });
}

/// Convex mixture (1 - g) * a + g * b with g a 1 x 1 Var. Each output
/// coordinate is clamped into [min(a,b), max(a,b)] so rounding can never
/// leave the interpolation interval.
template <typename T>
Var<T> convex_mix(const Var<T>& a, const Var<T>& b, const Var<T>& g) {
    detail::require_same_shape(a.shape(), b.shape(), "convex_mix");
    if (g.value().numel() != 1) throw DimensionError("convex_mix: gate must be 1x1");
    const T gv = g.value()[0];
    Tensor<T> out = a.value();
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const T av = a.value()[i], bv = b.value()[i];
        const T v = (T{1} - gv) * av + gv * bv;
        out[i] = std::clamp(v, std::min(av, bv), std::max(av, bv));
    }
    return Var<T>::make_result(std::move(out), {a, b, g}, [](Node<T>& self) {
        auto& na = detail::parent(self, 0);
        auto& nb = detail::parent(self, 1);
        auto& ng = detail::parent(self, 2);
        const T gv = ng.value[0];
        if (na.requires_grad) {
            auto& ga = na.grad_buffer();
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += (T{1} - gv) * self.grad[i];
        }
        if (nb.requires_grad) {
            auto& gb = nb.grad_buffer();
            for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += gv * self.grad[i];
        }
        if (ng.requires_grad) {
            T acc{0};
            for (std::size_t i = 0; i < self.grad.numel(); ++i) acc += self.grad[i] * (nb.value[i] - na.value[i]);
            ng.grad_buffer()[0] += acc;
        }
    });
}

}  // namespace moeprof::numeric
