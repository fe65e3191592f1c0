#pragma once

// Stateless forward/backward kernels for the layer set of the liveness CNN.
// Everything is templated on the scalar so the same code runs in float for
// training and in double for finite-difference checks.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "liveness/rng.hpp"
#include "liveness/tensor.hpp"

namespace liveness {

namespace detail {

inline void require_rank(const Shape& shape, std::size_t rank, const char* what) {
    if (shape.size() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(shape));
    }
}

/// Unfold one [C,H,W] image into a [C*9, H*W] column matrix for a 3x3,
/// stride-1, zero-pad-1 convolution.
template <typename S>
void im2col3x3(const S* image, Index channels, Index height, Index width,
               Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& col) {
    const Index hw = height * width;
    col.resize(channels * 9, hw);
    for (Index c = 0; c < channels; ++c) {
        const S* plane = image + c * hw;
        for (Index dy = 0; dy < 3; ++dy) {
            for (Index dx = 0; dx < 3; ++dx) {
                S* row = col.data() + (c * 9 + dy * 3 + dx) * hw;
                for (Index y = 0; y < height; ++y) {
                    const Index sy = y + dy - 1;
                    S* dst = row + y * width;
                    if (sy < 0 || sy >= height) {
                        std::fill(dst, dst + width, S(0));
                        continue;
                    }
                    const S* src = plane + sy * width;
                    for (Index x = 0; x < width; ++x) {
                        const Index sx = x + dx - 1;
                        dst[x] = (sx < 0 || sx >= width) ? S(0) : src[sx];
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col3x3: scatter-add columns back into a zeroed image.
template <typename S>
void col2im3x3(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& col,
               Index channels, Index height, Index width, S* image) {
    const Index hw = height * width;
    for (Index c = 0; c < channels; ++c) {
        S* plane = image + c * hw;
        for (Index dy = 0; dy < 3; ++dy) {
            for (Index dx = 0; dx < 3; ++dx) {
                const S* row = col.data() + (c * 9 + dy * 3 + dx) * hw;
                for (Index y = 0; y < height; ++y) {
                    const Index sy = y + dy - 1;
                    if (sy < 0 || sy >= height) continue;
                    const S* src = row + y * width;
                    S* dst = plane + sy * width;
                    for (Index x = 0; x < width; ++x) {
                        const Index sx = x + dx - 1;
                        if (sx >= 0 && sx < width) dst[sx] += src[x];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, zero padding 1.

template <typename S>
struct ConvGrads {
    Tensor<S> input;
    Tensor<S> weight;
    Tensor<S> bias;
};

/// input [N,C,H,W], weight [K,C,3,3], bias [K] -> [N,K,H,W].
template <typename S>
Tensor<S> conv3x3(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias) {
    detail::require_rank(input.shape(), 4, "conv3x3 input");
    detail::require_rank(weight.shape(), 4, "conv3x3 weight");
    const Index n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const Index k = weight.dim(0);
    require_shape(weight, {k, c, 3, 3}, "conv3x3 weight");
    require_shape(bias, {k}, "conv3x3 bias");

    Tensor<S> out({n, k, h, w});
    const auto wmat = weight.matrix(k, c * 9);
    const auto b = bias.vec();
    typename Tensor<S>::RowMatrix col;
    for (Index i = 0; i < n; ++i) {
        detail::im2col3x3(input.data() + i * c * h * w, c, h, w, col);
        auto o = out.matrix(k, h * w, i * k * h * w);
        o.noalias() = wmat * col;
        o.colwise() += b;
    }
    return out;
}

template <typename S>
ConvGrads<S> conv3x3_backward(const Tensor<S>& input, const Tensor<S>& weight,
                              const Tensor<S>& grad_out) {
    const Index n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const Index k = weight.dim(0);
    require_shape(grad_out, {n, k, h, w}, "conv3x3 grad_out");

    ConvGrads<S> g{Tensor<S>(input.shape()), Tensor<S>(weight.shape()), Tensor<S>({k})};
    auto gw = g.weight.matrix(k, c * 9);
    const auto wmat = weight.matrix(k, c * 9);
    typename Tensor<S>::RowMatrix col;
    typename Tensor<S>::RowMatrix gcol;
    for (Index i = 0; i < n; ++i) {
        const auto go = grad_out.matrix(k, h * w, i * k * h * w);
        detail::im2col3x3(input.data() + i * c * h * w, c, h, w, col);
        gw.noalias() += go * col.transpose();
        g.bias.vec() += go.rowwise().sum();
        gcol.noalias() = wmat.transpose() * go;
        detail::col2im3x3(gcol, c, h, w, g.input.data() + i * c * h * w);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Fully connected: input [N,D], weight [M,D], bias [M] -> [N,M].

template <typename S>
struct LinearGrads {
    Tensor<S> input;
    Tensor<S> weight;
    Tensor<S> bias;
};

template <typename S>
Tensor<S> linear(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias) {
    detail::require_rank(input.shape(), 2, "linear input");
    const Index n = input.dim(0), d = input.dim(1);
    const Index m = weight.dim(0);
    require_shape(weight, {m, d}, "linear weight");
    require_shape(bias, {m}, "linear bias");
    Tensor<S> out({n, m});
    auto o = out.matrix(n, m);
    o.noalias() = input.matrix(n, d) * weight.matrix(m, d).transpose();
    o.rowwise() += bias.vec().transpose();
    return out;
}

template <typename S>
LinearGrads<S> linear_backward(const Tensor<S>& input, const Tensor<S>& weight,
                               const Tensor<S>& grad_out) {
    const Index n = input.dim(0), d = input.dim(1), m = weight.dim(0);
    require_shape(grad_out, {n, m}, "linear grad_out");
    LinearGrads<S> g{Tensor<S>(input.shape()), Tensor<S>(weight.shape()), Tensor<S>({m})};
    const auto go = grad_out.matrix(n, m);
    g.input.matrix(n, d).noalias() = go * weight.matrix(m, d);
    g.weight.matrix(m, d).noalias() = go.transpose() * input.matrix(n, d);
    g.bias.vec() = go.colwise().sum().transpose();
    return g;
}

// ---------------------------------------------------------------------------
// ReLU. The derivative at exactly zero is taken as zero.

template <typename S>
Tensor<S> relu(const Tensor<S>& input) {
    Tensor<S> out = input;
    out.vec() = input.vec().cwiseMax(S(0));
    return out;
}

template <typename S>
Tensor<S> relu_backward(const Tensor<S>& input, const Tensor<S>& grad_out) {
    require_shape(grad_out, input.shape(), "relu grad_out");
    Tensor<S> g = grad_out;
    g.vec() = (input.vec().array() > S(0)).select(grad_out.vec(), S(0));
    return g;
}

// ---------------------------------------------------------------------------
// 2x2 max pool, stride 2. Ties go to the first element in row-major window order.

template <typename S>
struct PoolResult {
    Tensor<S> output;
    std::vector<Index> argmax;  // flat input offset per output element
};

template <typename S>
PoolResult<S> maxpool2x2(const Tensor<S>& input) {
    detail::require_rank(input.shape(), 4, "maxpool2x2 input");
    const Index n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2x2: spatial dims must be even, got " + shape_string(input.shape()));
    }
    const Index oh = h / 2, ow = w / 2;
    PoolResult<S> r{Tensor<S>({n, c, oh, ow}), std::vector<Index>(static_cast<std::size_t>(n * c * oh * ow))};
    const S* src = input.data();
    S* dst = r.output.data();
    Index o = 0;
    for (Index plane = 0; plane < n * c; ++plane) {
        const Index base = plane * h * w;
        for (Index y = 0; y < oh; ++y) {
            for (Index x = 0; x < ow; ++x, ++o) {
                const Index top = base + (2 * y) * w + 2 * x;
                const Index cand[4] = {top, top + 1, top + w, top + w + 1};
                Index best = cand[0];
                for (int j = 1; j < 4; ++j) {
                    if (src[cand[j]] > src[best]) best = cand[j];
                }
                dst[o] = src[best];
                r.argmax[static_cast<std::size_t>(o)] = best;
            }
        }
    }
    return r;
}

template <typename S>
Tensor<S> maxpool2x2_backward(const Tensor<S>& grad_out, const std::vector<Index>& argmax,
                              const Shape& input_shape) {
    if (static_cast<Index>(argmax.size()) != grad_out.size()) {
        throw ShapeError("maxpool2x2 backward: argmax/grad_out size mismatch");
    }
    Tensor<S> g(input_shape);
    for (Index i = 0; i < grad_out.size(); ++i) {
        g[argmax[static_cast<std::size_t>(i)]] += grad_out[i];
    }
    return g;
}

// ---------------------------------------------------------------------------
// Batch normalization over channels. Rank-4 input [N,C,H,W] normalizes per
// channel across (N,H,W); rank-2 input [N,D] normalizes per feature across N.

namespace detail {

inline void bn_geometry(const Shape& shape, Index& n, Index& c, Index& inner) {
    if (shape.size() == 4) {
        n = shape[0];
        c = shape[1];
        inner = shape[2] * shape[3];
    } else if (shape.size() == 2) {
        n = shape[0];
        c = shape[1];
        inner = 1;
    } else {
        throw ShapeError("batchnorm: expected rank 2 or 4 input, got " + shape_string(shape));
    }
}

}  // namespace detail

template <typename S>
struct BatchNormCache {
    Tensor<S> normalized;         // x_hat
    Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std;
};

template <typename S>
struct BatchNormResult {
    Tensor<S> output;
    BatchNormCache<S> cache;
    Eigen::Matrix<S, Eigen::Dynamic, 1> batch_mean;
    Eigen::Matrix<S, Eigen::Dynamic, 1> batch_var;  // biased
};

/// Train-mode normalization with batch statistics.
template <typename S>
BatchNormResult<S> batchnorm_train(const Tensor<S>& input, const Tensor<S>& gamma,
                                   const Tensor<S>& beta, S epsilon) {
    Index n, c, inner;
    detail::bn_geometry(input.shape(), n, c, inner);
    require_shape(gamma, {c}, "batchnorm gamma");
    require_shape(beta, {c}, "batchnorm beta");
    const Index count = n * inner;
    if (count < 2) {
        throw ShapeError("batchnorm: train mode needs at least 2 values per channel, got " +
                         shape_string(input.shape()));
    }
    BatchNormResult<S> r{Tensor<S>(input.shape()), {Tensor<S>(input.shape()), {}}, {}, {}};
    r.batch_mean.setZero(c);
    r.batch_var.setZero(c);
    r.cache.inv_std.resize(c);
    const S* x = input.data();
    for (Index i = 0; i < n; ++i) {
        for (Index ch = 0; ch < c; ++ch) {
            const Index off = (i * c + ch) * inner;
            for (Index j = 0; j < inner; ++j) r.batch_mean[ch] += x[off + j];
        }
    }
    r.batch_mean /= static_cast<S>(count);
    for (Index i = 0; i < n; ++i) {
        for (Index ch = 0; ch < c; ++ch) {
            const Index off = (i * c + ch) * inner;
            for (Index j = 0; j < inner; ++j) {
                const S d = x[off + j] - r.batch_mean[ch];
                r.batch_var[ch] += d * d;
            }
        }
    }
    r.batch_var /= static_cast<S>(count);
    for (Index ch = 0; ch < c; ++ch) r.cache.inv_std[ch] = S(1) / std::sqrt(r.batch_var[ch] + epsilon);

    S* xh = r.cache.normalized.data();
    S* y = r.output.data();
    for (Index i = 0; i < n; ++i) {
        for (Index ch = 0; ch < c; ++ch) {
            const Index off = (i * c + ch) * inner;
            const S m = r.batch_mean[ch], is = r.cache.inv_std[ch], g = gamma[ch], b = beta[ch];
            for (Index j = 0; j < inner; ++j) {
                xh[off + j] = (x[off + j] - m) * is;
                y[off + j] = g * xh[off + j] + b;
            }
        }
    }
    return r;
}

/// Infer-mode normalization with fixed statistics; a pure function.
template <typename S>
Tensor<S> batchnorm_infer(const Tensor<S>& input, const Tensor<S>& gamma, const Tensor<S>& beta,
                          const Tensor<S>& running_mean, const Tensor<S>& running_var, S epsilon) {
    Index n, c, inner;
    detail::bn_geometry(input.shape(), n, c, inner);
    require_shape(gamma, {c}, "batchnorm gamma");
    require_shape(running_mean, {c}, "batchnorm running_mean");
    require_shape(running_var, {c}, "batchnorm running_var");
    Tensor<S> out(input.shape());
    const S* x = input.data();
    S* y = out.data();
    for (Index i = 0; i < n; ++i) {
        for (Index ch = 0; ch < c; ++ch) {
            const Index off = (i * c + ch) * inner;
            const S scale = gamma[ch] / std::sqrt(running_var[ch] + epsilon);
            const S shift = beta[ch] - running_mean[ch] * scale;
            for (Index j = 0; j < inner; ++j) y[off + j] = x[off + j] * scale + shift;
        }
    }
    return out;
}

template <typename S>
struct BatchNormGrads {
    Tensor<S> input;
    Tensor<S> gamma;
    Tensor<S> beta;
};

/// Exact gradient of batchnorm_train, including the batch-statistic terms.
template <typename S>
BatchNormGrads<S> batchnorm_backward(const BatchNormCache<S>& cache, const Tensor<S>& gamma,
                                     const Tensor<S>& grad_out) {
    require_shape(grad_out, cache.normalized.shape(), "batchnorm grad_out");
    Index n, c, inner;
    detail::bn_geometry(grad_out.shape(), n, c, inner);
    const S count = static_cast<S>(n * inner);
    BatchNormGrads<S> g{Tensor<S>(grad_out.shape()), Tensor<S>({c}), Tensor<S>({c})};
    const S* go = grad_out.data();
    const S* xh = cache.normalized.data();
    for (Index i = 0; i < n; ++i) {
        for (Index ch = 0; ch < c; ++ch) {
            const Index off = (i * c + ch) * inner;
            for (Index j = 0; j < inner; ++j) {
                g.beta[ch] += go[off + j];
                g.gamma[ch] += go[off + j] * xh[off + j];
            }
        }
    }
    // dx = gamma * inv_std / m * (m * dy - sum(dy) - x_hat * sum(dy * x_hat))
    S* gi = g.input.data();
    for (Index i = 0; i < n; ++i) {
        for (Index ch = 0; ch < c; ++ch) {
            const Index off = (i * c + ch) * inner;
            const S k = gamma[ch] * cache.inv_std[ch] / count;
            for (Index j = 0; j < inner; ++j) {
                gi[off + j] = k * (count * go[off + j] - g.beta[ch] - xh[off + j] * g.gamma[ch]);
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Inverted dropout.

/// Per-element multiplier: 0 with probability `rate`, else 1/(1-rate).
template <typename S>
Tensor<S> dropout_mask(const Shape& shape, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    Tensor<S> mask(shape, S(1));
    if (rate == 0.0) return mask;
    const S keep_scale = S(1.0 / (1.0 - rate));
    for (Index i = 0; i < mask.size(); ++i) {
        mask[i] = rng.bernoulli(rate) ? S(0) : keep_scale;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Softmax over the last axis of [N,K].

template <typename S>
Tensor<S> softmax(const Tensor<S>& logits) {
    detail::require_rank(logits.shape(), 2, "softmax input");
    const Index n = logits.dim(0), k = logits.dim(1);
    Tensor<S> p(logits.shape());
    const auto z = logits.matrix(n, k);
    auto out = p.matrix(n, k);
    for (Index i = 0; i < n; ++i) {
        const S mx = z.row(i).maxCoeff();
        out.row(i) = (z.row(i).array() - mx).exp().matrix();
        out.row(i) /= out.row(i).sum();
    }
    return p;
}

template <typename S>
Tensor<S> softmax_backward(const Tensor<S>& probs, const Tensor<S>& grad_out) {
    require_shape(grad_out, probs.shape(), "softmax grad_out");
    const Index n = probs.dim(0), k = probs.dim(1);
    Tensor<S> g(probs.shape());
    const auto p = probs.matrix(n, k);
    const auto go = grad_out.matrix(n, k);
    auto gi = g.matrix(n, k);
    for (Index i = 0; i < n; ++i) {
        const S dot = p.row(i).dot(go.row(i));
        gi.row(i) = (p.row(i).array() * (go.row(i).array() - dot)).matrix();
    }
    return g;
}

template <typename S>
struct LossResult {
    S loss;
    Tensor<S> grad_logits;
    Tensor<S> probs;
};

/// Mean negative log-likelihood of softmax(logits); gradient is (p - onehot)/N.
template <typename S>
LossResult<S> softmax_cross_entropy(const Tensor<S>& logits, const std::vector<int>& labels) {
    detail::require_rank(logits.shape(), 2, "softmax_cross_entropy logits");
    const Index n = logits.dim(0), k = logits.dim(1);
    if (static_cast<Index>(labels.size()) != n) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
    }
    LossResult<S> r{S(0), Tensor<S>(logits.shape()), softmax(logits)};
    const auto z = logits.matrix(n, k);
    auto g = r.grad_logits.matrix(n, k);
    g = r.probs.matrix(n, k);
    S total = S(0);
    for (Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= k) throw ShapeError("softmax_cross_entropy: label out of range");
        // log-sum-exp form stays finite for extreme logits
        const S mx = z.row(i).maxCoeff();
        const S lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        total += lse - z(i, y);
        g(i, y) -= S(1);
    }
    g /= static_cast<S>(n);
    r.loss = total / static_cast<S>(n);
    return r;
}

}  // namespace liveness
