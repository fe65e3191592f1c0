#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "liveness/ops.hpp"

namespace liveness {

enum class LayerKind { Conv3x3, BatchNorm, ReLU, MaxPool2x2, Dropout, Linear, Flatten, Softmax };

/// A trainable tensor and the gradient written by the last backward pass.
template <typename S>
struct Param {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;
};

/// Non-trainable state that still has to be serialized (BatchNorm running stats).
template <typename S>
struct Buffer {
    std::string name;
    Tensor<S> value;
};

// Each layer offers the same three entry points:
//   forward(x, rng)  train mode, caches what backward needs
//   infer(x) const   infer mode, pure, safe for concurrent readers
//   backward(g)      gradient wrt the input, parameter grads stored in place

template <typename S>
class Conv3x3Layer {
public:
    static constexpr LayerKind kind = LayerKind::Conv3x3;

    Conv3x3Layer(std::string name, Index in_channels, Index out_channels)
        : name_(std::move(name)),
          weight_{name_ + ".weight", Tensor<S>({out_channels, in_channels, 3, 3}),
                  Tensor<S>({out_channels, in_channels, 3, 3})},
          bias_{name_ + ".bias", Tensor<S>({out_channels}), Tensor<S>({out_channels})} {}

    const std::string& name() const { return name_; }
    Index in_channels() const { return weight_.value.dim(1); }
    Index out_channels() const { return weight_.value.dim(0); }

    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        Tensor<S> y = infer(x);
        input_ = x;
        return y;
    }
    Tensor<S> infer(const Tensor<S>& x) const {
        if (x.rank() != 4 || x.dim(1) != in_channels()) {
            throw ShapeError(name_ + ": expected [N," + std::to_string(in_channels()) +
                             ",H,W] input, got " + shape_string(x.shape()));
        }
        return conv3x3(x, weight_.value, bias_.value);
    }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!input_) throw StateError(name_ + ": backward called before forward");
        auto g = conv3x3_backward(*input_, weight_.value, grad_out);
        weight_.grad = std::move(g.weight);
        bias_.grad = std::move(g.bias);
        input_.reset();
        return std::move(g.input);
    }
    Shape output_shape(const Shape& in) const { return {in[0], out_channels(), in[2], in[3]}; }

    std::vector<Param<S>*> params() { return {&weight_, &bias_}; }
    std::vector<const Param<S>*> params() const { return {&weight_, &bias_}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    Param<S> weight_;
    Param<S> bias_;
    std::optional<Tensor<S>> input_;
};

template <typename S>
class BatchNormLayer {
public:
    static constexpr LayerKind kind = LayerKind::BatchNorm;

    BatchNormLayer(std::string name, Index channels, double epsilon = 1e-5, double momentum = 0.9)
        : name_(std::move(name)),
          gamma_{name_ + ".gamma", Tensor<S>({channels}, S(1)), Tensor<S>({channels})},
          beta_{name_ + ".beta", Tensor<S>({channels}), Tensor<S>({channels})},
          running_mean_{name_ + ".running_mean", Tensor<S>({channels})},
          running_var_{name_ + ".running_var", Tensor<S>({channels}, S(1))},
          epsilon_(static_cast<S>(epsilon)),
          momentum_(static_cast<S>(momentum)) {}

    const std::string& name() const { return name_; }
    Index channels() const { return gamma_.value.dim(0); }
    S epsilon() const { return epsilon_; }
    S momentum() const { return momentum_; }

    /// Normalizes with batch statistics and folds them into the running
    /// estimates: running = momentum * running + (1 - momentum) * batch.
    /// The running variance uses the unbiased batch estimate.
    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        check_input(x);
        auto r = batchnorm_train(x, gamma_.value, beta_.value, epsilon_);
        const S count = static_cast<S>(x.size() / channels());
        const S unbias = count / (count - S(1));
        running_mean_.value.vec() =
            momentum_ * running_mean_.value.vec() + (S(1) - momentum_) * r.batch_mean;
        running_var_.value.vec() =
            momentum_ * running_var_.value.vec() + (S(1) - momentum_) * unbias * r.batch_var;
        cache_ = std::move(r.cache);
        return std::move(r.output);
    }
    Tensor<S> infer(const Tensor<S>& x) const {
        check_input(x);
        return batchnorm_infer(x, gamma_.value, beta_.value, running_mean_.value,
                               running_var_.value, epsilon_);
    }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!cache_) throw StateError(name_ + ": backward called before forward");
        auto g = batchnorm_backward(*cache_, gamma_.value, grad_out);
        gamma_.grad = std::move(g.gamma);
        beta_.grad = std::move(g.beta);
        cache_.reset();
        return std::move(g.input);
    }
    Shape output_shape(const Shape& in) const { return in; }

    std::vector<Param<S>*> params() { return {&gamma_, &beta_}; }
    std::vector<const Param<S>*> params() const { return {&gamma_, &beta_}; }
    std::vector<Buffer<S>*> buffers() { return {&running_mean_, &running_var_}; }
    std::vector<const Buffer<S>*> buffers() const { return {&running_mean_, &running_var_}; }

private:
    void check_input(const Tensor<S>& x) const {
        if ((x.rank() != 2 && x.rank() != 4) || x.dim(1) != channels()) {
            throw ShapeError(name_ + ": expected " + std::to_string(channels()) +
                             " channels, got " + shape_string(x.shape()));
        }
    }

    std::string name_;
    Param<S> gamma_;
    Param<S> beta_;
    Buffer<S> running_mean_;
    Buffer<S> running_var_;
    S epsilon_;
    S momentum_;
    std::optional<BatchNormCache<S>> cache_;
};

template <typename S>
class ReluLayer {
public:
    static constexpr LayerKind kind = LayerKind::ReLU;

    explicit ReluLayer(std::string name) : name_(std::move(name)) {}
    const std::string& name() const { return name_; }

    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        input_ = x;
        return relu(x);
    }
    Tensor<S> infer(const Tensor<S>& x) const { return relu(x); }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!input_) throw StateError(name_ + ": backward called before forward");
        auto g = relu_backward(*input_, grad_out);
        input_.reset();
        return g;
    }
    Shape output_shape(const Shape& in) const { return in; }
    std::vector<Param<S>*> params() { return {}; }
    std::vector<const Param<S>*> params() const { return {}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    std::optional<Tensor<S>> input_;
};

template <typename S>
class MaxPoolLayer {
public:
    static constexpr LayerKind kind = LayerKind::MaxPool2x2;

    explicit MaxPoolLayer(std::string name) : name_(std::move(name)) {}
    const std::string& name() const { return name_; }

    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        auto r = maxpool2x2(x);
        input_shape_ = x.shape();
        argmax_ = std::move(r.argmax);
        return std::move(r.output);
    }
    Tensor<S> infer(const Tensor<S>& x) const { return maxpool2x2(x).output; }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!argmax_) throw StateError(name_ + ": backward called before forward");
        auto g = maxpool2x2_backward(grad_out, *argmax_, input_shape_);
        argmax_.reset();
        return g;
    }
    Shape output_shape(const Shape& in) const {
        if (in.size() != 4 || in[2] % 2 != 0 || in[3] % 2 != 0) {
            throw ShapeError(name_ + ": odd or missing spatial dims in " + shape_string(in));
        }
        return {in[0], in[1], in[2] / 2, in[3] / 2};
    }
    std::vector<Param<S>*> params() { return {}; }
    std::vector<const Param<S>*> params() const { return {}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    Shape input_shape_;
    std::optional<std::vector<Index>> argmax_;
};

template <typename S>
class DropoutLayer {
public:
    static constexpr LayerKind kind = LayerKind::Dropout;

    DropoutLayer(std::string name, double rate) : name_(std::move(name)), rate_(rate) {
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw ConfigError(name_ + ": dropout rate must be in [0, 1)");
        }
    }
    const std::string& name() const { return name_; }
    double rate() const { return rate_; }

    Tensor<S> forward(const Tensor<S>& x, Rng& rng) {
        mask_ = dropout_mask<S>(x.shape(), rate_, rng);
        Tensor<S> y = x;
        y.vec().array() *= mask_->vec().array();
        return y;
    }
    Tensor<S> infer(const Tensor<S>& x) const { return x; }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!mask_) throw StateError(name_ + ": backward called before forward");
        require_shape(grad_out, mask_->shape(), "dropout grad_out");
        Tensor<S> g = grad_out;
        g.vec().array() *= mask_->vec().array();
        mask_.reset();
        return g;
    }
    Shape output_shape(const Shape& in) const { return in; }
    std::vector<Param<S>*> params() { return {}; }
    std::vector<const Param<S>*> params() const { return {}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    double rate_;
    std::optional<Tensor<S>> mask_;
};

template <typename S>
class LinearLayer {
public:
    static constexpr LayerKind kind = LayerKind::Linear;

    LinearLayer(std::string name, Index in_features, Index out_features)
        : name_(std::move(name)),
          weight_{name_ + ".weight", Tensor<S>({out_features, in_features}),
                  Tensor<S>({out_features, in_features})},
          bias_{name_ + ".bias", Tensor<S>({out_features}), Tensor<S>({out_features})} {}

    const std::string& name() const { return name_; }
    Index in_features() const { return weight_.value.dim(1); }
    Index out_features() const { return weight_.value.dim(0); }

    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        Tensor<S> y = infer(x);
        input_ = x;
        return y;
    }
    Tensor<S> infer(const Tensor<S>& x) const {
        if (x.rank() != 2 || x.dim(1) != in_features()) {
            throw ShapeError(name_ + ": expected [N," + std::to_string(in_features()) +
                             "] input, got " + shape_string(x.shape()));
        }
        return linear(x, weight_.value, bias_.value);
    }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!input_) throw StateError(name_ + ": backward called before forward");
        auto g = linear_backward(*input_, weight_.value, grad_out);
        weight_.grad = std::move(g.weight);
        bias_.grad = std::move(g.bias);
        input_.reset();
        return std::move(g.input);
    }
    Shape output_shape(const Shape& in) const { return {in[0], out_features()}; }
    std::vector<Param<S>*> params() { return {&weight_, &bias_}; }
    std::vector<const Param<S>*> params() const { return {&weight_, &bias_}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    Param<S> weight_;
    Param<S> bias_;
    std::optional<Tensor<S>> input_;
};

/// [N, ...] -> [N, prod(...)]
template <typename S>
class FlattenLayer {
public:
    static constexpr LayerKind kind = LayerKind::Flatten;

    explicit FlattenLayer(std::string name) : name_(std::move(name)) {}
    const std::string& name() const { return name_; }

    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        input_shape_ = x.shape();
        return infer(x);
    }
    Tensor<S> infer(const Tensor<S>& x) const { return x.reshaped(output_shape(x.shape())); }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!input_shape_) throw StateError(name_ + ": backward called before forward");
        auto g = grad_out.reshaped(*input_shape_);
        input_shape_.reset();
        return g;
    }
    Shape output_shape(const Shape& in) const {
        return {in[0], shape_size(in) / in[0]};
    }
    std::vector<Param<S>*> params() { return {}; }
    std::vector<const Param<S>*> params() const { return {}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    std::optional<Shape> input_shape_;
};

template <typename S>
class SoftmaxLayer {
public:
    static constexpr LayerKind kind = LayerKind::Softmax;

    explicit SoftmaxLayer(std::string name) : name_(std::move(name)) {}
    const std::string& name() const { return name_; }

    Tensor<S> forward(const Tensor<S>& x, Rng&) {
        probs_ = softmax(x);
        return *probs_;
    }
    Tensor<S> infer(const Tensor<S>& x) const { return softmax(x); }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!probs_) throw StateError(name_ + ": backward called before forward");
        auto g = softmax_backward(*probs_, grad_out);
        probs_.reset();
        return g;
    }
    Shape output_shape(const Shape& in) const { return in; }
    std::vector<Param<S>*> params() { return {}; }
    std::vector<const Param<S>*> params() const { return {}; }
    std::vector<Buffer<S>*> buffers() { return {}; }
    std::vector<const Buffer<S>*> buffers() const { return {}; }

private:
    std::string name_;
    std::optional<Tensor<S>> probs_;
};

template <typename S>
using AnyLayer = std::variant<Conv3x3Layer<S>, BatchNormLayer<S>, ReluLayer<S>, MaxPoolLayer<S>,
                              DropoutLayer<S>, LinearLayer<S>, FlattenLayer<S>, SoftmaxLayer<S>>;

template <typename S>
LayerKind kind_of(const AnyLayer<S>& layer) {
    return std::visit([](const auto& l) { return std::decay_t<decltype(l)>::kind; }, layer);
}

template <typename S>
const std::string& name_of(const AnyLayer<S>& layer) {
    return std::visit([](const auto& l) -> const std::string& { return l.name(); }, layer);
}

inline std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv3x3: return "Conv3x3";
        case LayerKind::BatchNorm: return "BatchNorm";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::MaxPool2x2: return "MaxPool2x2";
        case LayerKind::Dropout: return "Dropout";
        case LayerKind::Linear: return "Linear";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Softmax: return "Softmax";
    }
    return "?";
}

}  // namespace liveness
