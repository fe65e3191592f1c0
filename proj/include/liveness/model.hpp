#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "liveness/labels.hpp"
#include "liveness/sequential.hpp"

namespace liveness {

/// Shape and regularization settings of the liveness CNN. The defaults give
/// 171,570 trainable parameters.
struct ArchConfig {
    Index input_size = 32;  // square input, H == W
    Index input_channels = 3;
    Index block1_convs = 4;
    Index block1_channels = 16;
    Index block2_convs = 4;
    Index block2_channels = 32;
    Index hidden_width = 64;
    Index classes = 2;
    double conv_dropout = 0.25;
    double head_dropout = 0.5;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.9;

    /// Throws ConfigError for non-positive sizes, bad dropout rates or an
    /// input that would hit a pool with an odd spatial size.
    void validate() const;

    Index latent_width() const {
        const Index s = input_size / 4;
        return s * s * block2_channels;
    }

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

inline void ArchConfig::validate() const {
    if (input_size <= 0 || input_channels <= 0 || block1_convs <= 0 || block1_channels <= 0 ||
        block2_convs <= 0 || block2_channels <= 0 || hidden_width <= 0 || classes < 2) {
        throw ConfigError("arch: all sizes must be positive and classes >= 2");
    }
    if (input_size % 2 != 0 || (input_size / 2) % 2 != 0) {
        throw ConfigError("arch: input size " + std::to_string(input_size) +
                          " gives an odd spatial size before a 2x2 pool");
    }
    for (double r : {conv_dropout, head_dropout}) {
        if (!(r >= 0.0 && r < 1.0)) throw ConfigError("arch: dropout rate must be in [0, 1)");
    }
    if (!(bn_epsilon > 0.0) || !(bn_momentum >= 0.0 && bn_momentum < 1.0)) {
        throw ConfigError("arch: invalid batchnorm epsilon/momentum");
    }
}

struct Prediction {
    Label label;
    double score;  // P(bona fide)
};

inline Label decide(double score, double threshold) {
    return decide_bona_fide(score, threshold) ? Label::BonaFide : Label::Attack;
}

/// The liveness network: two conv blocks producing the latent vector, then a
/// fully connected head.
///
///   features: [Conv(c1) BN ReLU] x n1, Pool, Drop,
///             [Conv(c2) BN ReLU] x n2, Pool, Drop, Flatten
///   head:     Linear(latent -> hidden), ReLU, BN, Drop, Linear(hidden -> classes)
///   output:   Softmax
template <typename S>
class BasicLivenessNet {
public:
    BasicLivenessNet() : BasicLivenessNet(ArchConfig{}) {}

    /// Layers with zero-valued weights; see build_model for initialization.
    explicit BasicLivenessNet(const ArchConfig& arch) : arch_(arch) {
        arch_.validate();
        Index in = arch_.input_channels;
        add_block(1, arch_.block1_convs, in, arch_.block1_channels);
        add_block(2, arch_.block2_convs, arch_.block1_channels, arch_.block2_channels);
        features_.add(FlattenLayer<S>("flatten"));

        head_.add(LinearLayer<S>("fc1", arch_.latent_width(), arch_.hidden_width));
        head_.add(ReluLayer<S>("fc1_relu"));
        head_.add(BatchNormLayer<S>("fc1_bn", arch_.hidden_width, arch_.bn_epsilon, arch_.bn_momentum));
        head_.add(DropoutLayer<S>("fc1_drop", arch_.head_dropout));
        head_.add(LinearLayer<S>("fc2", arch_.hidden_width, arch_.classes));
    }

    const ArchConfig& arch() const { return arch_; }
    Sequential<S>& features() { return features_; }
    const Sequential<S>& features() const { return features_; }
    Sequential<S>& head() { return head_; }
    const Sequential<S>& head() const { return head_; }

    double threshold() const { return threshold_; }
    void set_threshold(double t) { threshold_ = t; }

    Index param_count() const { return features_.param_count() + head_.param_count(); }

    std::vector<Param<S>*> params() {
        auto p = features_.params();
        auto h = head_.params();
        p.insert(p.end(), h.begin(), h.end());
        return p;
    }
    std::vector<const Param<S>*> params() const {
        auto p = features_.params();
        auto h = head_.params();
        p.insert(p.end(), h.begin(), h.end());
        return p;
    }
    std::vector<Buffer<S>*> buffers() {
        auto b = features_.buffers();
        auto h = head_.buffers();
        b.insert(b.end(), h.begin(), h.end());
        return b;
    }
    std::vector<const Buffer<S>*> buffers() const {
        auto b = features_.buffers();
        auto h = head_.buffers();
        b.insert(b.end(), h.begin(), h.end());
        return b;
    }

    /// Train-mode pass returning logits [N, classes].
    Tensor<S> forward_train(const Tensor<S>& batch, Rng& rng) {
        check_input(batch);
        return head_.forward(features_.forward(batch, rng), rng);
    }

    void backward(const Tensor<S>& grad_logits) { features_.backward(head_.backward(grad_logits)); }

    /// Infer-mode class probabilities [N, classes]. Pure; safe to call
    /// concurrently on a shared model.
    Tensor<S> probabilities(const Tensor<S>& batch) const {
        return head_probabilities(extract_features(batch));
    }

    /// Flattened activations after the second conv block, [N, latent_width].
    Tensor<S> extract_features(const Tensor<S>& batch) const {
        check_input(batch);
        return features_.infer(batch);
    }

    Tensor<S> head_probabilities(const Tensor<S>& features) const {
        return softmax(head_.infer(features));
    }

    /// Single face [C,H,W] -> label and bona fide score.
    Prediction predict(const Tensor<S>& face) const { return predict(face, threshold_); }

    Prediction predict(const Tensor<S>& face, double threshold) const {
        if (face.rank() != 3) {
            throw ShapeError("predict: expected [C,H,W] face, got " + shape_string(face.shape()));
        }
        Shape batched{1, face.dim(0), face.dim(1), face.dim(2)};
        const Tensor<S> p = probabilities(face.reshaped(batched));
        const double score = static_cast<double>(p[0]);
        return {decide(score, threshold), score};
    }

private:
    void add_block(int block, Index convs, Index in, Index channels) {
        for (Index i = 1; i <= convs; ++i) {
            const std::string tag = std::to_string(block) + "_" + std::to_string(i);
            features_.add(Conv3x3Layer<S>("conv" + tag, i == 1 ? in : channels, channels));
            features_.add(BatchNormLayer<S>("bn" + tag, channels, arch_.bn_epsilon, arch_.bn_momentum));
            features_.add(ReluLayer<S>("relu" + tag));
        }
        features_.add(MaxPoolLayer<S>("pool" + std::to_string(block)));
        features_.add(DropoutLayer<S>("drop" + std::to_string(block), arch_.conv_dropout));
    }

    void check_input(const Tensor<S>& batch) const {
        const Shape expected{batch.rank() == 4 ? batch.dim(0) : 0, arch_.input_channels,
                             arch_.input_size, arch_.input_size};
        if (batch.shape() != expected) {
            throw ShapeError("model input must be [N," + std::to_string(arch_.input_channels) + "," +
                             std::to_string(arch_.input_size) + "," + std::to_string(arch_.input_size) +
                             "], got " + shape_string(batch.shape()));
        }
    }

    ArchConfig arch_;
    Sequential<S> features_;
    Sequential<S> head_;
    double threshold_ = 0.5;
};

using LivenessNet = BasicLivenessNet<float>;

/// Kaiming-normal init (std = sqrt(2 / fan_in)) for conv and linear weights,
/// zero biases, gamma 1, beta 0. Reproducible from the seed.
template <typename S>
BasicLivenessNet<S> build_model(const ArchConfig& arch, std::uint64_t seed) {
    BasicLivenessNet<S> net(arch);
    Rng rng(seed);
    for (auto* p : net.params()) {
        const auto& shape = p->value.shape();
        const bool is_weight = p->name.ends_with(".weight");
        if (!is_weight) continue;
        const Index fan_in = p->value.size() / shape[0];
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (Index i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<S>(rng.normal(0.0, stddev));
    }
    return net;
}

inline LivenessNet build_model(const ArchConfig& arch, std::uint64_t seed) {
    return build_model<float>(arch, seed);
}

/// Copy weights and buffers between scalar types (e.g. float -> double for checks).
template <typename To, typename From>
BasicLivenessNet<To> cast_model(const BasicLivenessNet<From>& src) {
    BasicLivenessNet<To> dst(src.arch());
    auto sp = src.params();
    auto dp = dst.params();
    for (std::size_t i = 0; i < sp.size(); ++i) dp[i]->value = sp[i]->value.template cast<To>();
    auto sb = src.buffers();
    auto db = dst.buffers();
    for (std::size_t i = 0; i < sb.size(); ++i) db[i]->value = sb[i]->value.template cast<To>();
    dst.set_threshold(src.threshold());
    return dst;
}

}  // namespace liveness
