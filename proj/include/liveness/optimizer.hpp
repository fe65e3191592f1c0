#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "liveness/layers.hpp"

namespace liveness {

enum class OptimizerKind { SGD, Adam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::SGD ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::SGD;
    if (s == "adam") return OptimizerKind::Adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double momentum = 0.0;  // SGD only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// SGD with heavy-ball momentum (v = mu v + g; p -= lr v) or bias-corrected Adam.
/// Moment tensors are created lazily on the first step and must keep
/// matching their parameters afterwards.
template <typename S>
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {
        if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    }

    const OptimizerConfig& config() const { return config_; }
    std::uint64_t step_count() const { return steps_; }

    void step(const std::vector<Param<S>*>& params) {
        if (first_.empty()) {
            for (auto* p : params) {
                first_.emplace_back(p->value.shape());
                second_.emplace_back(p->value.shape());
            }
        }
        if (first_.size() != params.size()) {
            throw StateError("optimizer: parameter list changed between steps");
        }
        ++steps_;
        const S lr = static_cast<S>(config_.learning_rate);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Param<S>& p = *params[i];
            if (p.grad.shape() != p.value.shape() || first_[i].shape() != p.value.shape()) {
                throw ShapeError("optimizer: shape mismatch for " + p.name);
            }
            auto& m = first_[i].vec();
            const auto& g = p.grad.vec();
            if (config_.kind == OptimizerKind::SGD) {
                m = static_cast<S>(config_.momentum) * m + g;
                p.value.vec() -= lr * m;
                continue;
            }
            auto& v = second_[i].vec();
            const S b1 = static_cast<S>(config_.beta1);
            const S b2 = static_cast<S>(config_.beta2);
            m = b1 * m + (S(1) - b1) * g;
            v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
            const S c1 = S(1) - static_cast<S>(std::pow(config_.beta1, static_cast<double>(steps_)));
            const S c2 = S(1) - static_cast<S>(std::pow(config_.beta2, static_cast<double>(steps_)));
            const S eps = static_cast<S>(config_.epsilon);
            p.value.vec().array() -=
                lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
        }
    }

private:
    OptimizerConfig config_;
    std::uint64_t steps_ = 0;
    std::vector<Tensor<S>> first_;
    std::vector<Tensor<S>> second_;
};

}  // namespace liveness
