#pragma once

#include <vector>

#include "liveness/layers.hpp"

namespace liveness {

/// Ordered chain of layers. Every forward/backward output is checked for
/// finiteness and the first offending layer is named in the error.
template <typename S>
class Sequential {
public:
    Sequential() = default;

    template <typename L>
    L& add(L layer) {
        layers_.emplace_back(std::move(layer));
        return std::get<L>(layers_.back());
    }

    std::size_t size() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }
    AnyLayer<S>& operator[](std::size_t i) { return layers_[i]; }
    const AnyLayer<S>& operator[](std::size_t i) const { return layers_[i]; }
    auto begin() { return layers_.begin(); }
    auto end() { return layers_.end(); }
    auto begin() const { return layers_.begin(); }
    auto end() const { return layers_.end(); }

    Tensor<S> forward(Tensor<S> x, Rng& rng) {
        for (auto& layer : layers_) {
            x = std::visit([&](auto& l) { return l.forward(x, rng); }, layer);
            require_finite(x, "forward output of layer '" + name_of(layer) + "'");
        }
        return x;
    }

    Tensor<S> infer(Tensor<S> x) const {
        for (const auto& layer : layers_) {
            x = std::visit([&](const auto& l) { return l.infer(x); }, layer);
            require_finite(x, "forward output of layer '" + name_of(layer) + "'");
        }
        return x;
    }

    Tensor<S> backward(Tensor<S> grad) {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            grad = std::visit([&](auto& l) { return l.backward(grad); }, *it);
            require_finite(grad, "backward output of layer '" + name_of(*it) + "'");
        }
        return grad;
    }

    Shape output_shape(Shape in) const {
        for (const auto& layer : layers_) {
            in = std::visit([&](const auto& l) { return l.output_shape(in); }, layer);
        }
        return in;
    }

    std::vector<Param<S>*> params() { return collect<Param<S>*>(*this, [](auto& l) { return l.params(); }); }
    std::vector<const Param<S>*> params() const {
        return collect<const Param<S>*>(*this, [](const auto& l) { return l.params(); });
    }
    std::vector<Buffer<S>*> buffers() {
        return collect<Buffer<S>*>(*this, [](auto& l) { return l.buffers(); });
    }
    std::vector<const Buffer<S>*> buffers() const {
        return collect<const Buffer<S>*>(*this, [](const auto& l) { return l.buffers(); });
    }

    Index param_count() const {
        Index n = 0;
        for (const auto* p : params()) n += p->value.size();
        return n;
    }

private:
    template <typename Ptr, typename Self, typename Get>
    static std::vector<Ptr> collect(Self& self, Get get) {
        std::vector<Ptr> out;
        for (auto& layer : self.layers_) {
            auto part = std::visit(get, layer);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }

    std::vector<AnyLayer<S>> layers_;
};

}  // namespace liveness
