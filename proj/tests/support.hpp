#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <unistd.h>

#include "liveness/rng.hpp"
#include "liveness/tensor.hpp"

namespace testing_support {

using liveness::Index;
using liveness::Rng;
using liveness::Shape;

template <typename S>
liveness::Tensor<S> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    liveness::Tensor<S> t(shape);
    for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<S>(rng.uniform(lo, hi));
    return t;
}

/// Direct 7-loop 3x3 convolution (stride 1, zero padding 1), in double.
template <typename S>
liveness::Tensor64 conv3x3_reference(const liveness::Tensor<S>& x, const liveness::Tensor<S>& w,
                                     const liveness::Tensor<S>& b) {
    const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3), k = w.dim(0);
    liveness::Tensor64 out({n, k, h, wd});
    for (Index i = 0; i < n; ++i)
        for (Index o = 0; o < k; ++o)
            for (Index y = 0; y < h; ++y)
                for (Index xx = 0; xx < wd; ++xx) {
                    double acc = static_cast<double>(b[o]);
                    for (Index ch = 0; ch < c; ++ch)
                        for (Index dy = -1; dy <= 1; ++dy)
                            for (Index dx = -1; dx <= 1; ++dx) {
                                const Index sy = y + dy, sx = xx + dx;
                                if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
                                acc += static_cast<double>(w(o, ch, dy + 1, dx + 1)) *
                                       static_cast<double>(x(i, ch, sy, sx));
                            }
                    out(i, o, y, xx) = acc;
                }
    return out;
}

/// Standard forward error bound of the binary32 convolution at every output:
/// m * eps * (sum |w| |x| + |b|) with m = 9 * C + 1 terms per dot product.
inline liveness::Tensor64 conv3x3_float_error_bound(const liveness::Tensor32& x, const liveness::Tensor32& w,
                                                    const liveness::Tensor32& b) {
    auto absolute = [](const liveness::Tensor32& t) {
        liveness::Tensor32 a = t;
        for (Index i = 0; i < a.size(); ++i) a[i] = std::abs(a[i]);
        return a;
    };
    liveness::Tensor64 bound = conv3x3_reference(absolute(x), absolute(w), absolute(b));
    const double m = static_cast<double>(9 * x.dim(1) + 1);
    for (Index i = 0; i < bound.size(); ++i) bound[i] *= m * std::numeric_limits<float>::epsilon();
    return bound;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("liveness_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing_support
