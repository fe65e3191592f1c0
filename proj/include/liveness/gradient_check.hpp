#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "liveness/sequential.hpp"

namespace liveness {

struct GradCheckReport {
    /// Max element-wise relative error per checked tensor ("input" plus every
    /// parameter by name).
    std::map<std::string, double> max_rel_error;

    double worst() const {
        double w = 0.0;
        for (const auto& [name, err] : max_rel_error) w = std::max(w, err);
        return w;
    }
    bool passed(double tolerance) const { return worst() < tolerance; }
};

/// Relative error with a floor on the denominator so that two values that
/// are both ~0 do not blow up the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

/// Compares analytic gradients of `net` against central finite differences.
/// The scalar objective is sum(projection * net(x)) with a fixed random
/// projection; the generator is reseeded before every forward so dropout
/// masks are identical across evaluations.
inline GradCheckReport gradient_check(Sequential<double>& net, const Tensor64& input,
                                      std::uint64_t seed, double step = 1e-5) {
    Rng proj_rng(Rng::mix(seed, 0xC0FFEE));
    Tensor64 projection;

    auto objective = [&](const Tensor64& x) {
        Rng rng(seed);
        Tensor64 y = net.forward(x, rng);
        if (projection.empty()) {
            projection = Tensor64(y.shape());
            for (Index i = 0; i < projection.size(); ++i) projection[i] = proj_rng.normal();
        }
        return y.vec().dot(projection.vec());
    };

    objective(input);
    Rng rng(seed);
    net.forward(input, rng);
    const Tensor64 grad_input = net.backward(projection);

    GradCheckReport report;
    std::map<std::string, Tensor64> analytic;
    for (auto* p : net.params()) analytic[p->name] = p->grad;

    Tensor64 x = input;
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = objective(x);
        x[i] = orig - step;
        const double down = objective(x);
        x[i] = orig;
        worst = std::max(worst, relative_error(grad_input[i], (up - down) / (2 * step)));
    }
    report.max_rel_error["input"] = worst;

    for (auto* p : net.params()) {
        const Tensor64& a = analytic.at(p->name);
        worst = 0.0;
        for (Index i = 0; i < p->value.size(); ++i) {
            const double orig = p->value[i];
            p->value[i] = orig + step;
            const double up = objective(input);
            p->value[i] = orig - step;
            const double down = objective(input);
            p->value[i] = orig;
            worst = std::max(worst, relative_error(a[i], (up - down) / (2 * step)));
        }
        report.max_rel_error[p->name] = worst;
    }
    return report;
}

}  // namespace liveness
