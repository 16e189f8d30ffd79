// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "relcurate/error.hpp"

namespace relcurate {

GradCheckResult grad_check(const ScalarFn& loss, const GradientFn& gradient,
                           std::span<const double> point, double epsilon, double abs_floor) {
    if (!(epsilon > 0.0)) throw Error("grad_check: epsilon must be > 0");
    const auto analytic = gradient(point);
    if (analytic.size() != point.size()) {
        throw Error("grad_check: gradient has " + std::to_string(analytic.size()) +
                    " entries for a " + std::to_string(point.size()) + "-dimensional point");
    }

    std::vector<double> x(point.begin(), point.end());
    auto probe = [&](std::size_t i) {
        const double f = loss(x);
        if (!std::isfinite(f)) {
            throw Error("grad_check: non-finite loss when probing coordinate " + std::to_string(i));
        }
        return f;
    };

    GradCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + epsilon;
        const double up = probe(i);
        x[i] = saved - epsilon;
        const double down = probe(i);
        x[i] = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), abs_floor});
        const double rel = std::abs(a - numeric) / denom;
        if (i == 0 || rel > result.max_rel_error) {
            result = {rel, i, a, numeric};
        }
    }
    return result;
}

}  // namespace relcurate
