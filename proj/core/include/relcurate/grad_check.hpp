// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace relcurate {

using ScalarFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares `gradient(point)` with central differences
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps), coordinate by coordinate.
///
/// The per-coordinate error is |a - n| / max(|a|, |n|, abs_floor); the floor
/// keeps coordinates whose true gradient is ~0 from reporting round-off as a
/// large relative error. Throws Error if eps <= 0, the gradient has the wrong
/// length, or f is non-finite at any probe point.
GradCheckResult grad_check(const ScalarFn& loss, const GradientFn& gradient,
                           std::span<const double> point, double epsilon,
                           double abs_floor = 1e-6);

}  // namespace relcurate
