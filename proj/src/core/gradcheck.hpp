#pragma once

#include <functional>
#include <span>
#include <vector>

#include "core/error.hpp"

namespace tkan {

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h per coordinate.
// Non-finite f output is an error.
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> params,
                                     double step);

struct GradCheckReport {
    double max_relative_error = 0.0;
    size_t worst_parameter_index = 0;
    double analytic_value = 0.0;
    double numeric_value = 0.0;
};

// Relative error per coordinate uses |a - n| / max(|a|, |n|, floor); the floor
// keeps near-zero gradients from being judged by finite-difference noise.
GradCheckReport compare_gradients(std::span<const double> analytic,
                                  std::span<const double> numeric, double floor = 1e-3);

// Convenience: finite differences of f at params vs a supplied analytic gradient.
GradCheckReport grad_check(const ScalarFn& f, std::span<const double> params,
                           std::span<const double> analytic, double step = 1e-6,
                           double floor = 1e-3);

}  // namespace tkan
