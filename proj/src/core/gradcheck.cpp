#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tkan {

std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> params,
                                     double step) {
    require(step > 0.0, ErrorCode::invalid_argument, "finite_diff_grad: step must be positive");
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> grad(p.size(), 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + step;
        const double fp = f(p);
        p[i] = saved - step;
        const double fm = f(p);
        p[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            fail(ErrorCode::not_finite,
                 "finite_diff_grad: non-finite function value at coordinate " + std::to_string(i));
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

GradCheckReport compare_gradients(std::span<const double> analytic,
                                  std::span<const double> numeric, double floor) {
    require(analytic.size() == numeric.size(), ErrorCode::dimension_mismatch,
            "compare_gradients: length mismatch");
    GradCheckReport report;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i];
        const double n = numeric[i];
        const double denom = std::max({std::fabs(a), std::fabs(n), floor});
        const double rel = std::fabs(a - n) / denom;
        if (rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_parameter_index = i;
            report.analytic_value = a;
            report.numeric_value = n;
        }
    }
    return report;
}

GradCheckReport grad_check(const ScalarFn& f, std::span<const double> params,
                           std::span<const double> analytic, double step, double floor) {
    const std::vector<double> numeric = finite_diff_grad(f, params, step);
    return compare_gradients(analytic, numeric, floor);
}

}  // namespace tkan
