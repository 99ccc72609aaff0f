#include "spline/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tkan {

namespace {

void check_grid_args(int order, int intervals) {
    require(order >= 1 && order <= 12, ErrorCode::invalid_argument,
            "spline order must be in [1, 12]");
    require(intervals >= 1, ErrorCode::invalid_argument, "interior interval count must be >= 1");
}

// Largest m with t_m <= x, clamped into the interior span range so the top
// domain boundary falls in the last interior interval.
int find_span(const SplineGrid& grid, double x) {
    const int lo_span = grid.order;
    const int hi_span = grid.order + grid.interior_intervals - 1;
    auto it = std::upper_bound(grid.knots.begin(), grid.knots.end(), x);
    int m = static_cast<int>(it - grid.knots.begin()) - 1;
    return std::clamp(m, lo_span, hi_span);
}

}  // namespace

SplineGrid make_uniform_grid(int order, int intervals, double lo, double hi) {
    check_grid_args(order, intervals);
    require(lo < hi, ErrorCode::invalid_argument, "spline domain requires lo < hi");
    SplineGrid grid;
    grid.order = order;
    grid.interior_intervals = intervals;
    grid.domain_lo = lo;
    grid.domain_hi = hi;
    const double h = (hi - lo) / intervals;
    const int count = intervals + 1 + 2 * order;
    grid.knots.resize(count);
    for (int j = 0; j < count; ++j) grid.knots[j] = lo + (j - order) * h;
    // The domain endpoints must be exact for the boundary conventions.
    grid.knots[order] = lo;
    grid.knots[order + intervals] = hi;
    return grid;
}

SplineGrid make_grid(int order, int intervals, std::vector<double> knots) {
    check_grid_args(order, intervals);
    require(static_cast<int>(knots.size()) == intervals + 1 + 2 * order,
            ErrorCode::invalid_argument,
            "knot count must equal intervals + 1 + 2*order, got " + std::to_string(knots.size()));
    for (size_t j = 1; j < knots.size(); ++j)
        require(knots[j] > knots[j - 1], ErrorCode::invalid_argument,
                "knots must be strictly increasing");
    SplineGrid grid;
    grid.order = order;
    grid.interior_intervals = intervals;
    grid.domain_lo = knots[order];
    grid.domain_hi = knots[order + intervals];
    grid.knots = std::move(knots);
    return grid;
}

double basis_order0(const SplineGrid& grid, int i, double x) {
    require(i >= 0 && i + 1 < grid.knot_count(), ErrorCode::out_of_range,
            "basis_order0: interval index " + std::to_string(i) + " out of range");
    const double t0 = grid.knots[i];
    const double t1 = grid.knots[i + 1];
    // Closed top: x == domain_hi belongs only to the interval ending there.
    if (x == grid.domain_hi) return (t1 == grid.domain_hi && t0 < t1) ? 1.0 : 0.0;
    return (x >= t0 && x < t1) ? 1.0 : 0.0;
}

double basis(const SplineGrid& grid, int i, int k, double x) {
    require(k >= 0 && k <= grid.order, ErrorCode::out_of_range,
            "basis: order " + std::to_string(k) + " out of range");
    require(i >= 0 && i + k + 1 < grid.knot_count(), ErrorCode::out_of_range,
            "basis: index " + std::to_string(i) + " out of range for order " + std::to_string(k));
    const auto& t = grid.knots;
    // Bottom-up over orders; b[j] holds B_{i+j, ord}(x).
    std::vector<double> b(static_cast<size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) b[j] = basis_order0(grid, i + j, x);
    for (int ord = 1; ord <= k; ++ord) {
        for (int j = 0; j <= k - ord; ++j) {
            const int idx = i + j;
            const double d1 = t[idx + ord] - t[idx];
            const double d2 = t[idx + ord + 1] - t[idx + 1];
            double acc = 0.0;
            if (d1 != 0.0) acc += (x - t[idx]) / d1 * b[j];
            if (d2 != 0.0) acc += (t[idx + ord + 1] - x) / d2 * b[j + 1];
            b[j] = acc;
        }
    }
    return b[0];
}

double basis_derivative(const SplineGrid& grid, int i, int k, double x) {
    require(k >= 1, ErrorCode::invalid_argument,
            "basis_derivative: order-0 basis has no function derivative");
    require(k <= grid.order, ErrorCode::out_of_range, "basis_derivative: order out of range");
    require(i >= 0 && i + k + 1 < grid.knot_count(), ErrorCode::out_of_range,
            "basis_derivative: index out of range");
    const auto& t = grid.knots;
    const double d1 = t[i + k] - t[i];
    const double d2 = t[i + k + 1] - t[i + 1];
    double acc = 0.0;
    if (d1 != 0.0) acc += basis(grid, i, k - 1, x) / d1;
    if (d2 != 0.0) acc -= basis(grid, i + 1, k - 1, x) / d2;
    return k * acc;
}

void basis_row_into(const SplineGrid& grid, double x, std::span<double> value,
                    std::span<double> deriv) {
    const int n = grid.basis_count();
    require(static_cast<int>(value.size()) == n && static_cast<int>(deriv.size()) == n,
            ErrorCode::dimension_mismatch, "basis_row_into: output spans sized to basis count");
    std::fill(value.begin(), value.end(), 0.0);
    std::fill(deriv.begin(), deriv.end(), 0.0);

    const double xc = std::clamp(x, grid.domain_lo, grid.domain_hi);
    const double overhang = x - xc;  // 0 inside the domain
    const int k = grid.order;
    const int m = find_span(grid, xc);
    const auto& t = grid.knots;

    // Nonzero values N[j] = B_{m-k+j, ord}(xc); keep the order k-1 row for the
    // derivative recurrence.
    double N[16];
    double Nlow[16];
    double left[16];
    double right[16];
    N[0] = 1.0;
    for (int j = 1; j <= k; ++j) {
        if (j == k)
            for (int r = 0; r < k; ++r) Nlow[r] = N[r];
        left[j] = xc - t[m + 1 - j];
        right[j] = t[m + j] - xc;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = N[r] / (right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        N[j] = saved;
    }

    for (int j = 0; j <= k; ++j) {
        const int idx = m - k + j;
        const double dlo = t[idx + k] - t[idx];
        const double dhi = t[idx + k + 1] - t[idx + 1];
        double db = 0.0;
        if (j >= 1 && dlo != 0.0) db += Nlow[j - 1] / dlo;
        if (j <= k - 1 && dhi != 0.0) db -= Nlow[j] / dhi;
        db *= k;
        value[idx] = N[j] + db * overhang;
        deriv[idx] = db;
    }
}

BasisRow basis_row(const SplineGrid& grid, double x) {
    BasisRow row;
    row.x = x;
    row.clamped = std::clamp(x, grid.domain_lo, grid.domain_hi);
    row.value.resize(grid.basis_count());
    row.deriv.resize(grid.basis_count());
    basis_row_into(grid, x, row.value, row.deriv);
    return row;
}

double eval_spline(const SplineFunction& f, double x) {
    require(f.grid != nullptr, ErrorCode::invalid_argument, "eval_spline: missing grid");
    require(static_cast<int>(f.coefficients.size()) == f.grid->basis_count(),
            ErrorCode::dimension_mismatch, "eval_spline: coefficient length != basis count");
    const BasisRow row = basis_row(*f.grid, x);
    double acc = 0.0;
    for (size_t i = 0; i < f.coefficients.size(); ++i) acc += f.coefficients[i] * row.value[i];
    return acc;
}

double eval_spline_derivative(const SplineFunction& f, double x) {
    require(f.grid != nullptr, ErrorCode::invalid_argument, "eval_spline_derivative: missing grid");
    require(static_cast<int>(f.coefficients.size()) == f.grid->basis_count(),
            ErrorCode::dimension_mismatch, "eval_spline_derivative: coefficient length != basis count");
    const BasisRow row = basis_row(*f.grid, x);
    double acc = 0.0;
    for (size_t i = 0; i < f.coefficients.size(); ++i) acc += f.coefficients[i] * row.deriv[i];
    return acc;
}

}  // namespace tkan
