#pragma once

#include <memory>
#include <span>
#include <vector>

#include "core/error.hpp"

namespace tkan {

// Knot grid for B-splines of a fixed order (polynomial degree). Interior
// knots split [domain_lo, domain_hi] into `interior_intervals` spans; the
// knot vector is extended by `order` extra uniform steps on each side, so
// knot count = interior_intervals + 1 + 2*order and there are
// interior_intervals + order basis functions.
struct SplineGrid {
    int order = 3;
    int interior_intervals = 5;
    double domain_lo = -3.0;
    double domain_hi = 3.0;
    std::vector<double> knots;

    int basis_count() const noexcept { return interior_intervals + order; }
    int knot_count() const noexcept { return static_cast<int>(knots.size()); }
};

SplineGrid make_uniform_grid(int order, int intervals, double lo, double hi);

// Builds a grid over an explicit (strictly increasing) knot vector; the
// domain is taken as [knots[order], knots[order + intervals]].
SplineGrid make_grid(int order, int intervals, std::vector<double> knots);

// Order-0 basis: indicator of [t_i, t_{i+1}). The single exception is the
// interval ending exactly at domain_hi, which is treated as closed so the
// basis functions still sum to 1 at the top of the domain.
double basis_order0(const SplineGrid& grid, int i, double x);

// B_{i,k}(x) by the Cox-de Boor recursion; terms with a zero knot-span
// denominator contribute 0.
double basis(const SplineGrid& grid, int i, int k, double x);

// d/dx B_{i,k}(x) = k * [B_{i,k-1}/(t_{i+k}-t_i) - B_{i+1,k-1}/(t_{i+k+1}-t_{i+1})].
// k = 0 is rejected (the derivative is not a function).
double basis_derivative(const SplineGrid& grid, int i, int k, double x);

struct SplineFunction {
    std::shared_ptr<const SplineGrid> grid;
    std::vector<double> coefficients;  // length grid->basis_count()
};

// Sum_i c_i B_{i,order}(x) inside the domain; outside, the value continues
// linearly with the boundary slope so gradients never vanish on z-score tails.
double eval_spline(const SplineFunction& f, double x);
double eval_spline_derivative(const SplineFunction& f, double x);

// Dense per-input basis row used by KAN layers: value[i] is d(spline)/dc_i
// (the basis value, extrapolation folded in out of domain) and deriv[i] the
// matching d/dx contribution, so a spline evaluates as dot(c, value) and its
// input derivative as dot(c, deriv).
struct BasisRow {
    double x = 0.0;
    double clamped = 0.0;
    std::vector<double> value;
    std::vector<double> deriv;
};

BasisRow basis_row(const SplineGrid& grid, double x);

// Fills value/deriv (each basis_count long) without allocating; the flat
// variant KAN layers use once per input coordinate.
void basis_row_into(const SplineGrid& grid, double x, std::span<double> value,
                    std::span<double> deriv);

}  // namespace tkan
