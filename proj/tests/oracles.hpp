// Independent reference implementations used only by tests. These stay
// deliberately naive (direct recursion, scalar loops) so they cannot share a
// bug with the production paths they check.
#pragma once

#include <cmath>
#include <vector>

#include "kan/kan_layer.hpp"
#include "spline/spline.hpp"

namespace tkan::oracle {

// Direct recursive Cox-de Boor evaluation: the order-0 indicator and the
// two-term recursion, nothing else.
inline double naive_basis(const SplineGrid& grid, int i, int k, double x) {
    if (k == 0) return basis_order0(grid, i, x);
    const auto& t = grid.knots;
    double acc = 0.0;
    const double d1 = t[i + k] - t[i];
    if (d1 != 0.0) acc += (x - t[i]) / d1 * naive_basis(grid, i, k - 1, x);
    const double d2 = t[i + k + 1] - t[i + 1];
    if (d2 != 0.0) acc += (t[i + k + 1] - x) / d2 * naive_basis(grid, i + 1, k - 1, x);
    return acc;
}

// Spline value as the plain coefficient-weighted basis sum (interior x only).
inline double naive_spline_value(const SplineGrid& grid, const std::vector<double>& coeff,
                                 double x) {
    double acc = 0.0;
    for (int i = 0; i < grid.basis_count(); ++i)
        acc += coeff[i] * naive_basis(grid, i, grid.order, x);
    return acc;
}

inline double naive_silu(double x) { return x / (1.0 + std::exp(-x)); }

// Edge-by-edge scalar evaluation of a KAN layer via eval_spline.
inline std::vector<double> naive_kan_forward(const KanLayer& layer,
                                             const std::vector<double>& x) {
    std::vector<double> y(layer.out_dim(), 0.0);
    for (int q = 0; q < layer.out_dim(); ++q)
        for (int p = 0; p < layer.in_dim(); ++p) {
            const KanEdge e = layer.edge(q, p);
            y[q] += e.base_weight * naive_silu(x[p]) + e.spline_weight * eval_spline(e.spline, x[p]);
        }
    return y;
}

}  // namespace tkan::oracle
