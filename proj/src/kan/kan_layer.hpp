#pragma once

#include <memory>
#include <span>
#include <vector>

#include "core/rng.hpp"
#include "spline/spline.hpp"

namespace tkan {

// One learnable edge activation: phi(x) = w_b * silu(x) + w_s * spline(x).
struct KanEdge {
    SplineFunction spline;
    double base_weight = 0.0;
    double spline_weight = 0.0;
};

double silu(double x);
double silu_derivative(double x);
double eval_edge(const KanEdge& edge, double x);

// Per-input basis evaluations shared by every edge reading that input.
// Recurrent cells reuse one workspace across their four gate layers.
struct BasisWorkspace {
    int in_dim = 0;
    int basis_count = 0;
    std::vector<double> x;
    std::vector<double> silu_val;
    std::vector<double> silu_der;
    std::vector<double> value;  // [p * basis_count + i]
    std::vector<double> deriv;  // [p * basis_count + i]
};

std::shared_ptr<const BasisWorkspace> make_basis_workspace(const SplineGrid& grid,
                                                           std::span<const double> x);

struct KanCache {
    std::shared_ptr<const BasisWorkspace> ws;
    std::vector<double> spline_eval;  // [q * in_dim + p]
    int in_dim = 0;
    int out_dim = 0;
    bool valid = false;
};

// A full layer of edges: y_q = sum_p phi_{q,p}(x_p). All edges share one
// grid; parameters live in a single flat vector laid out as
// [coefficients (q,p,i)] [base weights (q,p)] [spline weights (q,p)].
class KanLayer {
public:
    KanLayer() = default;
    KanLayer(int in_dim, int out_dim, std::shared_ptr<const SplineGrid> grid);

    int in_dim() const noexcept { return in_dim_; }
    int out_dim() const noexcept { return out_dim_; }
    int basis_count() const noexcept { return basis_count_; }
    const SplineGrid& grid() const { return *grid_; }
    std::shared_ptr<const SplineGrid> grid_ptr() const { return grid_; }

    size_t param_count() const noexcept { return params_.size(); }
    size_t coeff_count() const noexcept {
        return static_cast<size_t>(out_dim_) * in_dim_ * basis_count_;
    }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    size_t coeff_index(int q, int p, int i) const noexcept {
        return (static_cast<size_t>(q) * in_dim_ + p) * basis_count_ + i;
    }
    size_t wb_index(int q, int p) const noexcept {
        return coeff_count() + static_cast<size_t>(q) * in_dim_ + p;
    }
    size_t ws_index(int q, int p) const noexcept {
        return coeff_count() + static_cast<size_t>(out_dim_) * in_dim_ +
               static_cast<size_t>(q) * in_dim_ + p;
    }

    double coeff(int q, int p, int i) const { return params_[coeff_index(q, p, i)]; }
    double base_weight(int q, int p) const { return params_[wb_index(q, p)]; }
    double spline_weight(int q, int p) const { return params_[ws_index(q, p)]; }

    KanEdge edge(int q, int p) const;

private:
    int in_dim_ = 0;
    int out_dim_ = 0;
    int basis_count_ = 0;
    std::shared_ptr<const SplineGrid> grid_;
    std::vector<double> params_;
};

// Forward pass; fills `out` (out_dim) and, when given, the cache for backward.
// A precomputed workspace for the same grid/x may be passed to share basis
// evaluations between layers reading the same input.
void kan_forward(const KanLayer& layer, std::span<const double> x, std::span<double> out,
                 KanCache* cache = nullptr,
                 std::shared_ptr<const BasisWorkspace> shared_ws = nullptr);

std::vector<double> kan_forward(const KanLayer& layer, std::span<const double> x,
                                KanCache* cache = nullptr);

// Accumulates (+=) parameter gradients into grad_params (layer layout) and
// input gradients into grad_x.
void kan_backward(const KanLayer& layer, const KanCache& cache, std::span<const double> upstream,
                  std::span<double> grad_params, std::span<double> grad_x);

// Sum of |c_i| over all edges; spline coefficients only, the caller applies
// the lambda factor.
double l1_sparsity(const KanLayer& layer);

// Base weights Xavier-style uniform, spline weights 1, coefficients small
// uniform noise. Deterministic given the rng state.
KanLayer init_kan(int in_dim, int out_dim, std::shared_ptr<const SplineGrid> grid, RngState& rng);

}  // namespace tkan
