#include "kan/kan_layer.hpp"

#include <cmath>
#include <string>

namespace tkan {

double silu(double x) {
    if (x >= 0.0) return x / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return x * e / (1.0 + e);
}

double silu_derivative(double x) {
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    return s * (1.0 + x * (1.0 - s));
}

double eval_edge(const KanEdge& edge, double x) {
    return edge.base_weight * silu(x) + edge.spline_weight * eval_spline(edge.spline, x);
}

std::shared_ptr<const BasisWorkspace> make_basis_workspace(const SplineGrid& grid,
                                                           std::span<const double> x) {
    auto ws = std::make_shared<BasisWorkspace>();
    const int n = static_cast<int>(x.size());
    const int nb = grid.basis_count();
    ws->in_dim = n;
    ws->basis_count = nb;
    ws->x.assign(x.begin(), x.end());
    ws->silu_val.resize(n);
    ws->silu_der.resize(n);
    ws->value.resize(static_cast<size_t>(n) * nb);
    ws->deriv.resize(static_cast<size_t>(n) * nb);
    for (int p = 0; p < n; ++p) {
        require(std::isfinite(x[p]), ErrorCode::not_finite,
                "kan input coordinate " + std::to_string(p) + " is not finite");
        ws->silu_val[p] = silu(x[p]);
        ws->silu_der[p] = silu_derivative(x[p]);
        basis_row_into(grid, x[p],
                       std::span<double>(ws->value).subspan(static_cast<size_t>(p) * nb, nb),
                       std::span<double>(ws->deriv).subspan(static_cast<size_t>(p) * nb, nb));
    }
    return ws;
}

KanLayer::KanLayer(int in_dim, int out_dim, std::shared_ptr<const SplineGrid> grid)
    : in_dim_(in_dim), out_dim_(out_dim), grid_(std::move(grid)) {
    require(in_dim >= 1 && out_dim >= 1, ErrorCode::invalid_argument,
            "KanLayer dimensions must be >= 1");
    require(grid_ != nullptr, ErrorCode::invalid_argument, "KanLayer requires a grid");
    basis_count_ = grid_->basis_count();
    params_.assign(static_cast<size_t>(out_dim_) * in_dim_ * (basis_count_ + 2), 0.0);
}

KanEdge KanLayer::edge(int q, int p) const {
    require(q >= 0 && q < out_dim_ && p >= 0 && p < in_dim_, ErrorCode::out_of_range,
            "KanLayer::edge index out of range");
    KanEdge e;
    e.spline.grid = grid_;
    e.spline.coefficients.assign(params_.begin() + coeff_index(q, p, 0),
                                 params_.begin() + coeff_index(q, p, 0) + basis_count_);
    e.base_weight = base_weight(q, p);
    e.spline_weight = spline_weight(q, p);
    return e;
}

void kan_forward(const KanLayer& layer, std::span<const double> x, std::span<double> out,
                 KanCache* cache, std::shared_ptr<const BasisWorkspace> shared_ws) {
    require(static_cast<int>(x.size()) == layer.in_dim(), ErrorCode::dimension_mismatch,
            "kan_forward: input length " + std::to_string(x.size()) + " != in_dim " +
                std::to_string(layer.in_dim()));
    require(static_cast<int>(out.size()) == layer.out_dim(), ErrorCode::dimension_mismatch,
            "kan_forward: output span sized to out_dim");

    std::shared_ptr<const BasisWorkspace> ws = std::move(shared_ws);
    if (ws) {
        require(ws->in_dim == layer.in_dim() && ws->basis_count == layer.basis_count(),
                ErrorCode::dimension_mismatch, "kan_forward: workspace shape mismatch");
    } else {
        ws = make_basis_workspace(layer.grid(), x);
    }

    const int in = layer.in_dim();
    const int out_dim = layer.out_dim();
    const int nb = layer.basis_count();
    const std::span<const double> params = layer.params();

    if (cache) {
        cache->ws = ws;
        cache->spline_eval.assign(static_cast<size_t>(out_dim) * in, 0.0);
        cache->in_dim = in;
        cache->out_dim = out_dim;
        cache->valid = true;
    }

    for (int q = 0; q < out_dim; ++q) {
        double acc = 0.0;
        for (int p = 0; p < in; ++p) {
            const double* c = &params[layer.coeff_index(q, p, 0)];
            const double* bval = &ws->value[static_cast<size_t>(p) * nb];
            double sp = 0.0;
            for (int i = 0; i < nb; ++i) sp += c[i] * bval[i];
            if (cache) cache->spline_eval[static_cast<size_t>(q) * in + p] = sp;
            acc += params[layer.wb_index(q, p)] * ws->silu_val[p] +
                   params[layer.ws_index(q, p)] * sp;
        }
        out[q] = acc;
    }
}

std::vector<double> kan_forward(const KanLayer& layer, std::span<const double> x,
                                KanCache* cache) {
    std::vector<double> y(layer.out_dim());
    kan_forward(layer, x, y, cache);
    return y;
}

void kan_backward(const KanLayer& layer, const KanCache& cache, std::span<const double> upstream,
                  std::span<double> grad_params, std::span<double> grad_x) {
    require(cache.valid && cache.ws != nullptr, ErrorCode::invalid_argument,
            "kan_backward: cache not produced by a forward call");
    require(cache.in_dim == layer.in_dim() && cache.out_dim == layer.out_dim() &&
                cache.ws->basis_count == layer.basis_count(),
            ErrorCode::dimension_mismatch, "kan_backward: cache does not match layer");
    require(static_cast<int>(upstream.size()) == layer.out_dim(), ErrorCode::dimension_mismatch,
            "kan_backward: upstream length != out_dim");
    require(grad_params.size() == layer.param_count(), ErrorCode::dimension_mismatch,
            "kan_backward: grad_params sized to param_count");
    require(static_cast<int>(grad_x.size()) == layer.in_dim(), ErrorCode::dimension_mismatch,
            "kan_backward: grad_x sized to in_dim");

    const int in = layer.in_dim();
    const int out_dim = layer.out_dim();
    const int nb = layer.basis_count();
    const BasisWorkspace& ws = *cache.ws;
    const std::span<const double> params = layer.params();

    for (int q = 0; q < out_dim; ++q) {
        const double u = upstream[q];
        if (u == 0.0) continue;
        for (int p = 0; p < in; ++p) {
            const double w_s = params[layer.ws_index(q, p)];
            const double w_b = params[layer.wb_index(q, p)];
            const double* bval = &ws.value[static_cast<size_t>(p) * nb];
            const double* bder = &ws.deriv[static_cast<size_t>(p) * nb];
            const double* c = &params[layer.coeff_index(q, p, 0)];

            grad_params[layer.wb_index(q, p)] += u * ws.silu_val[p];
            grad_params[layer.ws_index(q, p)] += u * cache.spline_eval[static_cast<size_t>(q) * in + p];

            double* gc = &grad_params[layer.coeff_index(q, p, 0)];
            const double uws = u * w_s;
            double dspline_dx = 0.0;
            for (int i = 0; i < nb; ++i) {
                gc[i] += uws * bval[i];
                dspline_dx += c[i] * bder[i];
            }
            grad_x[p] += u * (w_b * ws.silu_der[p] + w_s * dspline_dx);
        }
    }
}

double l1_sparsity(const KanLayer& layer) {
    const std::span<const double> params = layer.params();
    double acc = 0.0;
    for (size_t i = 0; i < layer.coeff_count(); ++i) acc += std::fabs(params[i]);
    return acc;
}

KanLayer init_kan(int in_dim, int out_dim, std::shared_ptr<const SplineGrid> grid, RngState& rng) {
    KanLayer layer(in_dim, out_dim, std::move(grid));
    std::span<double> params = layer.params();
    const double bound = std::sqrt(6.0 / (in_dim + out_dim));
    for (int q = 0; q < out_dim; ++q)
        for (int p = 0; p < in_dim; ++p) params[layer.wb_index(q, p)] = rng.uniform(-bound, bound);
    for (int q = 0; q < out_dim; ++q)
        for (int p = 0; p < in_dim; ++p) params[layer.ws_index(q, p)] = 1.0;
    const int nb = layer.basis_count();
    for (int q = 0; q < out_dim; ++q)
        for (int p = 0; p < in_dim; ++p)
            for (int i = 0; i < nb; ++i)
                params[layer.coeff_index(q, p, i)] = rng.uniform(-0.1, 0.1);
    return layer;
}

}  // namespace tkan
