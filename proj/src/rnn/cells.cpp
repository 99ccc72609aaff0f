#include "rnn/cells.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tkan {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void concat_state_input(std::span<const double> h, std::span<const double> x,
                        std::vector<double>& z) {
    z.resize(h.size() + x.size());
    std::copy(h.begin(), h.end(), z.begin());
    std::copy(x.begin(), x.end(), z.begin() + h.size());
}

// c_t = f .* c_prev + i .* g ; h_t = o .* tanh(c_t). Both cell types route
// their gate activations through this one implementation.
void state_update(std::span<const double> gi, std::span<const double> gf,
                  std::span<const double> gg, std::span<const double> go,
                  std::span<const double> c_prev, std::vector<double>& c,
                  std::vector<double>& tanh_c, std::vector<double>& h) {
    const size_t n = gi.size();
    c.resize(n);
    tanh_c.resize(n);
    h.resize(n);
    for (size_t j = 0; j < n; ++j) {
        c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
        tanh_c[j] = std::tanh(c[j]);
        h[j] = go[j] * tanh_c[j];
    }
}

// Reverse of state_update: consumes dh and incoming dc, emits gate-value
// gradients and dc_prev.
void state_update_backward(std::span<const double> gi, std::span<const double> gf,
                           std::span<const double> gg, std::span<const double> go,
                           std::span<const double> c_prev, std::span<const double> tanh_c,
                           std::span<const double> dh, std::span<double> dc,
                           std::span<double> di, std::span<double> df, std::span<double> dg,
                           std::span<double> do_, std::span<double> dc_prev) {
    const size_t n = gi.size();
    for (size_t j = 0; j < n; ++j) {
        do_[j] = dh[j] * tanh_c[j];
        dc[j] += dh[j] * go[j] * (1.0 - tanh_c[j] * tanh_c[j]);
        di[j] = dc[j] * gg[j];
        df[j] = dc[j] * c_prev[j];
        dg[j] = dc[j] * gi[j];
        dc_prev[j] = dc[j] * gf[j];
    }
}

void check_step_input(int input_dim, int hidden_dim, std::span<const double> x,
                      const CellState& prev) {
    require(static_cast<int>(x.size()) == input_dim, ErrorCode::dimension_mismatch,
            "cell step: input length " + std::to_string(x.size()) + " != input_dim " +
                std::to_string(input_dim));
    require(static_cast<int>(prev.h.size()) == hidden_dim &&
                static_cast<int>(prev.c.size()) == hidden_dim,
            ErrorCode::dimension_mismatch, "cell step: state size != hidden_dim");
}

size_t copy_matrix(std::span<double> out, size_t at, const Matrix& m) {
    std::copy(m.data.begin(), m.data.end(), out.begin() + at);
    return at + m.data.size();
}

size_t copy_vec(std::span<double> out, size_t at, const std::vector<double>& v) {
    std::copy(v.begin(), v.end(), out.begin() + at);
    return at + v.size();
}

size_t load_matrix(std::span<const double> in, size_t at, Matrix& m) {
    std::copy(in.begin() + at, in.begin() + at + m.data.size(), m.data.begin());
    return at + m.data.size();
}

size_t load_vec(std::span<const double> in, size_t at, std::vector<double>& v) {
    std::copy(in.begin() + at, in.begin() + at + v.size(), v.begin());
    return at + v.size();
}

}  // namespace

CellState zero_state(int hidden_dim) {
    CellState s;
    s.h.assign(hidden_dim, 0.0);
    s.c.assign(hidden_dim, 0.0);
    return s;
}

// ---------------------------------------------------------------------------
// LstmCell
// ---------------------------------------------------------------------------

size_t LstmCell::param_count() const noexcept {
    return 4 * (static_cast<size_t>(hidden_dim) * (hidden_dim + input_dim) + hidden_dim);
}

void LstmCell::copy_params(std::span<double> out) const {
    require(out.size() == param_count(), ErrorCode::dimension_mismatch,
            "LstmCell::copy_params span size");
    size_t at = 0;
    at = copy_matrix(out, at, W_i);
    at = copy_vec(out, at, b_i);
    at = copy_matrix(out, at, W_f);
    at = copy_vec(out, at, b_f);
    at = copy_matrix(out, at, W_g);
    at = copy_vec(out, at, b_g);
    at = copy_matrix(out, at, W_o);
    copy_vec(out, at, b_o);
}

void LstmCell::set_params(std::span<const double> in) {
    require(in.size() == param_count(), ErrorCode::dimension_mismatch,
            "LstmCell::set_params span size");
    size_t at = 0;
    at = load_matrix(in, at, W_i);
    at = load_vec(in, at, b_i);
    at = load_matrix(in, at, W_f);
    at = load_vec(in, at, b_f);
    at = load_matrix(in, at, W_g);
    at = load_vec(in, at, b_g);
    at = load_matrix(in, at, W_o);
    load_vec(in, at, b_o);
}

LstmCell make_lstm(int input_dim, int hidden_dim) {
    require(input_dim >= 1 && hidden_dim >= 1, ErrorCode::invalid_argument,
            "LSTM dimensions must be >= 1");
    LstmCell cell;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    const int z = hidden_dim + input_dim;
    cell.W_i = Matrix(hidden_dim, z);
    cell.W_f = Matrix(hidden_dim, z);
    cell.W_g = Matrix(hidden_dim, z);
    cell.W_o = Matrix(hidden_dim, z);
    cell.b_i.assign(hidden_dim, 0.0);
    cell.b_f.assign(hidden_dim, 0.0);
    cell.b_g.assign(hidden_dim, 0.0);
    cell.b_o.assign(hidden_dim, 0.0);
    return cell;
}

LstmCell init_lstm(int input_dim, int hidden_dim, RngState& rng) {
    LstmCell cell = make_lstm(input_dim, hidden_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim + input_dim));
    for (Matrix* w : {&cell.W_i, &cell.W_f, &cell.W_g, &cell.W_o})
        for (double& v : w->data) v = rng.uniform(-bound, bound);
    return cell;
}

CellState lstm_step(const LstmCell& cell, std::span<const double> x, const CellState& prev,
                    LstmStepCache* cache) {
    check_step_input(cell.input_dim, cell.hidden_dim, x, prev);
    const int hidden = cell.hidden_dim;

    std::vector<double> z;
    concat_state_input(prev.h, x, z);

    std::vector<double> gi(hidden), gf(hidden), gg(hidden), go(hidden);
    matvec(cell.W_i, z, gi);
    matvec(cell.W_f, z, gf);
    matvec(cell.W_g, z, gg);
    matvec(cell.W_o, z, go);
    for (int j = 0; j < hidden; ++j) {
        gi[j] = sigmoid(gi[j] + cell.b_i[j]);
        gf[j] = sigmoid(gf[j] + cell.b_f[j]);
        gg[j] = std::tanh(gg[j] + cell.b_g[j]);
        go[j] = sigmoid(go[j] + cell.b_o[j]);
    }

    CellState next;
    std::vector<double> tanh_c;
    state_update(gi, gf, gg, go, prev.c, next.c, tanh_c, next.h);

    if (cache) {
        cache->z = std::move(z);
        cache->gi = std::move(gi);
        cache->gf = std::move(gf);
        cache->gg = std::move(gg);
        cache->go = std::move(go);
        cache->c_prev = prev.c;
        cache->c = next.c;
        cache->tanh_c = std::move(tanh_c);
        cache->valid = true;
    }
    return next;
}

// ---------------------------------------------------------------------------
// TkanCell
// ---------------------------------------------------------------------------

size_t TkanCell::param_count() const noexcept {
    return gate_i.param_count() + gate_f.param_count() + gate_g.param_count() +
           gate_o.param_count();
}

void TkanCell::copy_params(std::span<double> out) const {
    require(out.size() == param_count(), ErrorCode::dimension_mismatch,
            "TkanCell::copy_params span size");
    size_t at = 0;
    for (const KanLayer* g : {&gate_i, &gate_f, &gate_g, &gate_o}) {
        std::copy(g->params().begin(), g->params().end(), out.begin() + at);
        at += g->param_count();
    }
}

void TkanCell::set_params(std::span<const double> in) {
    require(in.size() == param_count(), ErrorCode::dimension_mismatch,
            "TkanCell::set_params span size");
    size_t at = 0;
    for (KanLayer* g : {&gate_i, &gate_f, &gate_g, &gate_o}) {
        std::copy(in.begin() + at, in.begin() + at + g->param_count(), g->params().begin());
        at += g->param_count();
    }
}

TkanCell init_tkan(int input_dim, int hidden_dim, std::shared_ptr<const SplineGrid> grid,
                   RngState& rng) {
    require(input_dim >= 1 && hidden_dim >= 1, ErrorCode::invalid_argument,
            "TkanCell dimensions must be >= 1");
    TkanCell cell;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    const int z = hidden_dim + input_dim;
    cell.gate_i = init_kan(z, hidden_dim, grid, rng);
    cell.gate_f = init_kan(z, hidden_dim, grid, rng);
    cell.gate_g = init_kan(z, hidden_dim, grid, rng);
    cell.gate_o = init_kan(z, hidden_dim, std::move(grid), rng);
    return cell;
}

CellState tkan_step(const TkanCell& cell, std::span<const double> x, const CellState& prev,
                    TkanStepCache* cache) {
    check_step_input(cell.input_dim, cell.hidden_dim, x, prev);
    const int hidden = cell.hidden_dim;

    std::vector<double> z;
    concat_state_input(prev.h, x, z);

    // One basis workspace serves all four gate layers.
    auto ws = make_basis_workspace(cell.grid(), z);

    std::vector<double> gi(hidden), gf(hidden), gg(hidden), go(hidden);
    KanCache ci, cf, cg, co;
    kan_forward(cell.gate_i, z, gi, cache ? &ci : nullptr, ws);
    kan_forward(cell.gate_f, z, gf, cache ? &cf : nullptr, ws);
    kan_forward(cell.gate_g, z, gg, cache ? &cg : nullptr, ws);
    kan_forward(cell.gate_o, z, go, cache ? &co : nullptr, ws);
    for (int j = 0; j < hidden; ++j) {
        gi[j] = sigmoid(gi[j]);
        gf[j] = sigmoid(gf[j]);
        gg[j] = std::tanh(gg[j]);
        go[j] = sigmoid(go[j]);
    }

    CellState next;
    std::vector<double> tanh_c;
    state_update(gi, gf, gg, go, prev.c, next.c, tanh_c, next.h);

    if (cache) {
        cache->z = std::move(z);
        cache->kan_i = std::move(ci);
        cache->kan_f = std::move(cf);
        cache->kan_g = std::move(cg);
        cache->kan_o = std::move(co);
        cache->gi = std::move(gi);
        cache->gf = std::move(gf);
        cache->gg = std::move(gg);
        cache->go = std::move(go);
        cache->c_prev = prev.c;
        cache->c = next.c;
        cache->tanh_c = std::move(tanh_c);
        cache->valid = true;
    }
    return next;
}

// ---------------------------------------------------------------------------
// unroll / bptt
// ---------------------------------------------------------------------------

namespace {

template <typename Cell, typename Cache>
Unrolled<Cache> unroll_impl(const Cell& cell, const Matrix& sequence, const CellState& init,
                            CellState (*step)(const Cell&, std::span<const double>,
                                              const CellState&, Cache*)) {
    require(sequence.rows >= 1, ErrorCode::empty_input, "unroll: empty sequence");
    require(sequence.cols == cell.input_dim, ErrorCode::dimension_mismatch,
            "unroll: sequence width != input_dim");
    Unrolled<Cache> out;
    out.states.reserve(sequence.rows);
    out.caches.resize(sequence.rows);
    const CellState* prev = &init;
    for (int t = 0; t < sequence.rows; ++t) {
        std::span<const double> x(&sequence.data[static_cast<size_t>(t) * sequence.cols],
                                  sequence.cols);
        out.states.push_back(step(cell, x, *prev, &out.caches[t]));
        prev = &out.states.back();
    }
    return out;
}

}  // namespace

Unrolled<LstmStepCache> unroll(const LstmCell& cell, const Matrix& sequence,
                               const CellState& init) {
    return unroll_impl<LstmCell, LstmStepCache>(cell, sequence, init, &lstm_step);
}

Unrolled<TkanStepCache> unroll(const TkanCell& cell, const Matrix& sequence,
                               const CellState& init) {
    return unroll_impl<TkanCell, TkanStepCache>(cell, sequence, init, &tkan_step);
}

namespace {

void check_bptt_args(int hidden_dim, size_t steps, const Matrix& upstream_h,
                     std::span<const double> upstream_c_final) {
    require(steps >= 1, ErrorCode::empty_input, "bptt: no cached steps");
    require(upstream_h.rows == static_cast<int>(steps) && upstream_h.cols == hidden_dim,
            ErrorCode::dimension_mismatch, "bptt: upstream_h must be T x hidden");
    require(upstream_c_final.empty() || static_cast<int>(upstream_c_final.size()) == hidden_dim,
            ErrorCode::dimension_mismatch, "bptt: upstream_c_final size");
}

}  // namespace

BpttResult bptt(const LstmCell& cell, const std::vector<LstmStepCache>& caches,
                const Matrix& upstream_h, std::span<const double> upstream_c_final) {
    check_bptt_args(cell.hidden_dim, caches.size(), upstream_h, upstream_c_final);
    const int hidden = cell.hidden_dim;
    const int input = cell.input_dim;
    const int zdim = hidden + input;
    const int steps = static_cast<int>(caches.size());

    BpttResult result;
    result.input_grads = Matrix(steps, input);

    Matrix dW_i(hidden, zdim), dW_f(hidden, zdim), dW_g(hidden, zdim), dW_o(hidden, zdim);
    std::vector<double> db_i(hidden, 0.0), db_f(hidden, 0.0), db_g(hidden, 0.0),
        db_o(hidden, 0.0);

    std::vector<double> dh(hidden, 0.0), dc(hidden, 0.0);
    if (!upstream_c_final.empty()) std::copy(upstream_c_final.begin(), upstream_c_final.end(), dc.begin());

    std::vector<double> di(hidden), df(hidden), dg(hidden), do_(hidden), dc_prev(hidden);
    std::vector<double> da(hidden), dz(zdim);

    for (int t = steps - 1; t >= 0; --t) {
        const LstmStepCache& cc = caches[t];
        require(cc.valid && static_cast<int>(cc.gi.size()) == hidden &&
                    static_cast<int>(cc.z.size()) == zdim,
                ErrorCode::invalid_argument, "bptt: cache does not match cell");
        for (int j = 0; j < hidden; ++j) dh[j] += upstream_h(t, j);

        state_update_backward(cc.gi, cc.gf, cc.gg, cc.go, cc.c_prev, cc.tanh_c, dh, dc, di, df,
                              dg, do_, dc_prev);

        std::fill(dz.begin(), dz.end(), 0.0);
        // input gate
        for (int j = 0; j < hidden; ++j) da[j] = di[j] * cc.gi[j] * (1.0 - cc.gi[j]);
        add_outer(dW_i, da, cc.z);
        for (int j = 0; j < hidden; ++j) db_i[j] += da[j];
        matvec_transposed_add(cell.W_i, da, dz);
        // forget gate
        for (int j = 0; j < hidden; ++j) da[j] = df[j] * cc.gf[j] * (1.0 - cc.gf[j]);
        add_outer(dW_f, da, cc.z);
        for (int j = 0; j < hidden; ++j) db_f[j] += da[j];
        matvec_transposed_add(cell.W_f, da, dz);
        // candidate
        for (int j = 0; j < hidden; ++j) da[j] = dg[j] * (1.0 - cc.gg[j] * cc.gg[j]);
        add_outer(dW_g, da, cc.z);
        for (int j = 0; j < hidden; ++j) db_g[j] += da[j];
        matvec_transposed_add(cell.W_g, da, dz);
        // output gate
        for (int j = 0; j < hidden; ++j) da[j] = do_[j] * cc.go[j] * (1.0 - cc.go[j]);
        add_outer(dW_o, da, cc.z);
        for (int j = 0; j < hidden; ++j) db_o[j] += da[j];
        matvec_transposed_add(cell.W_o, da, dz);

        for (int j = 0; j < hidden; ++j) dh[j] = dz[j];
        for (int j = 0; j < input; ++j) result.input_grads(t, j) = dz[hidden + j];
        std::copy(dc_prev.begin(), dc_prev.end(), dc.begin());
    }

    result.initial_state_grads.h = dh;
    result.initial_state_grads.c = dc;

    result.param_grads.assign(cell.param_count(), 0.0);
    std::span<double> out(result.param_grads);
    size_t at = 0;
    at = copy_matrix(out, at, dW_i);
    at = copy_vec(out, at, db_i);
    at = copy_matrix(out, at, dW_f);
    at = copy_vec(out, at, db_f);
    at = copy_matrix(out, at, dW_g);
    at = copy_vec(out, at, db_g);
    at = copy_matrix(out, at, dW_o);
    copy_vec(out, at, db_o);
    return result;
}

BpttResult bptt(const TkanCell& cell, const std::vector<TkanStepCache>& caches,
                const Matrix& upstream_h, std::span<const double> upstream_c_final) {
    check_bptt_args(cell.hidden_dim, caches.size(), upstream_h, upstream_c_final);
    const int hidden = cell.hidden_dim;
    const int input = cell.input_dim;
    const int zdim = hidden + input;
    const int steps = static_cast<int>(caches.size());

    BpttResult result;
    result.input_grads = Matrix(steps, input);
    result.param_grads.assign(cell.param_count(), 0.0);

    const size_t np = cell.gate_i.param_count();
    std::span<double> grad_all(result.param_grads);
    std::span<double> g_i = grad_all.subspan(0, np);
    std::span<double> g_f = grad_all.subspan(np, np);
    std::span<double> g_g = grad_all.subspan(2 * np, np);
    std::span<double> g_o = grad_all.subspan(3 * np, np);

    std::vector<double> dh(hidden, 0.0), dc(hidden, 0.0);
    if (!upstream_c_final.empty()) std::copy(upstream_c_final.begin(), upstream_c_final.end(), dc.begin());

    std::vector<double> di(hidden), df(hidden), dg(hidden), do_(hidden), dc_prev(hidden);
    std::vector<double> da(hidden), dz(zdim);

    for (int t = steps - 1; t >= 0; --t) {
        const TkanStepCache& cc = caches[t];
        require(cc.valid && static_cast<int>(cc.gi.size()) == hidden &&
                    static_cast<int>(cc.z.size()) == zdim,
                ErrorCode::invalid_argument, "bptt: cache does not match cell");
        for (int j = 0; j < hidden; ++j) dh[j] += upstream_h(t, j);

        state_update_backward(cc.gi, cc.gf, cc.gg, cc.go, cc.c_prev, cc.tanh_c, dh, dc, di, df,
                              dg, do_, dc_prev);

        std::fill(dz.begin(), dz.end(), 0.0);
        for (int j = 0; j < hidden; ++j) da[j] = di[j] * cc.gi[j] * (1.0 - cc.gi[j]);
        kan_backward(cell.gate_i, cc.kan_i, da, g_i, dz);
        for (int j = 0; j < hidden; ++j) da[j] = df[j] * cc.gf[j] * (1.0 - cc.gf[j]);
        kan_backward(cell.gate_f, cc.kan_f, da, g_f, dz);
        for (int j = 0; j < hidden; ++j) da[j] = dg[j] * (1.0 - cc.gg[j] * cc.gg[j]);
        kan_backward(cell.gate_g, cc.kan_g, da, g_g, dz);
        for (int j = 0; j < hidden; ++j) da[j] = do_[j] * cc.go[j] * (1.0 - cc.go[j]);
        kan_backward(cell.gate_o, cc.kan_o, da, g_o, dz);

        for (int j = 0; j < hidden; ++j) dh[j] = dz[j];
        for (int j = 0; j < input; ++j) result.input_grads(t, j) = dz[hidden + j];
        std::copy(dc_prev.begin(), dc_prev.end(), dc.begin());
    }

    result.initial_state_grads.h = dh;
    result.initial_state_grads.c = dc;
    return result;
}

}  // namespace tkan
