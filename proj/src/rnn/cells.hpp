#pragma once

#include <memory>
#include <span>
#include <vector>

#include "core/matrix.hpp"
#include "core/rng.hpp"
#include "kan/kan_layer.hpp"

namespace tkan {

struct CellState {
    std::vector<double> h;
    std::vector<double> c;
};

CellState zero_state(int hidden_dim);

// Gate concatenation order is hidden-then-input ([h_{t-1}, x_t]) everywhere;
// checkpoints depend on it.

// ---------------------------------------------------------------------------
// LSTM cell with linear gates
// ---------------------------------------------------------------------------
struct LstmCell {
    int input_dim = 0;
    int hidden_dim = 0;
    Matrix W_i, W_f, W_g, W_o;  // hidden x (hidden + input)
    std::vector<double> b_i, b_f, b_g, b_o;

    // Flat layout: W_i, b_i, W_f, b_f, W_g, b_g, W_o, b_o.
    size_t param_count() const noexcept;
    void copy_params(std::span<double> out) const;
    void set_params(std::span<const double> in);
};

LstmCell make_lstm(int input_dim, int hidden_dim);
LstmCell init_lstm(int input_dim, int hidden_dim, RngState& rng);

struct LstmStepCache {
    std::vector<double> z;  // [h_prev, x]
    std::vector<double> gi, gf, gg, go;
    std::vector<double> c_prev, c, tanh_c;
    bool valid = false;
};

CellState lstm_step(const LstmCell& cell, std::span<const double> x, const CellState& prev,
                    LstmStepCache* cache = nullptr);

// ---------------------------------------------------------------------------
// T-KAN cell: the four gates are KAN layers over [h_{t-1}, x_t]
// ---------------------------------------------------------------------------
struct TkanCell {
    int input_dim = 0;
    int hidden_dim = 0;
    KanLayer gate_i, gate_f, gate_g, gate_o;  // (hidden + input) -> hidden

    // Flat layout: gate_i, gate_f, gate_g, gate_o (each in KanLayer layout).
    size_t param_count() const noexcept;
    void copy_params(std::span<double> out) const;
    void set_params(std::span<const double> in);
    const SplineGrid& grid() const { return gate_i.grid(); }
};

TkanCell init_tkan(int input_dim, int hidden_dim, std::shared_ptr<const SplineGrid> grid,
                   RngState& rng);

struct TkanStepCache {
    std::vector<double> z;
    KanCache kan_i, kan_f, kan_g, kan_o;
    std::vector<double> gi, gf, gg, go;
    std::vector<double> c_prev, c, tanh_c;
    bool valid = false;
};

CellState tkan_step(const TkanCell& cell, std::span<const double> x, const CellState& prev,
                    TkanStepCache* cache = nullptr);

// ---------------------------------------------------------------------------
// Unroll over a window and exact backpropagation through time
// ---------------------------------------------------------------------------
template <typename Cache>
struct Unrolled {
    std::vector<CellState> states;  // one per step
    std::vector<Cache> caches;
};

// `sequence` is T x input_dim; steps run left to right from `init`.
Unrolled<LstmStepCache> unroll(const LstmCell& cell, const Matrix& sequence,
                               const CellState& init);
Unrolled<TkanStepCache> unroll(const TkanCell& cell, const Matrix& sequence,
                               const CellState& init);

struct BpttResult {
    std::vector<double> param_grads;  // cell flat layout
    Matrix input_grads;               // T x input_dim
    CellState initial_state_grads;
};

// upstream_h is T x hidden (gradient on every h_t); upstream_c_final, when
// non-empty, is the gradient on c_T.
BpttResult bptt(const LstmCell& cell, const std::vector<LstmStepCache>& caches,
                const Matrix& upstream_h, std::span<const double> upstream_c_final);
BpttResult bptt(const TkanCell& cell, const std::vector<TkanStepCache>& caches,
                const Matrix& upstream_h, std::span<const double> upstream_c_final);

}  // namespace tkan
