#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "data/pipeline.hpp"
#include "model/forecaster.hpp"

namespace tkan {

// ---------------------------------------------------------------------------
// Classification metrics
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    std::array<std::array<size_t, 3>, 3> m{};  // [true][predicted]
    size_t total = 0;

    void add(int truth, int predicted);
};

ConfusionMatrix confusion_from_pairs(std::span<const int> truth, std::span<const int> predicted);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::array<ClassMetrics, 3> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Zero-denominator cells yield 0, so degenerate matrices stay well-defined.
MetricsReport metrics(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Information coefficient and alpha decay
// ---------------------------------------------------------------------------

// Spearman rank correlation between the signal and realized forward returns
// (average ranks on ties). Constant inputs are a typed error.
double information_coefficient(std::span<const double> signal,
                               std::span<const double> forward_returns);

std::array<double, 3> softmax3(std::span<const double> logits);

struct Prediction {
    std::array<double, 3> probs{};
    int cls = 1;
};

// argmax over probabilities; exact ties resolve to neutral (no trade).
int argmax_class(const std::array<double, 3>& probs);

using Predictor = std::function<std::array<double, 3>(const WindowSample&)>;

Prediction predict(const Forecaster& model, const WindowSample& sample);
std::vector<Prediction> predict_all(const Forecaster& model,
                                    std::span<const WindowSample> samples);

struct DecayPoint {
    int horizon = 0;
    double ic = 0.0;
    double macro_f1 = 0.0;
};

struct DecayCurve {
    std::vector<DecayPoint> points;  // ascending horizons
};

// One (IC, macro F1) pair per horizon from a single prediction pass. The
// signal is p_up - p_down; its IC is measured against the realized k-step
// forward mid return. With an empty mid series IC is NaN and only F1 is
// reported.
DecayCurve alpha_decay(const Predictor& predictor, std::span<const WindowSample> samples,
                       std::span<const double> mids, std::span<const int> horizons);
DecayCurve alpha_decay(const Forecaster& model, std::span<const WindowSample> samples,
                       std::span<const double> mids, std::span<const int> horizons);

// ---------------------------------------------------------------------------
// Transaction-cost backtest
// ---------------------------------------------------------------------------

struct BacktestConfig {
    double cost_bps = 1.0;
    std::array<int, 3> position_map{+1, 0, -1};  // class -> position
    double initial_equity = 1.0;
};

struct LedgerRow {
    double mid = 0.0;
    int position = 0;
    double step_return = 0.0;
    double cost_paid = 0.0;
    double cum_return = 0.0;
};

struct BacktestLedger {
    std::vector<LedgerRow> rows;
    double terminal_return_pct = 0.0;
};

// The position set from prediction t applies to the move from mid_t to
// mid_{t+1}; cost is charged on position change (turnover), one-sided, and
// returns compound multiplicatively. Requires predictions.size() ==
// mids.size() - 1 and positive prices.
BacktestLedger backtest(std::span<const int> predictions, std::span<const double> mids,
                        const BacktestConfig& cfg);

// Runs the model over consecutive windows and trades the resulting classes
// against the dataset's mid series.
BacktestLedger model_backtest(const Forecaster& model, std::span<const WindowSample> samples,
                              std::span<const double> mids, const BacktestConfig& cfg);

}  // namespace tkan
