#include "eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

namespace tkan {

void ConfusionMatrix::add(int truth, int predicted) {
    require(truth >= 0 && truth < 3 && predicted >= 0 && predicted < 3, ErrorCode::out_of_range,
            "confusion matrix class out of range");
    ++m[truth][predicted];
    ++total;
}

ConfusionMatrix confusion_from_pairs(std::span<const int> truth, std::span<const int> predicted) {
    require(truth.size() == predicted.size(), ErrorCode::dimension_mismatch,
            "confusion_from_pairs: length mismatch");
    ConfusionMatrix cm;
    for (size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    require(cm.total > 0, ErrorCode::empty_input, "metrics: empty confusion matrix");
    MetricsReport report;
    for (int c = 0; c < 3; ++c) {
        const double tp = static_cast<double>(cm.m[c][c]);
        double col = 0.0, row = 0.0;
        for (int j = 0; j < 3; ++j) {
            col += static_cast<double>(cm.m[j][c]);
            row += static_cast<double>(cm.m[c][j]);
        }
        ClassMetrics& out = report.per_class[c];
        out.precision = col > 0.0 ? tp / col : 0.0;
        out.recall = row > 0.0 ? tp / row : 0.0;
        out.f1 = (out.precision + out.recall) > 0.0
                     ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                     : 0.0;
        report.macro_precision += out.precision / 3.0;
        report.macro_recall += out.recall / 3.0;
        report.macro_f1 += out.f1 / 3.0;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Spearman IC
// ---------------------------------------------------------------------------

namespace {

std::vector<double> fractional_ranks(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::invalid_argument,
            "information_coefficient: constant input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double information_coefficient(std::span<const double> signal,
                               std::span<const double> forward_returns) {
    require(signal.size() == forward_returns.size(), ErrorCode::dimension_mismatch,
            "information_coefficient: length mismatch");
    require(signal.size() >= 3, ErrorCode::invalid_argument,
            "information_coefficient: need at least 3 observations");
    const std::vector<double> rs = fractional_ranks(signal);
    const std::vector<double> rr = fractional_ranks(forward_returns);
    return pearson(rs, rr);
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

std::array<double, 3> softmax3(std::span<const double> logits) {
    require(logits.size() == 3, ErrorCode::dimension_mismatch, "softmax3 expects 3 logits");
    const double mx = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> p{};
    double z = 0.0;
    for (int j = 0; j < 3; ++j) {
        p[j] = std::exp(logits[j] - mx);
        z += p[j];
    }
    for (int j = 0; j < 3; ++j) p[j] /= z;
    return p;
}

int argmax_class(const std::array<double, 3>& probs) {
    int best = 0;
    for (int j = 1; j < 3; ++j)
        if (probs[j] > probs[best]) best = j;
    if (probs[1] == probs[best]) return 1;
    return best;
}

Prediction predict(const Forecaster& model, const WindowSample& sample) {
    const std::array<double, 3> logits = forward(model, sample);
    Prediction pred;
    pred.probs = softmax3(logits);
    pred.cls = argmax_class(pred.probs);
    return pred;
}

std::vector<Prediction> predict_all(const Forecaster& model,
                                    std::span<const WindowSample> samples) {
    std::vector<Prediction> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict(model, s));
    return out;
}

// ---------------------------------------------------------------------------
// Alpha decay
// ---------------------------------------------------------------------------

DecayCurve alpha_decay(const Predictor& predictor, std::span<const WindowSample> samples,
                       std::span<const double> mids, std::span<const int> horizons) {
    require(!samples.empty(), ErrorCode::empty_input, "alpha_decay: no samples");
    require(!horizons.empty(), ErrorCode::empty_input, "alpha_decay: no horizons");

    std::vector<Prediction> preds;
    preds.reserve(samples.size());
    for (const auto& s : samples) {
        Prediction p;
        p.probs = predictor(s);
        p.cls = argmax_class(p.probs);
        preds.push_back(p);
    }

    std::vector<int> ks(horizons.begin(), horizons.end());
    std::sort(ks.begin(), ks.end());

    DecayCurve curve;
    for (int k : ks) {
        DecayPoint point;
        point.horizon = k;

        std::vector<int> truth(samples.size()), cls(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            truth[i] = samples[i].label(k);  // missing horizon -> typed error
            cls[i] = preds[i].cls;
        }
        point.macro_f1 = metrics(confusion_from_pairs(truth, cls)).macro_f1;

        if (mids.empty()) {
            point.ic = std::numeric_limits<double>::quiet_NaN();
        } else {
            std::vector<double> signal, realized;
            for (size_t i = 0; i < samples.size(); ++i) {
                const size_t e = samples[i].end_index;
                if (e + k >= mids.size()) continue;
                signal.push_back(preds[i].probs[0] - preds[i].probs[2]);
                realized.push_back((mids[e + k] - mids[e]) / mids[e]);
            }
            point.ic = information_coefficient(signal, realized);
        }
        curve.points.push_back(point);
    }
    return curve;
}

DecayCurve alpha_decay(const Forecaster& model, std::span<const WindowSample> samples,
                       std::span<const double> mids, std::span<const int> horizons) {
    return alpha_decay(
        [&model](const WindowSample& s) { return softmax3(forward(model, s)); }, samples, mids,
        horizons);
}

// ---------------------------------------------------------------------------
// Backtest
// ---------------------------------------------------------------------------

BacktestLedger backtest(std::span<const int> predictions, std::span<const double> mids,
                        const BacktestConfig& cfg) {
    require(cfg.cost_bps >= 0.0, ErrorCode::invalid_argument, "cost_bps must be >= 0");
    require(mids.size() >= 2, ErrorCode::invalid_argument, "backtest: need at least 2 mids");
    require(predictions.size() == mids.size() - 1, ErrorCode::dimension_mismatch,
            "backtest: predictions length must be mids length - 1");
    for (double m : mids)
        require(std::isfinite(m) && m > 0.0, ErrorCode::invalid_argument,
                "backtest: mid prices must be positive (got " + std::to_string(m) + ")");

    BacktestLedger ledger;
    ledger.rows.reserve(predictions.size());
    double equity = cfg.initial_equity;
    int prev_position = 0;
    for (size_t t = 0; t < predictions.size(); ++t) {
        const int cls = predictions[t];
        require(cls >= 0 && cls < 3, ErrorCode::out_of_range, "backtest: class out of range");
        const int pos = cfg.position_map[cls];
        const double gross = pos * (mids[t + 1] - mids[t]) / mids[t];
        const double cost = cfg.cost_bps * 1e-4 * std::abs(pos - prev_position);
        const double r = gross - cost;
        equity *= 1.0 + r;
        ledger.rows.push_back(LedgerRow{mids[t], pos, r, cost,
                                        equity / cfg.initial_equity - 1.0});
        prev_position = pos;
    }
    ledger.terminal_return_pct = (equity / cfg.initial_equity - 1.0) * 100.0;
    return ledger;
}

BacktestLedger model_backtest(const Forecaster& model, std::span<const WindowSample> samples,
                              std::span<const double> mids, const BacktestConfig& cfg) {
    require(samples.size() >= 2, ErrorCode::invalid_argument,
            "model_backtest: need at least 2 windows");
    // Trade every window whose next mid exists; window ends are consecutive.
    const size_t first_end = samples.front().end_index;
    size_t usable = 0;
    while (usable < samples.size() && samples[usable].end_index + 1 < mids.size()) ++usable;
    require(usable >= 1, ErrorCode::invalid_argument,
            "model_backtest: mid series does not cover the windows");

    std::vector<int> preds(usable);
    for (size_t i = 0; i < usable; ++i) preds[i] = predict(model, samples[i]).cls;
    std::span<const double> mid_slice = mids.subspan(first_end, usable + 1);
    return backtest(preds, mid_slice, cfg);
}

}  // namespace tkan
