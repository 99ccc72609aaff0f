#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace tkan {

// Forecast horizons carried by the dataset label columns, ascending.
inline constexpr std::array<int, 5> kHorizons{10, 20, 30, 50, 100};
inline constexpr int kFeatureDim = 144;

// Index of k in kHorizons; missing horizons are a typed error.
int horizon_index(int k);

// Snapshots (n x 144, row-major), per-row labels for the five horizons
// (classes 0=up, 1=neutral, 2=down), and optionally a mid-price series.
// `mids` may be longer than the snapshot count (the synthetic generator keeps
// the forward tail used to label the last rows).
struct Dataset {
    int feature_dim = kFeatureDim;
    std::vector<double> features;
    std::vector<std::array<int, 5>> labels;
    std::vector<double> mids;
    uint64_t fingerprint = 0;

    size_t size() const noexcept { return labels.size(); }
    std::span<const double> snapshot(size_t i) const {
        return std::span<const double>(features).subspan(i * feature_dim, feature_dim);
    }
};

enum class FileLayout { rows_are_samples, rows_are_features };

// FI-2010-format numeric text: 149 values per sample (144 features + 5
// horizon labels in {1,2,3}, remapped to {0,1,2}). Both orientations occur in
// circulating copies, hence the layout flag. Malformed input yields typed
// errors naming the line/sample; the loader never crashes on garbage bytes.
Dataset load_fi2010(const std::string& path, FileLayout layout);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<int> constant_features;  // sigma fell back to 1 for these
};

// Per-feature mean and population standard deviation. Fit on the training
// split only; apply never re-fits.
NormStats zscore_fit(const Dataset& data);
void zscore_apply(const NormStats& stats, Dataset& data);

// A T x 144 view into the dataset ending at snapshot `end_index`, plus the
// label row at the window end. Windows are views; the dataset must outlive
// them.
struct WindowSample {
    const Dataset* data = nullptr;
    size_t end_index = 0;
    int window = 0;

    std::span<const double> flat() const {
        const size_t start = (end_index + 1 - window) * data->feature_dim;
        return std::span<const double>(data->features)
            .subspan(start, static_cast<size_t>(window) * data->feature_dim);
    }
    std::span<const double> row(int t) const {
        return data->snapshot(end_index + 1 - window + t);
    }
    double x(int t, int f) const { return row(t)[f]; }
    const std::array<int, 5>& labels() const { return data->labels[end_index]; }
    int label(int horizon_k) const { return labels()[horizon_index(horizon_k)]; }
};

// Stride-1 windows; one sample per end position in [T-1, N-1].
std::vector<WindowSample> make_windows(const Dataset& data, int window);

// Contiguous prefix/suffix split (time order preserved, never shuffled).
std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_windows(
    std::span<const WindowSample> samples, double train_fraction);

struct ClassDistribution {
    std::array<size_t, 3> counts{};
    size_t total = 0;
};

ClassDistribution class_distribution(std::span<const WindowSample> samples, int horizon_k);

struct SynthParams {
    double label_threshold = 5e-5;  // alpha, on the smoothed relative mid change
    double volatility = 2e-4;       // per-step noise scale
    double momentum = 0.97;         // drift persistence per step
    double drift_scale = 3e-5;      // innovation scale of the drift
    double base_drift = 0.0;        // constant per-step relative drift
    double start_mid = 100.0;
};

// Mid-price random walk with momentum regimes; level prices/volumes are noisy
// functions of the mid. Labels per horizon k compare the mean of the next k
// mids against +-label_threshold (0 up, 1 neutral, 2 down). Requires
// n >= 110 so at least one full window of every horizon is labeled.
Dataset synth_lob(RngState rng, size_t n, const SynthParams& params = {});

// Mid series for trading: the stored one when present, else the raw-price
// convention (feature[0] + feature[2]) / 2 (best ask/bid of level 1).
std::vector<double> dataset_mids(const Dataset& data);

// Binary snapshot cache (little-endian, checksummed) to skip re-parsing text.
void save_cache(const Dataset& data, const std::string& path);
Dataset load_cache(const std::string& path);

}  // namespace tkan
