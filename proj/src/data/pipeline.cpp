#include "data/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary cache serialization assumes a little-endian host");

namespace tkan {

namespace {

constexpr int kFieldsPerSample = kFeatureDim + 5;

bool is_separator(char c) {
    return c == ' ' || c == '\t' || c == ',' || c == ';' || c == '\r';
}

// Splits one line into doubles; reports the 1-based line and column of the
// first bad token.
void parse_line(const std::string& line, size_t line_no, std::vector<double>& out) {
    out.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
        while (p < end && is_separator(*p)) ++p;
        if (p >= end) break;
        double value = 0.0;
        auto [next, ec] = std::from_chars(p, end, value);
        if (ec != std::errc() || (next < end && !is_separator(*next))) {
            fail(ErrorCode::parse, "non-numeric token at line " + std::to_string(line_no) +
                                       ", column " + std::to_string(p - line.data() + 1));
        }
        out.push_back(value);
        p = next;
    }
}

int remap_label(double raw, size_t sample_no) {
    const double rounded = std::nearbyint(raw);
    if (std::fabs(raw - rounded) > 1e-9 || rounded < 1.0 || rounded > 3.0)
        fail(ErrorCode::parse, "label of sample " + std::to_string(sample_no) +
                                   " is not in {1,2,3}");
    return static_cast<int>(rounded) - 1;
}

uint64_t file_fingerprint(const std::string& path, const std::string& contents) {
    (void)path;
    return fnv1a(contents.data(), contents.size());
}

Dataset from_sample_rows(const std::vector<std::vector<double>>& rows) {
    Dataset data;
    data.features.reserve(rows.size() * kFeatureDim);
    data.labels.reserve(rows.size());
    for (size_t s = 0; s < rows.size(); ++s) {
        const auto& row = rows[s];
        if (static_cast<int>(row.size()) != kFieldsPerSample)
            fail(ErrorCode::parse, "sample " + std::to_string(s + 1) + " has " +
                                       std::to_string(row.size()) + " fields, expected " +
                                       std::to_string(kFieldsPerSample));
        for (int f = 0; f < kFeatureDim; ++f) {
            require(std::isfinite(row[f]), ErrorCode::parse,
                    "non-finite feature in sample " + std::to_string(s + 1));
            data.features.push_back(row[f]);
        }
        std::array<int, 5> lab{};
        for (int h = 0; h < 5; ++h) lab[h] = remap_label(row[kFeatureDim + h], s + 1);
        data.labels.push_back(lab);
    }
    return data;
}

}  // namespace

int horizon_index(int k) {
    for (size_t i = 0; i < kHorizons.size(); ++i)
        if (kHorizons[i] == k) return static_cast<int>(i);
    fail(ErrorCode::missing_horizon,
         "horizon " + std::to_string(k) + " not available (have 10,20,30,50,100)");
}

Dataset load_fi2010(const std::string& path, FileLayout layout) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open data file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string contents = buf.str();

    std::vector<std::vector<double>> rows;
    std::vector<double> current;
    size_t line_no = 0;
    size_t start = 0;
    while (start <= contents.size()) {
        const size_t nl = contents.find('\n', start);
        const size_t stop = (nl == std::string::npos) ? contents.size() : nl;
        ++line_no;
        const std::string line = contents.substr(start, stop - start);
        parse_line(line, line_no, current);
        if (!current.empty()) rows.push_back(current);
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    require(!rows.empty(), ErrorCode::empty_input, "data file has no numeric content: " + path);

    Dataset data;
    if (layout == FileLayout::rows_are_samples) {
        data = from_sample_rows(rows);
    } else {
        // rows_are_features: 149 rows, one column per sample.
        if (static_cast<int>(rows.size()) != kFieldsPerSample)
            fail(ErrorCode::parse, "rows_are_features layout expects " +
                                       std::to_string(kFieldsPerSample) + " rows, found " +
                                       std::to_string(rows.size()));
        const size_t n = rows[0].size();
        for (size_t r = 1; r < rows.size(); ++r)
            if (rows[r].size() != n)
                fail(ErrorCode::parse, "row " + std::to_string(r + 1) + " has " +
                                           std::to_string(rows[r].size()) +
                                           " columns, expected " + std::to_string(n));
        std::vector<std::vector<double>> samples(n, std::vector<double>(kFieldsPerSample));
        for (int f = 0; f < kFieldsPerSample; ++f)
            for (size_t s = 0; s < n; ++s) samples[s][f] = rows[f][s];
        data = from_sample_rows(samples);
    }
    data.fingerprint = file_fingerprint(path, contents);
    return data;
}

NormStats zscore_fit(const Dataset& data) {
    require(data.size() >= 2, ErrorCode::invalid_argument,
            "zscore_fit needs at least 2 snapshots");
    const int fd = data.feature_dim;
    const size_t n = data.size();
    NormStats stats;
    stats.mean.assign(fd, 0.0);
    stats.stddev.assign(fd, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const auto row = data.snapshot(i);
        for (int f = 0; f < fd; ++f) stats.mean[f] += row[f];
    }
    for (int f = 0; f < fd; ++f) stats.mean[f] /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        const auto row = data.snapshot(i);
        for (int f = 0; f < fd; ++f) {
            const double d = row[f] - stats.mean[f];
            stats.stddev[f] += d * d;
        }
    }
    for (int f = 0; f < fd; ++f) {
        stats.stddev[f] = std::sqrt(stats.stddev[f] / static_cast<double>(n));
        if (stats.stddev[f] == 0.0) {
            stats.stddev[f] = 1.0;
            stats.constant_features.push_back(f);
        }
    }
    return stats;
}

void zscore_apply(const NormStats& stats, Dataset& data) {
    require(static_cast<int>(stats.mean.size()) == data.feature_dim &&
                stats.stddev.size() == stats.mean.size(),
            ErrorCode::dimension_mismatch, "zscore_apply: stats do not match feature dim");
    const int fd = data.feature_dim;
    for (size_t i = 0; i < data.size(); ++i) {
        double* row = &data.features[i * fd];
        for (int f = 0; f < fd; ++f) row[f] = (row[f] - stats.mean[f]) / stats.stddev[f];
    }
}

std::vector<WindowSample> make_windows(const Dataset& data, int window) {
    require(window >= 1, ErrorCode::invalid_argument, "window length must be >= 1");
    require(data.size() >= static_cast<size_t>(window), ErrorCode::invalid_argument,
            "need at least " + std::to_string(window) + " snapshots, have " +
                std::to_string(data.size()));
    std::vector<WindowSample> out;
    out.reserve(data.size() - window + 1);
    for (size_t e = window - 1; e < data.size(); ++e)
        out.push_back(WindowSample{&data, e, window});
    return out;
}

std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_windows(
    std::span<const WindowSample> samples, double train_fraction) {
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::invalid_argument,
            "train fraction must be in (0, 1)");
    const size_t cut = static_cast<size_t>(samples.size() * train_fraction);
    require(cut >= 1 && cut < samples.size(), ErrorCode::invalid_argument,
            "split leaves an empty side");
    return {std::vector<WindowSample>(samples.begin(), samples.begin() + cut),
            std::vector<WindowSample>(samples.begin() + cut, samples.end())};
}

ClassDistribution class_distribution(std::span<const WindowSample> samples, int horizon_k) {
    require(!samples.empty(), ErrorCode::empty_input, "class_distribution: no samples");
    ClassDistribution dist;
    for (const auto& s : samples) {
        ++dist.counts[static_cast<size_t>(s.label(horizon_k))];
        ++dist.total;
    }
    return dist;
}

Dataset synth_lob(RngState rng, size_t n, const SynthParams& params) {
    const size_t tail = static_cast<size_t>(kHorizons.back());
    require(n >= 110, ErrorCode::invalid_argument,
            "synthetic dataset needs n >= 110 (window + max horizon)");

    RngState mid_rng = rng.split(1);
    RngState feat_rng = rng.split(2);

    // Mid-price walk with a slowly mixing drift; extended past n so the last
    // emitted row still has all five forward labels.
    const size_t total = n + tail;
    std::vector<double> mids(total);
    double mid = params.start_mid;
    double drift = 0.0;
    for (size_t t = 0; t < total; ++t) {
        mids[t] = mid;
        drift = params.momentum * drift + params.drift_scale * mid_rng.normal();
        mid *= 1.0 + params.base_drift + drift + params.volatility * mid_rng.normal();
    }

    Dataset data;
    data.features.resize(n * kFeatureDim);
    data.labels.resize(n);
    data.mids = mids;

    for (size_t t = 0; t < n; ++t) {
        double* row = &data.features[t * kFeatureDim];
        const double m = mids[t];
        // 10 levels of (ask price, ask volume, bid price, bid volume).
        for (int level = 0; level < 10; ++level) {
            const double depth = 1e-4 * (level + 1);
            row[4 * level + 0] = m * (1.0 + depth + 2e-5 * feat_rng.normal());
            row[4 * level + 1] = 50.0 + 20.0 * std::fabs(feat_rng.normal());
            row[4 * level + 2] = m * (1.0 - depth - 2e-5 * feat_rng.normal());
            row[4 * level + 3] = 50.0 + 20.0 * std::fabs(feat_rng.normal());
        }
        // Derived block: short-horizon returns, imbalances, and noise.
        for (int f = 40; f < kFeatureDim; ++f) {
            const int lag = 1 + (f - 40) % 12;
            const double past = mids[t >= static_cast<size_t>(lag) ? t - lag : 0];
            const double ret = (m - past) / past;
            row[f] = 1e4 * ret + 0.25 * feat_rng.normal();
        }
        // Labels from the smoothed forward change per horizon.
        for (size_t h = 0; h < kHorizons.size(); ++h) {
            const int k = kHorizons[h];
            double fwd = 0.0;
            for (int j = 1; j <= k; ++j) fwd += mids[t + j];
            fwd /= k;
            const double rel = (fwd - m) / m;
            data.labels[t][h] = rel > params.label_threshold    ? 0
                                : rel < -params.label_threshold ? 2
                                                                : 1;
        }
    }

    struct FingerprintSeed {
        uint64_t seed, counter;
        size_t n;
        SynthParams p;
    } fs{rng.seed(), rng.counter(), n, params};
    data.fingerprint = fnv1a(&fs, sizeof(fs));
    return data;
}

std::vector<double> dataset_mids(const Dataset& data) {
    if (!data.mids.empty()) return data.mids;
    std::vector<double> mids(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        const auto row = data.snapshot(i);
        mids[i] = 0.5 * (row[0] + row[2]);
    }
    return mids;
}

// ---------------------------------------------------------------------------
// Binary cache: magic, version, dims, features, labels, mids, checksum.
// ---------------------------------------------------------------------------

namespace {

constexpr char kCacheMagic[8] = {'T', 'K', 'A', 'N', 'D', 'A', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& value, const std::string& what) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), ErrorCode::corrupt,
            "cache file truncated while reading " + what);
}

}  // namespace

void save_cache(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open cache file for writing: " + path);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    write_pod<uint32_t>(out, 1u);  // version
    write_pod<uint32_t>(out, static_cast<uint32_t>(data.feature_dim));
    write_pod<uint64_t>(out, data.size());
    write_pod<uint64_t>(out, data.mids.size());

    uint64_t checksum = fnv1a(data.features.data(), data.features.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(data.features.data()),
              static_cast<std::streamsize>(data.features.size() * sizeof(double)));
    std::vector<uint8_t> packed(data.size() * 5);
    for (size_t i = 0; i < data.size(); ++i)
        for (int h = 0; h < 5; ++h) packed[i * 5 + h] = static_cast<uint8_t>(data.labels[i][h]);
    checksum = fnv1a(packed.data(), packed.size(), checksum);
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
    checksum = fnv1a(data.mids.data(), data.mids.size() * sizeof(double), checksum);
    out.write(reinterpret_cast<const char*>(data.mids.data()),
              static_cast<std::streamsize>(data.mids.size() * sizeof(double)));
    write_pod<uint64_t>(out, checksum);
    require(out.good(), ErrorCode::io, "write failed for cache file: " + path);
}

Dataset load_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open cache file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.gcount() == 8 && std::memcmp(magic, kCacheMagic, 8) == 0, ErrorCode::corrupt,
            "not a tkan data cache: " + path);
    uint32_t version = 0, feature_dim = 0;
    uint64_t n = 0, n_mids = 0;
    read_pod(in, version, "version");
    require(version == 1, ErrorCode::version_mismatch,
            "unsupported cache version " + std::to_string(version));
    read_pod(in, feature_dim, "feature dim");
    require(feature_dim == kFeatureDim, ErrorCode::shape_mismatch,
            "cache feature dim " + std::to_string(feature_dim) + " != 144");
    read_pod(in, n, "sample count");
    read_pod(in, n_mids, "mid count");

    Dataset data;
    data.feature_dim = static_cast<int>(feature_dim);
    data.features.resize(n * feature_dim);
    in.read(reinterpret_cast<char*>(data.features.data()),
            static_cast<std::streamsize>(data.features.size() * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(data.features.size() * sizeof(double)),
            ErrorCode::corrupt, "cache file truncated in feature block");
    std::vector<uint8_t> packed(n * 5);
    in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    require(in.gcount() == static_cast<std::streamsize>(packed.size()), ErrorCode::corrupt,
            "cache file truncated in label block");
    data.labels.resize(n);
    for (size_t i = 0; i < n; ++i)
        for (int h = 0; h < 5; ++h) {
            require(packed[i * 5 + h] <= 2, ErrorCode::corrupt, "cache label out of range");
            data.labels[i][h] = packed[i * 5 + h];
        }
    data.mids.resize(n_mids);
    in.read(reinterpret_cast<char*>(data.mids.data()),
            static_cast<std::streamsize>(data.mids.size() * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(data.mids.size() * sizeof(double)),
            ErrorCode::corrupt, "cache file truncated in mid block");

    uint64_t stored = 0;
    read_pod(in, stored, "checksum");
    uint64_t checksum = fnv1a(data.features.data(), data.features.size() * sizeof(double));
    checksum = fnv1a(packed.data(), packed.size(), checksum);
    checksum = fnv1a(data.mids.data(), data.mids.size() * sizeof(double), checksum);
    require(stored == checksum, ErrorCode::corrupt, "cache checksum mismatch: " + path);
    data.fingerprint = checksum;
    return data;
}

}  // namespace tkan
