#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "data/pipeline.hpp"

using namespace tkan;

namespace {

// One toy sample line: 144 features then 5 labels.
std::string sample_line(double base, const std::array<int, 5>& labels) {
    std::ostringstream out;
    for (int f = 0; f < kFeatureDim; ++f) out << base + f << ' ';
    for (int h = 0; h < 5; ++h) out << labels[h] << (h < 4 ? " " : "");
    return out.str();
}

std::filesystem::path write_temp(const std::string& name, const std::string& contents) {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "tkan_data_test";
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / name;
    std::ofstream out(path);
    out << contents;
    return path;
}

// Independent re-implementation of the synthetic labeler, straight from the
// definition: mean of the next k mids vs +-alpha.
int oracle_label(const std::vector<double>& mids, size_t t, int k, double alpha) {
    double fwd = 0.0;
    for (int j = 1; j <= k; ++j) fwd += mids[t + j];
    fwd /= k;
    const double rel = (fwd - mids[t]) / mids[t];
    if (rel > alpha) return 0;
    if (rel < -alpha) return 2;
    return 1;
}

}  // namespace

TEST_CASE("load_fi2010 parses and remaps labels") {
    const std::string contents = sample_line(1.0, {1, 2, 3, 1, 2}) + "\n" +
                                 sample_line(2.0, {2, 2, 2, 2, 2}) + "\n" +
                                 sample_line(3.0, {3, 1, 1, 3, 1}) + "\n";
    const auto path = write_temp("ok.txt", contents);
    const Dataset data = load_fi2010(path.string(), FileLayout::rows_are_samples);
    REQUIRE(data.size() == 3);
    CHECK(data.labels[0] == std::array<int, 5>{0, 1, 2, 0, 1});
    CHECK(data.labels[1] == std::array<int, 5>{1, 1, 1, 1, 1});
    CHECK(data.labels[2] == std::array<int, 5>{2, 0, 0, 2, 0});
    CHECK(data.snapshot(1)[0] == 2.0);
    CHECK(data.snapshot(1)[143] == 145.0);
    CHECK(data.fingerprint != 0);
}

TEST_CASE("load_fi2010 error taxonomy") {
    SUBCASE("wrong field count names the offending sample") {
        std::ostringstream bad;
        for (int f = 0; f < 148; ++f) bad << f << ' ';
        const auto path = write_temp("short.txt", sample_line(1.0, {1, 1, 1, 1, 1}) + "\n" +
                                                      bad.str() + "\n");
        try {
            load_fi2010(path.string(), FileLayout::rows_are_samples);
            FAIL("expected a parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse);
            CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
        }
    }
    SUBCASE("non-numeric token reports line and column") {
        const auto path = write_temp("token.txt", "1.0 2.0 banana 4.0\n");
        try {
            load_fi2010(path.string(), FileLayout::rows_are_samples);
            FAIL("expected a parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse);
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }
    SUBCASE("empty file") {
        const auto path = write_temp("empty.txt", "\n\n");
        try {
            load_fi2010(path.string(), FileLayout::rows_are_samples);
            FAIL("expected an empty-input error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::empty_input);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_fi2010("/nonexistent/tkan.txt", FileLayout::rows_are_samples),
                        Error);
    }
    SUBCASE("label outside {1,2,3}") {
        const auto path = write_temp("label.txt", sample_line(1.0, {1, 1, 7, 1, 1}) + "\n");
        CHECK_THROWS_AS(load_fi2010(path.string(), FileLayout::rows_are_samples), Error);
    }
}

TEST_CASE("loader survives fuzzed byte strings with typed errors only") {
    RngState rng(999);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t len = rng.next_u64() % 400;
        std::string junk(len, '\0');
        for (char& c : junk) c = static_cast<char>(rng.next_u64() % 256);
        const auto path = write_temp("fuzz.bin", junk);
        for (FileLayout layout : {FileLayout::rows_are_samples, FileLayout::rows_are_features}) {
            try {
                (void)load_fi2010(path.string(), layout);
            } catch (const Error&) {
                // typed errors are the contract; anything else fails the test
            }
        }
        try {
            (void)load_cache(path.string());
        } catch (const Error&) {
        }
    }
    CHECK(true);
}

TEST_CASE("transposed layout round trip") {
    // Build one toy dataset, encode it in both orientations, load both.
    const int n = 4;
    std::vector<std::vector<double>> fields(n);
    for (int s = 0; s < n; ++s) {
        for (int f = 0; f < kFeatureDim; ++f) fields[s].push_back(10.0 * s + f * 0.25);
        for (int h = 0; h < 5; ++h) fields[s].push_back(1 + (s + h) % 3);
    }
    std::ostringstream rows_samples, rows_features;
    for (int s = 0; s < n; ++s) {
        for (size_t f = 0; f < fields[s].size(); ++f)
            rows_samples << fields[s][f] << (f + 1 < fields[s].size() ? " " : "");
        rows_samples << "\n";
    }
    for (size_t f = 0; f < fields[0].size(); ++f) {
        for (int s = 0; s < n; ++s) rows_features << fields[s][f] << (s + 1 < n ? " " : "");
        rows_features << "\n";
    }
    const auto pa = write_temp("a.txt", rows_samples.str());
    const auto pb = write_temp("b.txt", rows_features.str());
    const Dataset da = load_fi2010(pa.string(), FileLayout::rows_are_samples);
    const Dataset db = load_fi2010(pb.string(), FileLayout::rows_are_features);
    REQUIRE(da.size() == db.size());
    CHECK(da.features == db.features);
    CHECK(da.labels == db.labels);
}

TEST_CASE("zscore") {
    SUBCASE("feature {1,3} standardizes to {-1,+1} with population sigma") {
        Dataset data;
        data.features.assign(2 * kFeatureDim, 0.0);
        data.labels.resize(2);
        data.features[0] = 1.0;
        data.features[kFeatureDim] = 3.0;
        const NormStats stats = zscore_fit(data);
        CHECK(stats.mean[0] == 2.0);
        CHECK(stats.stddev[0] == 1.0);
        zscore_apply(stats, data);
        CHECK(data.features[0] == -1.0);
        CHECK(data.features[kFeatureDim] == 1.0);
    }
    SUBCASE("constant features fall back to sigma 1 and are reported") {
        Dataset data;
        data.features.assign(3 * kFeatureDim, 5.0);
        data.labels.resize(3);
        const NormStats stats = zscore_fit(data);
        CHECK(stats.constant_features.size() == static_cast<size_t>(kFeatureDim));
        zscore_apply(stats, data);
        for (double v : data.features) CHECK(v == 0.0);
    }
    SUBCASE("single snapshot is rejected") {
        Dataset data;
        data.features.assign(kFeatureDim, 1.0);
        data.labels.resize(1);
        CHECK_THROWS_AS(zscore_fit(data), Error);
    }
    SUBCASE("fit-then-apply re-standardizes to mean 0, sd 1") {
        RngState rng(4);
        Dataset data = synth_lob(rng, 300);
        const NormStats stats = zscore_fit(data);
        zscore_apply(stats, data);
        for (int f = 0; f < kFeatureDim; f += 17) {
            double mean = 0.0, var = 0.0;
            for (size_t i = 0; i < data.size(); ++i) mean += data.snapshot(i)[f];
            mean /= static_cast<double>(data.size());
            for (size_t i = 0; i < data.size(); ++i) {
                const double d = data.snapshot(i)[f] - mean;
                var += d * d;
            }
            var /= static_cast<double>(data.size());
            CHECK(std::fabs(mean) < 1e-10);
            CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("make_windows") {
    RngState rng(5);
    Dataset data = synth_lob(rng, 120);
    SUBCASE("window count is N - T + 1") {
        CHECK(make_windows(data, 10).size() == 111);
        CHECK(make_windows(data, 120).size() == 1);
    }
    SUBCASE("too few snapshots is a typed error") {
        CHECK_THROWS_AS(make_windows(data, 121), Error);
    }
    SUBCASE("rows are the consecutive snapshots ending at the label row") {
        const auto windows = make_windows(data, 10);
        const WindowSample& w = windows[37];
        CHECK(w.end_index == 46);
        for (int t = 0; t < 10; ++t)
            for (int f = 0; f < 5; ++f)
                CHECK(w.x(t, f) == data.snapshot(37 + t)[f]);
        CHECK(w.labels() == data.labels[46]);
        CHECK(w.label(100) == data.labels[46][4]);
        CHECK_THROWS_AS(w.label(25), Error);
    }
}

TEST_CASE("toy index bookkeeping on a 12-snapshot series") {
    Dataset data;
    data.labels.resize(12);
    data.features.resize(12 * kFeatureDim);
    for (int i = 0; i < 12; ++i) data.features[i * kFeatureDim] = i;  // row tag
    const auto windows = make_windows(data, 10);
    REQUIRE(windows.size() == 3);  // ends at rows 9, 10, 11
    for (size_t w = 0; w < 3; ++w) {
        CHECK(windows[w].end_index == 9 + w);
        for (int t = 0; t < 10; ++t) CHECK(windows[w].x(t, 0) == static_cast<double>(w + t));
    }
}

TEST_CASE("class_distribution") {
    Dataset data;
    data.labels = {{0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {2, 2, 2, 2, 2}};
    data.features.resize(4 * kFeatureDim);
    const auto windows = make_windows(data, 1);
    const ClassDistribution dist = class_distribution(windows, 10);
    CHECK(dist.counts[0] == 1);
    CHECK(dist.counts[1] == 2);
    CHECK(dist.counts[2] == 1);
    CHECK(dist.total == 4);
}

TEST_CASE("split_windows is contiguous and order-preserving") {
    RngState rng(6);
    Dataset data = synth_lob(rng, 150);
    const auto windows = make_windows(data, 10);
    const auto [train, valid] = split_windows(windows, 0.8);
    CHECK(train.size() + valid.size() == windows.size());
    CHECK(train.size() == static_cast<size_t>(windows.size() * 0.8));
    CHECK(train.back().end_index + 1 == valid.front().end_index);
}

TEST_CASE("synth_lob") {
    SUBCASE("labels match an independent re-implementation") {
        RngState rng(2024);
        const SynthParams params;
        const Dataset data = synth_lob(rng, 200, params);
        REQUIRE(data.mids.size() >= data.size() + 100);
        for (size_t t = 0; t < 100; ++t)
            for (size_t h = 0; h < kHorizons.size(); ++h)
                CHECK(data.labels[t][h] ==
                      oracle_label(data.mids, t, kHorizons[h], params.label_threshold));
    }
    SUBCASE("zero volatility flat walk labels everything neutral") {
        SynthParams params;
        params.volatility = 0.0;
        params.drift_scale = 0.0;
        const Dataset data = synth_lob(RngState(1), 150, params);
        for (const auto& lab : data.labels)
            for (int h = 0; h < 5; ++h) CHECK(lab[h] == 1);
    }
    SUBCASE("strong deterministic upward drift labels everything up") {
        SynthParams params;
        params.volatility = 0.0;
        params.drift_scale = 0.0;
        params.base_drift = 1e-3;  // 20x the label threshold
        const Dataset data = synth_lob(RngState(1), 150, params);
        for (const auto& lab : data.labels)
            for (int h = 0; h < 5; ++h) CHECK(lab[h] == 0);
    }
    SUBCASE("n below window + max horizon is rejected") {
        CHECK_THROWS_AS(synth_lob(RngState(1), 50), Error);
    }
    SUBCASE("no look-ahead: window rows precede the label rows structurally") {
        RngState rng(77);
        const Dataset data = synth_lob(rng, 160);
        const auto windows = make_windows(data, 10);
        for (const auto& w : windows) {
            // every feature row index <= end_index; labels derive from mids
            // at indices > end_index only
            CHECK(w.end_index >= 9);
            CHECK(w.end_index < data.size());
        }
        // flipping the future mids flips labels but leaves features intact
        Dataset mutated = data;
        for (size_t t = data.size(); t < mutated.mids.size(); ++t)
            mutated.mids[t] = mutated.mids[data.size() - 1];
        CHECK(mutated.features == data.features);
    }
}

TEST_CASE("dataset_mids falls back to the level-1 quote midpoint") {
    Dataset data;
    data.labels.resize(2);
    data.features.assign(2 * kFeatureDim, 0.0);
    data.features[0] = 101.0;  // ask
    data.features[2] = 99.0;   // bid
    data.features[kFeatureDim + 0] = 103.0;
    data.features[kFeatureDim + 2] = 101.0;
    const auto mids = dataset_mids(data);
    CHECK(mids[0] == 100.0);
    CHECK(mids[1] == 102.0);
    data.mids = {55.0, 56.0};
    CHECK(dataset_mids(data)[0] == 55.0);
}

TEST_CASE("binary cache round trip and corruption detection") {
    RngState rng(8);
    const Dataset data = synth_lob(rng, 140);
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "tkan_data_test";
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / "cache.bin";
    save_cache(data, path.string());
    const Dataset loaded = load_cache(path.string());
    CHECK(loaded.features == data.features);
    CHECK(loaded.labels == data.labels);
    CHECK(loaded.mids == data.mids);

    // flip one payload byte: checksum must catch it
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    bytes[bytes.size() / 2] ^= 0x40;
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
        load_cache(path.string());
        FAIL("expected a corrupt error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::corrupt);
    }
}
