// Shared test fixtures: the separable 3-cluster task used by the training
// smoke tests and the acceptance suite.
#pragma once

#include <memory>
#include <vector>

#include "core/rng.hpp"
#include "data/pipeline.hpp"

namespace tkan::testutil {

struct ClusterTask {
    std::unique_ptr<Dataset> data;
    std::vector<WindowSample> train;
    std::vector<WindowSample> valid;
};

// Three Gaussian clusters in feature space drive the labels: every window of
// a sample sits near its class mean, so a working pipeline separates them
// quickly. Windows are disjoint blocks, labels identical at all horizons.
inline ClusterTask make_cluster_task(int input_dim, int window, size_t n_samples,
                                     uint64_t seed, double separation = 2.0,
                                     double noise = 0.5) {
    ClusterTask task;
    task.data = std::make_unique<Dataset>();
    Dataset& data = *task.data;
    data.feature_dim = input_dim;
    data.features.assign(n_samples * window * input_dim, 0.0);
    data.labels.assign(n_samples * window, {1, 1, 1, 1, 1});

    RngState dir_rng = RngState(seed).split(1);
    std::vector<std::vector<double>> means(3, std::vector<double>(input_dim));
    for (int c = 0; c < 3; ++c)
        for (int f = 0; f < input_dim; ++f) means[c][f] = separation * dir_rng.uniform(-1, 1);

    RngState rng = RngState(seed).split(2);
    std::vector<WindowSample> all;
    for (size_t i = 0; i < n_samples; ++i) {
        const int cls = static_cast<int>(rng.next_u64() % 3);
        const size_t row0 = i * window;
        for (int t = 0; t < window; ++t) {
            double* row = &data.features[(row0 + t) * input_dim];
            for (int f = 0; f < input_dim; ++f)
                row[f] = means[cls][f] + noise * rng.normal();
        }
        const size_t end = row0 + window - 1;
        data.labels[end] = {cls, cls, cls, cls, cls};
        all.push_back(WindowSample{&data, end, window});
    }

    const size_t cut = n_samples * 4 / 5;
    task.train.assign(all.begin(), all.begin() + cut);
    task.valid.assign(all.begin() + cut, all.end());
    return task;
}

}  // namespace tkan::testutil
