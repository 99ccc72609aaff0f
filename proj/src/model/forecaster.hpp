#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "data/pipeline.hpp"
#include "kan/kan_layer.hpp"
#include "rnn/cells.hpp"

namespace tkan {

enum class Variant { tkan_head, tkan_gated, deeplob_lite };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct GridSpec {
    int order = 3;
    int intervals = 5;
    double lo = -3.0;
    double hi = 3.0;
};

struct ModelConfig {
    Variant variant = Variant::tkan_head;
    int input_dim = kFeatureDim;
    int window = 10;
    int hidden_dim = 64;
    int encoder_layers = 2;
    int head_hidden = 16;
    bool head_concat = false;  // feed [h_T, c_T] of every encoder layer to the head
    int class_count = 3;
    GridSpec grid;
    int conv_channels = 4;  // deeplob_lite stages

    void validate() const;
};

// ---------------------------------------------------------------------------
// Convolution stage for the deeplob_lite baseline
// ---------------------------------------------------------------------------

// Plain [channels][rows][cols] dense block.
struct Tensor3 {
    int channels = 0, rows = 0, cols = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int c, int r, int w)
        : channels(c), rows(r), cols(w),
          data(static_cast<size_t>(c) * r * w, 0.0) {}
    double& at(int c, int r, int w) noexcept {
        return data[(static_cast<size_t>(c) * rows + r) * cols + w];
    }
    double at(int c, int r, int w) const noexcept {
        return data[(static_cast<size_t>(c) * rows + r) * cols + w];
    }
};

// Valid (unpadded) 2D convolution. Kernel shapes are restricted to the two
// the baseline uses: 1x2 (spread pairing) and 4x1 (depth aggregation).
struct ConvKernel {
    int height = 1, width = 1;
    int in_channels = 1, out_channels = 1;
    int stride_h = 1, stride_w = 1;
    std::vector<double> weights;  // [oc][ic][kh][kw]
    std::vector<double> bias;     // [oc]

    ConvKernel() = default;
    ConvKernel(int kh, int kw, int in_ch, int out_ch, int sh, int sw);

    size_t param_count() const noexcept { return weights.size() + bias.size(); }
    size_t weight_index(int oc, int ic, int kh, int kw) const noexcept {
        return ((static_cast<size_t>(oc) * in_channels + ic) * height + kh) * width + kw;
    }
};

Tensor3 conv2d(const ConvKernel& k, const Tensor3& in);
// Accumulates parameter gradients (weights then bias, kernel layout) and the
// input gradient.
void conv2d_backward(const ConvKernel& k, const Tensor3& in, const Tensor3& dout,
                     std::span<double> grad_params, Tensor3& din);

// ---------------------------------------------------------------------------
// Forecaster: a complete 3-class model in one of three wirings
// ---------------------------------------------------------------------------

struct ParamBlock {
    std::string name;
    size_t offset = 0;
    size_t size = 0;
    bool spline_coeff = false;
};

struct ModelForwardCache {
    bool valid = false;
    // recurrent encoders
    std::vector<Matrix> layer_inputs;  // sequence fed to each recurrent layer
    std::vector<std::vector<LstmStepCache>> lstm_caches;
    std::vector<std::vector<TkanStepCache>> tkan_caches;
    std::vector<CellState> final_states;
    // KAN head
    std::vector<std::vector<double>> head_inputs;  // input vector per head layer
    std::vector<KanCache> head_caches;
    // linear head
    std::vector<double> linear_in;
    // deeplob conv stack
    std::vector<Tensor3> conv_in;   // input of each stage
    std::vector<Tensor3> conv_pre;  // pre-activation output of each stage
    std::array<double, 3> logits{};
};

class Forecaster {
public:
    Forecaster(const ModelConfig& config, uint64_t seed);

    const ModelConfig& config() const noexcept { return cfg_; }
    std::shared_ptr<const SplineGrid> grid() const { return grid_; }

    size_t param_count() const noexcept { return param_count_; }
    const std::vector<ParamBlock>& registry() const noexcept { return registry_; }
    void copy_params(std::span<double> out) const;
    void set_params(std::span<const double> in);

    // KAN layers in registry order (head layers for tkan_head, the four gates
    // of each cell for tkan_gated, none for deeplob_lite).
    size_t kan_layer_count() const noexcept { return kan_refs_.size(); }
    const KanLayer& kan_layer(size_t idx) const;
    double l1_total() const;

    int head_input_width() const;

    const std::vector<LstmCell>& lstm_layers() const noexcept { return lstm_; }
    const std::vector<TkanCell>& tkan_layers() const noexcept { return tkan_; }
    const std::vector<KanLayer>& head_kan() const noexcept { return head_kan_; }
    const Matrix& linear_w() const noexcept { return linear_w_; }
    const std::vector<double>& linear_b() const noexcept { return linear_b_; }
    const std::vector<ConvKernel>& conv_stages() const noexcept { return conv_; }

private:
    friend std::array<double, 3> forward(const Forecaster&, std::span<const double>,
                                         ModelForwardCache*);
    friend std::vector<double> backward(const Forecaster&, const ModelForwardCache&,
                                        std::span<const double>);

    void build_registry();

    ModelConfig cfg_;
    std::shared_ptr<const SplineGrid> grid_;
    std::vector<LstmCell> lstm_;
    std::vector<TkanCell> tkan_;
    std::vector<KanLayer> head_kan_;
    Matrix linear_w_;
    std::vector<double> linear_b_;
    std::vector<ConvKernel> conv_;
    std::vector<ParamBlock> registry_;
    std::vector<const KanLayer*> kan_refs_;
    size_t param_count_ = 0;
};

// Unnormalized class scores for one T x input_dim window (flattened
// row-major); softmax is applied only inside the loss.
std::array<double, 3> forward(const Forecaster& model, std::span<const double> window_flat,
                              ModelForwardCache* cache = nullptr);
std::array<double, 3> forward(const Forecaster& model, const WindowSample& sample,
                              ModelForwardCache* cache = nullptr);

// Gradient of dot(upstream, logits) for every registered parameter, in
// registry order. Requires the cache of a matching forward call.
std::vector<double> backward(const Forecaster& model, const ModelForwardCache& cache,
                             std::span<const double> upstream);

size_t param_count(const ModelConfig& config);

}  // namespace tkan
