#include "model/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tkan {

namespace {

constexpr double kLeakySlope = 0.01;

double leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }
double leaky_grad(double x) { return x > 0.0 ? 1.0 : kLeakySlope; }

}  // namespace

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::tkan_head: return "tkan_head";
        case Variant::tkan_gated: return "tkan_gated";
        case Variant::deeplob_lite: return "deeplob_lite";
    }
    return "unknown";
}

Variant variant_from_name(const std::string& name) {
    if (name == "tkan_head") return Variant::tkan_head;
    if (name == "tkan_gated") return Variant::tkan_gated;
    if (name == "deeplob_lite") return Variant::deeplob_lite;
    fail(ErrorCode::invalid_argument, "unknown model variant: " + name);
}

void ModelConfig::validate() const {
    require(input_dim >= 1 && window >= 1 && hidden_dim >= 1 && encoder_layers >= 1 &&
                head_hidden >= 1,
            ErrorCode::invalid_argument, "model dimensions must be >= 1");
    require(class_count == 3, ErrorCode::invalid_argument, "class_count is fixed at 3");
    require(grid.order >= 1 && grid.intervals >= 1 && grid.lo < grid.hi,
            ErrorCode::invalid_argument, "invalid spline grid spec");
    if (head_concat)
        require(variant == Variant::tkan_head, ErrorCode::invalid_argument,
                "head_concat applies to the tkan_head variant only");
    if (variant == Variant::deeplob_lite) {
        require(conv_channels >= 1, ErrorCode::invalid_argument, "conv_channels must be >= 1");
        require(input_dim >= 2, ErrorCode::invalid_argument,
                "deeplob_lite needs input_dim >= 2 for the 1x2 stage");
        require(window >= 7, ErrorCode::invalid_argument,
                "deeplob_lite needs window >= 7 for the two 4x1 stages");
    }
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

ConvKernel::ConvKernel(int kh, int kw, int in_ch, int out_ch, int sh, int sw)
    : height(kh), width(kw), in_channels(in_ch), out_channels(out_ch), stride_h(sh),
      stride_w(sw) {
    const bool spread = (kh == 1 && kw == 2);
    const bool depth = (kh == 4 && kw == 1);
    require(spread || depth, ErrorCode::invalid_argument,
            "conv kernel must be 1x2 (spread) or 4x1 (depth)");
    require(in_ch >= 1 && out_ch >= 1 && sh >= 1 && sw >= 1, ErrorCode::invalid_argument,
            "conv channels and strides must be >= 1");
    weights.assign(static_cast<size_t>(out_ch) * in_ch * kh * kw, 0.0);
    bias.assign(out_ch, 0.0);
}

Tensor3 conv2d(const ConvKernel& k, const Tensor3& in) {
    require(in.channels == k.in_channels, ErrorCode::dimension_mismatch,
            "conv2d: channel mismatch");
    const int out_rows = (in.rows - k.height) / k.stride_h + 1;
    const int out_cols = (in.cols - k.width) / k.stride_w + 1;
    require(out_rows >= 1 && out_cols >= 1, ErrorCode::dimension_mismatch,
            "conv2d: input smaller than kernel");
    Tensor3 out(k.out_channels, out_rows, out_cols);
    for (int oc = 0; oc < k.out_channels; ++oc) {
        for (int r = 0; r < out_rows; ++r) {
            for (int c = 0; c < out_cols; ++c) {
                double acc = k.bias[oc];
                for (int ic = 0; ic < k.in_channels; ++ic)
                    for (int kh = 0; kh < k.height; ++kh)
                        for (int kw = 0; kw < k.width; ++kw)
                            acc += k.weights[k.weight_index(oc, ic, kh, kw)] *
                                   in.at(ic, r * k.stride_h + kh, c * k.stride_w + kw);
                out.at(oc, r, c) = acc;
            }
        }
    }
    return out;
}

void conv2d_backward(const ConvKernel& k, const Tensor3& in, const Tensor3& dout,
                     std::span<double> grad_params, Tensor3& din) {
    require(grad_params.size() == k.param_count(), ErrorCode::dimension_mismatch,
            "conv2d_backward: grad span size");
    din = Tensor3(in.channels, in.rows, in.cols);
    std::span<double> gw = grad_params.first(k.weights.size());
    std::span<double> gb = grad_params.subspan(k.weights.size());
    for (int oc = 0; oc < k.out_channels; ++oc) {
        for (int r = 0; r < dout.rows; ++r) {
            for (int c = 0; c < dout.cols; ++c) {
                const double d = dout.at(oc, r, c);
                if (d == 0.0) continue;
                gb[oc] += d;
                for (int ic = 0; ic < k.in_channels; ++ic)
                    for (int kh = 0; kh < k.height; ++kh)
                        for (int kw = 0; kw < k.width; ++kw) {
                            const int rr = r * k.stride_h + kh;
                            const int cc = c * k.stride_w + kw;
                            gw[k.weight_index(oc, ic, kh, kw)] += d * in.at(ic, rr, cc);
                            din.at(ic, rr, cc) += d * k.weights[k.weight_index(oc, ic, kh, kw)];
                        }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Forecaster construction
// ---------------------------------------------------------------------------

Forecaster::Forecaster(const ModelConfig& config, uint64_t seed) : cfg_(config) {
    cfg_.validate();
    grid_ = std::make_shared<const SplineGrid>(
        make_uniform_grid(cfg_.grid.order, cfg_.grid.intervals, cfg_.grid.lo, cfg_.grid.hi));
    RngState root(seed);

    switch (cfg_.variant) {
        case Variant::tkan_head: {
            for (int l = 0; l < cfg_.encoder_layers; ++l) {
                RngState r = root.split(100 + l);
                lstm_.push_back(init_lstm(l == 0 ? cfg_.input_dim : cfg_.hidden_dim,
                                          cfg_.hidden_dim, r));
            }
            const int head_in = head_input_width();
            RngState r0 = root.split(200);
            head_kan_.push_back(init_kan(head_in, cfg_.head_hidden, grid_, r0));
            RngState r1 = root.split(201);
            head_kan_.push_back(init_kan(cfg_.head_hidden, cfg_.class_count, grid_, r1));
            break;
        }
        case Variant::tkan_gated: {
            for (int l = 0; l < cfg_.encoder_layers; ++l) {
                RngState r = root.split(100 + l);
                tkan_.push_back(init_tkan(l == 0 ? cfg_.input_dim : cfg_.hidden_dim,
                                          cfg_.hidden_dim, grid_, r));
            }
            break;
        }
        case Variant::deeplob_lite: {
            const int ch = cfg_.conv_channels;
            conv_.emplace_back(1, 2, 1, ch, 1, 2);
            conv_.emplace_back(4, 1, ch, ch, 1, 1);
            conv_.emplace_back(4, 1, ch, ch, 1, 1);
            for (size_t s = 0; s < conv_.size(); ++s) {
                RngState r = root.split(400 + s);
                ConvKernel& k = conv_[s];
                const double fan_in = k.in_channels * k.height * k.width;
                const double fan_out = k.out_channels * k.height * k.width;
                const double bound = std::sqrt(6.0 / (fan_in + fan_out));
                for (double& w : k.weights) w = r.uniform(-bound, bound);
            }
            RngState r = root.split(100);
            const int seq_cols = ch * ((cfg_.input_dim - 2) / 2 + 1);
            lstm_.push_back(init_lstm(seq_cols, cfg_.hidden_dim, r));
            break;
        }
    }

    if (cfg_.variant != Variant::tkan_head) {
        const int in = cfg_.hidden_dim;
        linear_w_ = Matrix(cfg_.class_count, in);
        linear_b_.assign(cfg_.class_count, 0.0);
        RngState r = root.split(300);
        const double bound = std::sqrt(6.0 / (in + cfg_.class_count));
        for (double& w : linear_w_.data) w = r.uniform(-bound, bound);
    }

    build_registry();
}

int Forecaster::head_input_width() const {
    if (cfg_.variant == Variant::tkan_head && cfg_.head_concat)
        return 2 * cfg_.encoder_layers * cfg_.hidden_dim;
    return cfg_.hidden_dim;
}

void Forecaster::build_registry() {
    registry_.clear();
    kan_refs_.clear();
    size_t at = 0;
    auto add_block = [&](std::string name, size_t size, bool spline) {
        registry_.push_back(ParamBlock{std::move(name), at, size, spline});
        at += size;
    };
    auto add_kan = [&](const std::string& prefix, const KanLayer& layer) {
        add_block(prefix + ".coeff", layer.coeff_count(), true);
        add_block(prefix + ".mix", layer.param_count() - layer.coeff_count(), false);
        kan_refs_.push_back(&layer);
    };

    switch (cfg_.variant) {
        case Variant::tkan_head:
            for (size_t l = 0; l < lstm_.size(); ++l)
                add_block("encoder." + std::to_string(l), lstm_[l].param_count(), false);
            for (size_t h = 0; h < head_kan_.size(); ++h)
                add_kan("head." + std::to_string(h), head_kan_[h]);
            break;
        case Variant::tkan_gated:
            for (size_t l = 0; l < tkan_.size(); ++l) {
                const std::string prefix = "encoder." + std::to_string(l);
                add_kan(prefix + ".gate_i", tkan_[l].gate_i);
                add_kan(prefix + ".gate_f", tkan_[l].gate_f);
                add_kan(prefix + ".gate_g", tkan_[l].gate_g);
                add_kan(prefix + ".gate_o", tkan_[l].gate_o);
            }
            add_block("head.W", linear_w_.size(), false);
            add_block("head.b", linear_b_.size(), false);
            break;
        case Variant::deeplob_lite:
            for (size_t s = 0; s < conv_.size(); ++s)
                add_block("conv." + std::to_string(s), conv_[s].param_count(), false);
            add_block("encoder.0", lstm_[0].param_count(), false);
            add_block("head.W", linear_w_.size(), false);
            add_block("head.b", linear_b_.size(), false);
            break;
    }
    param_count_ = at;
}

const KanLayer& Forecaster::kan_layer(size_t idx) const {
    require(idx < kan_refs_.size(), ErrorCode::out_of_range,
            "kan layer index " + std::to_string(idx) + " out of range");
    return *kan_refs_[idx];
}

double Forecaster::l1_total() const {
    double acc = 0.0;
    for (const KanLayer* layer : kan_refs_) acc += l1_sparsity(*layer);
    return acc;
}

void Forecaster::copy_params(std::span<double> out) const {
    require(out.size() == param_count_, ErrorCode::dimension_mismatch,
            "copy_params: span must cover every parameter");
    size_t at = 0;
    auto put = [&](std::span<const double> src) {
        std::copy(src.begin(), src.end(), out.begin() + at);
        at += src.size();
    };
    switch (cfg_.variant) {
        case Variant::tkan_head: {
            std::vector<double> tmp;
            for (const auto& cell : lstm_) {
                tmp.resize(cell.param_count());
                cell.copy_params(tmp);
                put(tmp);
            }
            for (const auto& layer : head_kan_) put(layer.params());
            break;
        }
        case Variant::tkan_gated: {
            std::vector<double> tmp;
            for (const auto& cell : tkan_) {
                tmp.resize(cell.param_count());
                cell.copy_params(tmp);
                put(tmp);
            }
            put(linear_w_.data);
            put(linear_b_);
            break;
        }
        case Variant::deeplob_lite: {
            std::vector<double> tmp;
            for (const auto& k : conv_) {
                put(k.weights);
                put(k.bias);
            }
            tmp.resize(lstm_[0].param_count());
            lstm_[0].copy_params(tmp);
            put(tmp);
            put(linear_w_.data);
            put(linear_b_);
            break;
        }
    }
}

void Forecaster::set_params(std::span<const double> in) {
    require(in.size() == param_count_, ErrorCode::dimension_mismatch,
            "set_params: span must cover every parameter");
    size_t at = 0;
    auto take = [&](size_t n) {
        auto s = in.subspan(at, n);
        at += n;
        return s;
    };
    switch (cfg_.variant) {
        case Variant::tkan_head:
            for (auto& cell : lstm_) cell.set_params(take(cell.param_count()));
            for (auto& layer : head_kan_) {
                auto src = take(layer.param_count());
                std::copy(src.begin(), src.end(), layer.params().begin());
            }
            break;
        case Variant::tkan_gated:
            for (auto& cell : tkan_) cell.set_params(take(cell.param_count()));
            {
                auto wsrc = take(linear_w_.size());
                std::copy(wsrc.begin(), wsrc.end(), linear_w_.data.begin());
                auto bsrc = take(linear_b_.size());
                std::copy(bsrc.begin(), bsrc.end(), linear_b_.begin());
            }
            break;
        case Variant::deeplob_lite:
            for (auto& k : conv_) {
                auto wsrc = take(k.weights.size());
                std::copy(wsrc.begin(), wsrc.end(), k.weights.begin());
                auto bsrc = take(k.bias.size());
                std::copy(bsrc.begin(), bsrc.end(), k.bias.begin());
            }
            lstm_[0].set_params(take(lstm_[0].param_count()));
            {
                auto wsrc = take(linear_w_.size());
                std::copy(wsrc.begin(), wsrc.end(), linear_w_.data.begin());
                auto bsrc = take(linear_b_.size());
                std::copy(bsrc.begin(), bsrc.end(), linear_b_.begin());
            }
            break;
    }
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

Matrix window_matrix(const ModelConfig& cfg, std::span<const double> flat) {
    require(flat.size() == static_cast<size_t>(cfg.window) * cfg.input_dim,
            ErrorCode::dimension_mismatch,
            "window must be T x input_dim = " + std::to_string(cfg.window) + " x " +
                std::to_string(cfg.input_dim));
    require(all_finite(flat), ErrorCode::not_finite, "window contains non-finite values");
    Matrix m(cfg.window, cfg.input_dim);
    std::copy(flat.begin(), flat.end(), m.data.begin());
    return m;
}

Matrix states_to_sequence(const std::vector<CellState>& states) {
    Matrix m(static_cast<int>(states.size()), static_cast<int>(states[0].h.size()));
    for (size_t t = 0; t < states.size(); ++t)
        std::copy(states[t].h.begin(), states[t].h.end(),
                  m.data.begin() + t * states[t].h.size());
    return m;
}

}  // namespace

std::array<double, 3> forward(const Forecaster& model, std::span<const double> window_flat,
                              ModelForwardCache* cache) {
    const ModelConfig& cfg = model.cfg_;
    ModelForwardCache local;
    ModelForwardCache& cc = cache ? *cache : local;
    cc = ModelForwardCache{};

    Matrix seq = window_matrix(cfg, window_flat);
    std::array<double, 3> logits{};

    switch (cfg.variant) {
        case Variant::tkan_head: {
            cc.lstm_caches.resize(model.lstm_.size());
            for (size_t l = 0; l < model.lstm_.size(); ++l) {
                cc.layer_inputs.push_back(seq);
                auto rolled = unroll(model.lstm_[l], seq, zero_state(cfg.hidden_dim));
                cc.lstm_caches[l] = std::move(rolled.caches);
                cc.final_states.push_back(rolled.states.back());
                seq = states_to_sequence(rolled.states);
            }
            std::vector<double> a;
            if (cfg.head_concat) {
                for (const auto& st : cc.final_states) a.insert(a.end(), st.h.begin(), st.h.end());
                for (const auto& st : cc.final_states) a.insert(a.end(), st.c.begin(), st.c.end());
            } else {
                a = cc.final_states.back().h;
            }
            cc.head_caches.resize(model.head_kan_.size());
            for (size_t h = 0; h < model.head_kan_.size(); ++h) {
                cc.head_inputs.push_back(a);
                std::vector<double> next(model.head_kan_[h].out_dim());
                kan_forward(model.head_kan_[h], a, next, &cc.head_caches[h]);
                a = std::move(next);
            }
            for (int j = 0; j < 3; ++j) logits[j] = a[j];
            break;
        }
        case Variant::tkan_gated: {
            cc.tkan_caches.resize(model.tkan_.size());
            for (size_t l = 0; l < model.tkan_.size(); ++l) {
                cc.layer_inputs.push_back(seq);
                auto rolled = unroll(model.tkan_[l], seq, zero_state(cfg.hidden_dim));
                cc.tkan_caches[l] = std::move(rolled.caches);
                cc.final_states.push_back(rolled.states.back());
                seq = states_to_sequence(rolled.states);
            }
            cc.linear_in = cc.final_states.back().h;
            std::vector<double> out(3);
            matvec(model.linear_w_, cc.linear_in, out);
            for (int j = 0; j < 3; ++j) logits[j] = out[j] + model.linear_b_[j];
            break;
        }
        case Variant::deeplob_lite: {
            Tensor3 x(1, cfg.window, cfg.input_dim);
            std::copy(window_flat.begin(), window_flat.end(), x.data.begin());
            for (const auto& stage : model.conv_) {
                cc.conv_in.push_back(x);
                Tensor3 pre = conv2d(stage, x);
                cc.conv_pre.push_back(pre);
                x = pre;
                for (double& v : x.data) v = leaky(v);
            }
            // Feature maps become the temporal axis: row t collects every
            // channel's features at time t.
            Matrix lstm_seq(x.rows, x.channels * x.cols);
            for (int ch = 0; ch < x.channels; ++ch)
                for (int t = 0; t < x.rows; ++t)
                    for (int f = 0; f < x.cols; ++f)
                        lstm_seq(t, ch * x.cols + f) = x.at(ch, t, f);
            cc.layer_inputs.push_back(lstm_seq);
            cc.lstm_caches.resize(1);
            auto rolled = unroll(model.lstm_[0], lstm_seq, zero_state(cfg.hidden_dim));
            cc.lstm_caches[0] = std::move(rolled.caches);
            cc.final_states.push_back(rolled.states.back());
            cc.linear_in = cc.final_states.back().h;
            std::vector<double> out(3);
            matvec(model.linear_w_, cc.linear_in, out);
            for (int j = 0; j < 3; ++j) logits[j] = out[j] + model.linear_b_[j];
            break;
        }
    }

    cc.logits = logits;
    cc.valid = true;
    return logits;
}

std::array<double, 3> forward(const Forecaster& model, const WindowSample& sample,
                              ModelForwardCache* cache) {
    return forward(model, sample.flat(), cache);
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

namespace {

// Offset of the named registry block.
size_t block_offset(const std::vector<ParamBlock>& registry, const std::string& name) {
    for (const auto& b : registry)
        if (b.name == name) return b.offset;
    fail(ErrorCode::out_of_range, "registry block not found: " + name);
}

}  // namespace

std::vector<double> backward(const Forecaster& model, const ModelForwardCache& cache,
                             std::span<const double> upstream) {
    require(cache.valid, ErrorCode::invalid_argument,
            "backward requires the cache of a matching forward call");
    require(upstream.size() == 3, ErrorCode::dimension_mismatch, "upstream must have 3 entries");
    const ModelConfig& cfg = model.cfg_;
    const int hidden = cfg.hidden_dim;
    std::vector<double> grads(model.param_count_, 0.0);
    const auto& registry = model.registry_;

    switch (cfg.variant) {
        case Variant::tkan_head: {
            require(cache.head_caches.size() == model.head_kan_.size() &&
                        cache.lstm_caches.size() == model.lstm_.size(),
                    ErrorCode::invalid_argument, "cache does not match model layout");
            std::vector<double> d(upstream.begin(), upstream.end());
            for (int h = static_cast<int>(model.head_kan_.size()) - 1; h >= 0; --h) {
                const KanLayer& layer = model.head_kan_[h];
                const size_t off = block_offset(registry, "head." + std::to_string(h) + ".coeff");
                std::vector<double> dx(layer.in_dim(), 0.0);
                kan_backward(layer, cache.head_caches[h], d,
                             std::span<double>(grads).subspan(off, layer.param_count()), dx);
                d = std::move(dx);
            }
            // Split the head-input gradient back onto the encoder finals.
            const int layers = static_cast<int>(model.lstm_.size());
            std::vector<std::vector<double>> dh_T(layers, std::vector<double>(hidden, 0.0));
            std::vector<std::vector<double>> dc_T(layers, std::vector<double>(hidden, 0.0));
            if (cfg.head_concat) {
                for (int l = 0; l < layers; ++l)
                    for (int j = 0; j < hidden; ++j) dh_T[l][j] = d[l * hidden + j];
                for (int l = 0; l < layers; ++l)
                    for (int j = 0; j < hidden; ++j)
                        dc_T[l][j] = d[(layers + l) * hidden + j];
            } else {
                dh_T[layers - 1] = d;
            }
            Matrix up_from_above;
            for (int l = layers - 1; l >= 0; --l) {
                const int steps = static_cast<int>(cache.lstm_caches[l].size());
                Matrix up_h(steps, hidden);
                if (l < layers - 1) up_h = up_from_above;
                for (int j = 0; j < hidden; ++j) up_h(steps - 1, j) += dh_T[l][j];
                auto res = bptt(model.lstm_[l], cache.lstm_caches[l], up_h, dc_T[l]);
                const size_t off = block_offset(registry, "encoder." + std::to_string(l));
                std::copy(res.param_grads.begin(), res.param_grads.end(), grads.begin() + off);
                up_from_above = std::move(res.input_grads);
            }
            break;
        }
        case Variant::tkan_gated:
        case Variant::deeplob_lite: {
            require(!cache.linear_in.empty(), ErrorCode::invalid_argument,
                    "cache does not match model layout");
            // Linear head.
            const size_t w_off = block_offset(registry, "head.W");
            const size_t b_off = block_offset(registry, "head.b");
            std::vector<double> dh(hidden, 0.0);
            for (int j = 0; j < 3; ++j) {
                grads[b_off + j] += upstream[j];
                for (int i = 0; i < hidden; ++i) {
                    grads[w_off + static_cast<size_t>(j) * hidden + i] +=
                        upstream[j] * cache.linear_in[i];
                    dh[i] += upstream[j] * model.linear_w_(j, i);
                }
            }
            if (cfg.variant == Variant::tkan_gated) {
                const int layers = static_cast<int>(model.tkan_.size());
                Matrix up_from_above;
                std::vector<double> dc_empty;
                for (int l = layers - 1; l >= 0; --l) {
                    const int steps = static_cast<int>(cache.tkan_caches[l].size());
                    Matrix up_h(steps, hidden);
                    if (l < layers - 1) up_h = up_from_above;
                    if (l == layers - 1)
                        for (int j = 0; j < hidden; ++j) up_h(steps - 1, j) += dh[j];
                    auto res = bptt(model.tkan_[l], cache.tkan_caches[l], up_h, dc_empty);
                    const size_t off = block_offset(
                        registry, "encoder." + std::to_string(l) + ".gate_i.coeff");
                    std::copy(res.param_grads.begin(), res.param_grads.end(),
                              grads.begin() + off);
                    up_from_above = std::move(res.input_grads);
                }
            } else {
                require(cache.conv_in.size() == model.conv_.size() && !cache.lstm_caches.empty(),
                        ErrorCode::invalid_argument, "cache does not match model layout");
                const int steps = static_cast<int>(cache.lstm_caches[0].size());
                Matrix up_h(steps, hidden);
                for (int j = 0; j < hidden; ++j) up_h(steps - 1, j) += dh[j];
                auto res = bptt(model.lstm_[0], cache.lstm_caches[0], up_h, {});
                const size_t lstm_off = block_offset(registry, "encoder.0");
                std::copy(res.param_grads.begin(), res.param_grads.end(),
                          grads.begin() + lstm_off);

                // Un-permute sequence gradients into the last conv activation.
                const Tensor3& last_pre = cache.conv_pre.back();
                Tensor3 dact(last_pre.channels, last_pre.rows, last_pre.cols);
                for (int ch = 0; ch < dact.channels; ++ch)
                    for (int t = 0; t < dact.rows; ++t)
                        for (int f = 0; f < dact.cols; ++f)
                            dact.at(ch, t, f) = res.input_grads(t, ch * dact.cols + f);

                for (int s = static_cast<int>(model.conv_.size()) - 1; s >= 0; --s) {
                    const Tensor3& pre = cache.conv_pre[s];
                    for (size_t i = 0; i < dact.data.size(); ++i)
                        dact.data[i] *= leaky_grad(pre.data[i]);
                    const size_t off = block_offset(registry, "conv." + std::to_string(s));
                    Tensor3 din;
                    conv2d_backward(model.conv_[s], cache.conv_in[s], dact,
                                    std::span<double>(grads).subspan(
                                        off, model.conv_[s].param_count()),
                                    din);
                    dact = std::move(din);
                }
            }
            break;
        }
    }
    return grads;
}

size_t param_count(const ModelConfig& config) {
    return Forecaster(config, 0).param_count();
}

}  // namespace tkan
