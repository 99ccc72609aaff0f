#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/gradcheck.hpp"
#include "model/checkpoint.hpp"

using namespace tkan;

namespace {

ModelConfig shrunken(Variant v) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.input_dim = 6;
    cfg.window = v == Variant::deeplob_lite ? 8 : 3;
    cfg.hidden_dim = 5;
    cfg.encoder_layers = 2;
    cfg.head_hidden = 4;
    cfg.conv_channels = 2;
    if (v == Variant::tkan_gated) {
        cfg.input_dim = 3;
        cfg.hidden_dim = 3;
        cfg.window = 2;
    }
    return cfg;
}

std::vector<double> random_window(const ModelConfig& cfg, uint64_t seed, double scale = 2.0) {
    RngState rng(seed);
    return seeded_uniform(rng, -scale, scale, static_cast<size_t>(cfg.window) * cfg.input_dim);
}

double probe_loss(const Forecaster& model, std::span<const double> window,
                  const std::array<double, 3>& u) {
    const std::array<double, 3> logits = forward(model, window);
    return u[0] * logits[0] + u[1] * logits[1] + u[2] * logits[2];
}

void check_model_gradients(const ModelConfig& cfg, uint64_t seed) {
    Forecaster model(cfg, seed);
    const std::vector<double> window = random_window(cfg, seed + 1);
    RngState rng(seed + 2);
    const std::array<double, 3> u{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

    ModelForwardCache cache;
    forward(model, window, &cache);
    const std::vector<double> analytic = backward(model, cache, u);

    std::vector<double> params(model.param_count());
    model.copy_params(params);
    Forecaster probe(cfg, seed);
    auto loss = [&](std::span<const double> p) {
        probe.set_params(p);
        return probe_loss(probe, window, u);
    };
    const GradCheckReport report = grad_check(loss, params, analytic);
    INFO("variant ", variant_name(cfg.variant), " worst block index ",
         report.worst_parameter_index, " analytic ", report.analytic_value, " numeric ",
         report.numeric_value);
    CHECK(report.max_relative_error < 1e-5);
}

}  // namespace

TEST_CASE("all-zero tkan_head emits equal logits") {
    ModelConfig cfg = shrunken(Variant::tkan_head);
    Forecaster model(cfg, 1);
    std::vector<double> zeros(model.param_count(), 0.0);
    model.set_params(zeros);
    const std::array<double, 3> logits = forward(model, random_window(cfg, 3));
    CHECK(logits[0] == logits[1]);
    CHECK(logits[1] == logits[2]);
}

TEST_CASE("tkan_head forward equals manual composition") {
    ModelConfig cfg = shrunken(Variant::tkan_head);
    Forecaster model(cfg, 7);
    const std::vector<double> window = random_window(cfg, 8);

    const std::array<double, 3> got = forward(model, window);

    // unroll(encoder) layer by layer, then the two head layers by hand
    Matrix seq(cfg.window, cfg.input_dim);
    std::copy(window.begin(), window.end(), seq.data.begin());
    for (const LstmCell& cell : model.lstm_layers()) {
        const auto rolled = unroll(cell, seq, zero_state(cfg.hidden_dim));
        Matrix next(cfg.window, cfg.hidden_dim);
        for (int t = 0; t < cfg.window; ++t)
            for (int j = 0; j < cfg.hidden_dim; ++j) next(t, j) = rolled.states[t].h[j];
        seq = next;
    }
    std::vector<double> a(cfg.hidden_dim);
    for (int j = 0; j < cfg.hidden_dim; ++j) a[j] = seq(cfg.window - 1, j);
    a = kan_forward(model.head_kan()[0], a);
    a = kan_forward(model.head_kan()[1], a);
    for (int j = 0; j < 3; ++j) CHECK(got[j] == doctest::Approx(a[j]).epsilon(1e-12));
}

TEST_CASE("forward is independent across samples") {
    ModelConfig cfg = shrunken(Variant::tkan_head);
    Forecaster model(cfg, 11);
    const std::vector<double> w1 = random_window(cfg, 21);
    const std::vector<double> w2 = random_window(cfg, 22);
    const auto a1 = forward(model, w1);
    const auto b = forward(model, w2);
    const auto a2 = forward(model, w1);
    for (int j = 0; j < 3; ++j) CHECK(a1[j] == a2[j]);
    (void)b;
}

TEST_CASE("shape mismatch and missing cache are typed errors") {
    ModelConfig cfg = shrunken(Variant::tkan_head);
    Forecaster model(cfg, 1);
    CHECK_THROWS_AS(forward(model, std::vector<double>(5, 0.0)), Error);
    ModelForwardCache empty;
    CHECK_THROWS_AS(backward(model, empty, std::array<double, 3>{1, 0, 0}), Error);
}

TEST_CASE("backward matches finite differences on shrunken configs") {
    SUBCASE("tkan_head") { check_model_gradients(shrunken(Variant::tkan_head), 31); }
    SUBCASE("tkan_head with concatenated head input") {
        ModelConfig cfg = shrunken(Variant::tkan_head);
        cfg.head_concat = true;
        check_model_gradients(cfg, 37);
    }
    SUBCASE("tkan_gated") { check_model_gradients(shrunken(Variant::tkan_gated), 41); }
    SUBCASE("deeplob_lite") { check_model_gradients(shrunken(Variant::deeplob_lite), 43); }
}

TEST_CASE("backward zero upstream and stable ordering") {
    ModelConfig cfg = shrunken(Variant::tkan_head);
    Forecaster model(cfg, 5);
    const std::vector<double> window = random_window(cfg, 6);
    ModelForwardCache cache;
    forward(model, window, &cache);
    const std::vector<double> zero = backward(model, cache, std::array<double, 3>{0, 0, 0});
    for (double g : zero) CHECK(g == 0.0);
    const std::array<double, 3> u{0.3, -0.7, 0.4};
    const std::vector<double> g1 = backward(model, cache, u);
    const std::vector<double> g2 = backward(model, cache, u);
    CHECK(g1 == g2);
}

TEST_CASE("param_count hand checks") {
    SUBCASE("single LSTM cell with hidden=1, input=1") {
        CHECK(make_lstm(1, 1).param_count() == 12);  // 4 * ((1+1)*1 + 1)
    }
    SUBCASE("default tkan_head matches the architecture formula") {
        ModelConfig cfg;  // defaults: 144 input, 64 hidden, 2 layers, head 16, grid 8 basis
        const size_t basis = 8;
        const size_t enc0 = 4 * (64 * (64 + 144) + 64);
        const size_t enc1 = 4 * (64 * (64 + 64) + 64);
        const size_t head = 16 * 64 * (basis + 2) + 3 * 16 * (basis + 2);
        CHECK(param_count(cfg) == enc0 + enc1 + head);
    }
    SUBCASE("single-layer tkan_gated with defaults lands on 532675") {
        ModelConfig cfg;
        cfg.variant = Variant::tkan_gated;
        cfg.encoder_layers = 1;
        // 4 gates x 64 x (144+64) x (8+2) plus the 64->3 linear head
        CHECK(param_count(cfg) == 4 * 64 * 208 * 10 + 64 * 3 + 3);
        CHECK(param_count(cfg) == 532675);
    }
    SUBCASE("head width grows the count strictly") {
        ModelConfig small = shrunken(Variant::tkan_head);
        ModelConfig big = small;
        big.head_hidden *= 2;
        CHECK(param_count(big) > param_count(small));
    }
}

TEST_CASE("deeplob conv stage matches a sliding dot-product oracle") {
    ModelConfig cfg;
    cfg.variant = Variant::deeplob_lite;
    Forecaster model(cfg, 17);
    RngState rng(18);

    const ConvKernel& k0 = model.conv_stages()[0];
    Tensor3 in(1, 10, 144);
    for (double& v : in.data) v = rng.uniform(-1, 1);
    const Tensor3 out = conv2d(k0, in);
    CHECK(out.rows == 10);
    CHECK(out.cols == 72);
    for (int oc = 0; oc < out.channels; ++oc)
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c) {
                double acc = k0.bias[oc];
                for (int kw = 0; kw < 2; ++kw)
                    acc += k0.weights[k0.weight_index(oc, 0, 0, kw)] * in.at(0, r, 2 * c + kw);
                CHECK(out.at(oc, r, c) == doctest::Approx(acc).epsilon(1e-12));
            }

    const ConvKernel& k1 = model.conv_stages()[1];
    Tensor3 in2(k1.in_channels, 10, 72);
    for (double& v : in2.data) v = rng.uniform(-1, 1);
    const Tensor3 out2 = conv2d(k1, in2);
    CHECK(out2.rows == 7);
    for (int oc = 0; oc < out2.channels; ++oc)
        for (int r = 0; r < out2.rows; ++r)
            for (int c = 0; c < out2.cols; ++c) {
                double acc = k1.bias[oc];
                for (int ic = 0; ic < k1.in_channels; ++ic)
                    for (int kh = 0; kh < 4; ++kh)
                        acc += k1.weights[k1.weight_index(oc, ic, kh, 0)] * in2.at(ic, r + kh, c);
                CHECK(out2.at(oc, r, c) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("conv kernels outside the baseline shapes are rejected") {
    CHECK_THROWS_AS(ConvKernel(2, 2, 1, 1, 1, 1), Error);
    CHECK_THROWS_AS(ConvKernel(3, 1, 1, 1, 1, 1), Error);
}

TEST_CASE("all variants emit finite logits on inputs in [-10, 10]") {
    for (Variant v : {Variant::tkan_head, Variant::tkan_gated, Variant::deeplob_lite}) {
        ModelConfig cfg = shrunken(v);
        Forecaster model(cfg, 51);
        for (uint64_t s = 0; s < 5; ++s) {
            const std::vector<double> window = random_window(cfg, 100 + s, 10.0);
            const std::array<double, 3> logits = forward(model, window);
            for (double l : logits) CHECK(std::isfinite(l));
        }
    }
}

// Registry completeness: a perturbed parameter must change the output of the
// component that owns it, probed at that component's own interface.
TEST_CASE("registry covers every parameter with no dead registrations") {
    for (Variant v : {Variant::tkan_head, Variant::tkan_gated, Variant::deeplob_lite}) {
        CAPTURE(variant_name(v));
        ModelConfig cfg = shrunken(v);
        Forecaster model(cfg, 61);
        std::vector<double> params(model.param_count());
        model.copy_params(params);
        RngState rng(62);

        for (int trial = 0; trial < 100; ++trial) {
            const size_t idx = rng.next_u64() % model.param_count();
            const ParamBlock* block = nullptr;
            size_t kan_index = 0, lstm_index = 0, tkan_gate = 0, conv_index = 0;
            bool counted = false;
            size_t kan_seen = 0, lstm_seen = 0, conv_seen = 0;
            for (const auto& b : model.registry()) {
                const bool owns = idx >= b.offset && idx < b.offset + b.size;
                if (b.name.find(".coeff") != std::string::npos) {
                    if (owns) {
                        block = &b;
                        kan_index = kan_seen;
                    }
                    ++kan_seen;
                } else if (b.name.find(".mix") != std::string::npos) {
                    if (owns) {
                        block = &b;
                        kan_index = kan_seen - 1;
                    }
                } else if (b.name.rfind("encoder.", 0) == 0) {
                    if (owns) {
                        block = &b;
                        lstm_index = lstm_seen;
                    }
                    ++lstm_seen;
                } else if (b.name.rfind("conv.", 0) == 0) {
                    if (owns) {
                        block = &b;
                        conv_index = conv_seen;
                    }
                    ++conv_seen;
                } else if (owns) {
                    block = &b;  // head.W / head.b
                }
                counted = counted || owns;
            }
            REQUIRE(counted);
            REQUIRE(block != nullptr);
            (void)tkan_gate;

            std::vector<double> bumped = params;
            bumped[idx] += 0.5;

            double before = 0.0, after = 0.0;
            if (block->name.find(".coeff") != std::string::npos ||
                block->name.find(".mix") != std::string::npos) {
                const KanLayer& layer = model.kan_layer(kan_index);
                const size_t local = idx - (block->name.find(".mix") != std::string::npos
                                                ? block->offset - layer.coeff_count()
                                                : block->offset);
                // Aim the probe at the support of the parameter in question.
                std::vector<double> x(layer.in_dim(), 0.1);
                const SplineGrid& grid = layer.grid();
                if (local < layer.coeff_count()) {
                    const int i = static_cast<int>(local % layer.basis_count());
                    const int p =
                        static_cast<int>((local / layer.basis_count()) % layer.in_dim());
                    const double lo = std::max(grid.knots[i], grid.domain_lo);
                    const double hi =
                        std::min(grid.knots[i + grid.order + 1], grid.domain_hi);
                    x[p] = 0.5 * (lo + hi);
                } else {
                    const int p = static_cast<int>(local % layer.in_dim());
                    x[p] = 0.8;
                }
                auto eval = [&] {
                    const std::vector<double> y = kan_forward(layer, x);
                    double acc = 0.0;
                    for (size_t j = 0; j < y.size(); ++j)
                        acc += (j + 1) * y[j];  // weighted so q-asymmetry shows
                    return acc;
                };
                model.set_params(params);
                before = eval();
                model.set_params(bumped);
                after = eval();
            } else if (block->name.rfind("encoder.", 0) == 0 && v != Variant::tkan_gated) {
                const LstmCell& cell = model.lstm_layers()[lstm_index];
                RngState pr(900 + trial);
                const std::vector<double> x = seeded_uniform(pr, -1, 1, cell.input_dim);
                CellState prev;
                prev.h = seeded_uniform(pr, -1, 1, cell.hidden_dim);
                prev.c = seeded_uniform(pr, -1, 1, cell.hidden_dim);
                auto eval = [&] {
                    const CellState next = lstm_step(cell, x, prev);
                    double acc = 0.0;
                    for (int j = 0; j < cell.hidden_dim; ++j)
                        acc += (j + 1) * next.h[j] + next.c[j];
                    return acc;
                };
                model.set_params(params);
                before = eval();
                model.set_params(bumped);
                after = eval();
            } else if (block->name.rfind("conv.", 0) == 0) {
                const ConvKernel& kernel = model.conv_stages()[conv_index];
                RngState pr(700 + trial);
                Tensor3 in(kernel.in_channels, 8, 8);
                for (double& vv : in.data) vv = pr.uniform(-1, 1);
                auto eval = [&] {
                    const Tensor3 out = conv2d(kernel, in);
                    double acc = 0.0;
                    for (size_t j = 0; j < out.data.size(); ++j) acc += (j % 7 + 1) * out.data[j];
                    return acc;
                };
                model.set_params(params);
                before = eval();
                model.set_params(bumped);
                after = eval();
            } else {
                // linear head
                RngState pr(800 + trial);
                const std::vector<double> h = seeded_uniform(pr, -1, 1, cfg.hidden_dim);
                auto eval = [&] {
                    std::vector<double> out(3);
                    matvec(model.linear_w(), h, out);
                    double acc = 0.0;
                    for (int j = 0; j < 3; ++j) acc += (j + 1) * (out[j] + model.linear_b()[j]);
                    return acc;
                };
                model.set_params(params);
                before = eval();
                model.set_params(bumped);
                after = eval();
            }
            CAPTURE(block->name);
            CAPTURE(idx);
            CHECK(before != after);
            model.set_params(params);
        }
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "tkan_ckpt_test";
    std::filesystem::create_directories(dir);
    for (Variant v : {Variant::tkan_head, Variant::tkan_gated, Variant::deeplob_lite}) {
        ModelConfig cfg = shrunken(v);
        Forecaster model(cfg, 77);
        const std::filesystem::path path = dir / (std::string(variant_name(v)) + ".bin");
        save_checkpoint(model, path.string());
        const Forecaster loaded = load_checkpoint(path.string());

        std::vector<double> a(model.param_count()), b(loaded.param_count());
        model.copy_params(a);
        loaded.copy_params(b);
        CHECK(a == b);

        const std::vector<double> window = random_window(cfg, 78);
        const auto la = forward(model, window);
        const auto lb = forward(loaded, window);
        for (int j = 0; j < 3; ++j) CHECK(la[j] == lb[j]);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint error taxonomy") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "tkan_ckpt_err";
    std::filesystem::create_directories(dir);
    ModelConfig cfg = shrunken(Variant::tkan_head);
    Forecaster model(cfg, 3);
    const std::filesystem::path good = dir / "good.bin";
    save_checkpoint(model, good.string());

    SUBCASE("truncated file is corrupt") {
        std::ifstream in(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        const std::filesystem::path bad = dir / "short.bin";
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        try {
            load_checkpoint(bad.string());
            FAIL("expected a corrupt-file error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::corrupt);
        }
    }
    SUBCASE("wrong magic is corrupt") {
        const std::filesystem::path bad = dir / "magic.bin";
        std::ofstream out(bad, std::ios::binary);
        out << "NOTACKPTxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx";
        out.close();
        try {
            load_checkpoint(bad.string());
            FAIL("expected a corrupt-file error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::corrupt);
        }
    }
    SUBCASE("future version is a version mismatch") {
        std::ifstream in(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        bytes[8] = 99;  // version field follows the 8-byte magic
        const std::filesystem::path bad = dir / "version.bin";
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        try {
            load_checkpoint(bad.string());
            FAIL("expected a version error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::version_mismatch);
        }
    }
    SUBCASE("variant mismatch is refused") {
        try {
            load_checkpoint(good.string(), Variant::deeplob_lite);
            FAIL("expected a shape error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::shape_mismatch);
        }
    }
    SUBCASE("missing file is an io error") {
        try {
            load_checkpoint((dir / "nope.bin").string());
            FAIL("expected an io error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::io);
        }
    }
    std::filesystem::remove_all(dir);
}
