// Command-line front end for the tkan shared library: data preparation,
// training, evaluation, cost-adjusted backtests, and learned-activation
// export. Only the public C API is used here.

#include <tkan/tkan.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

// Exit-code taxonomy: 0 success, 1 configuration error, 2 data error,
// 3 training divergence.
int exit_code_for(tkan_status status) {
    switch (status) {
        case TKAN_OK: return 0;
        case TKAN_ERR_INVALID_ARGUMENT:
        case TKAN_ERR_DIMENSION: return 1;
        case TKAN_ERR_DIVERGENCE:
        case TKAN_ERR_NOT_FINITE: return 3;
        default: return 2;
    }
}

[[noreturn]] void die(tkan_status status, const std::string& context) {
    std::cerr << "error: " << context << ": " << tkan_last_error() << "\n";
    std::exit(exit_code_for(status));
}

void check(tkan_status status, const std::string& context) {
    if (status != TKAN_OK) die(status, context);
}

// Locale-independent shortest round-trip formatting for CSV payloads.
std::string fmt(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

std::string iso_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json kv_text_to_json(const std::string& text) {
    json out = json::object();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

struct DataOptions {
    std::string data_path;
    std::string layout = "rows_are_samples";
    bool synthetic = false;
    bool from_cache = false;
    std::string write_cache;
    bool zscore = false;
    size_t synth_n = 4000;
    uint64_t seed = 0;
};

void add_data_flags(CLI::App* cmd, DataOptions& opt) {
    cmd->add_option("--data", opt.data_path, "FI-2010-format text file (149 fields per sample)");
    cmd->add_option("--layout", opt.layout, "rows_are_samples | rows_are_features")
        ->check(CLI::IsMember({"rows_are_samples", "rows_are_features"}));
    cmd->add_flag("--synthetic", opt.synthetic, "generate a synthetic LOB series instead");
    cmd->add_option("--synth-n", opt.synth_n, "synthetic snapshot count");
    cmd->add_flag("--cache", opt.from_cache, "treat --data as a binary snapshot cache");
    cmd->add_option("--write-cache", opt.write_cache, "write the loaded data to a binary cache");
    cmd->add_flag("--zscore", opt.zscore, "z-score features (fit on the leading 80%)");
}

struct DatasetHandle {
    tkan_dataset* ptr = nullptr;
    ~DatasetHandle() { tkan_dataset_free(ptr); }
};

void load_dataset(const DataOptions& opt, DatasetHandle& ds) {
    if (opt.synthetic) {
        check(tkan_dataset_synthetic(opt.seed, opt.synth_n, &ds.ptr), "generating data");
    } else if (!opt.data_path.empty()) {
        if (opt.from_cache) {
            check(tkan_dataset_load_cache(opt.data_path.c_str(), &ds.ptr), "loading cache");
        } else {
            const tkan_layout layout = opt.layout == "rows_are_features"
                                           ? TKAN_ROWS_ARE_FEATURES
                                           : TKAN_ROWS_ARE_SAMPLES;
            check(tkan_dataset_load_fi2010(opt.data_path.c_str(), layout, &ds.ptr),
                  "loading " + opt.data_path);
        }
    } else {
        std::cerr << "error: provide --data PATH or --synthetic\n";
        std::exit(2);
    }
    if (!opt.write_cache.empty())
        check(tkan_dataset_save_cache(ds.ptr, opt.write_cache.c_str()), "writing cache");
    if (opt.zscore || opt.synthetic) {
        size_t constant = 0;
        check(tkan_dataset_zscore(ds.ptr, 0.8, &constant), "normalizing data");
        if (constant > 0)
            std::cerr << "warning: " << constant
                      << " constant feature(s); sigma fell back to 1\n";
    }
}

// The manifest is written before long work begins and finalized afterwards,
// so an interrupted run still leaves a record of what was attempted.
struct Manifest {
    std::filesystem::path path;
    json doc;

    void start(const std::string& command, const json& config, uint64_t seed,
               const std::string& fingerprint) {
        doc["command"] = command;
        doc["config"] = config;
        doc["seed"] = seed;
        doc["data_fingerprint"] = fingerprint;
        doc["started_at"] = iso_now();
        doc["status"] = "running";
        doc["outputs"] = json::array();
        write();
    }
    void add_output(const std::filesystem::path& p) { doc["outputs"].push_back(p.string()); }
    void finish() {
        doc["finished_at"] = iso_now();
        doc["status"] = "complete";
        write();
    }
    void write() const {
        std::ofstream out(path);
        out << doc.dump(2) << "\n";
    }
};

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
    std::filesystem::path p(out_dir.empty() ? "." : out_dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << p << "\n";
        std::exit(1);
    }
    return p;
}

// ---------------------------------------------------------------------
// train
// ---------------------------------------------------------------------

int run_train(const DataOptions& data_opt, const std::string& config_file,
              const std::string& variant, const std::vector<std::string>& overrides,
              const std::string& out_dir) {
    tkan_model_config* mc = nullptr;
    check(tkan_model_config_create(variant.c_str(), &mc), "model config");
    tkan_train_config* tc = nullptr;
    check(tkan_train_config_create(&tc), "train config");

    if (!config_file.empty())
        check(tkan_config_load_file(mc, tc, config_file.c_str()), "reading " + config_file);
    for (const std::string& kv : overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            return 1;
        }
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        const tkan_status model_s = tkan_model_config_set(mc, key.c_str(), value.c_str());
        if (model_s == TKAN_OK) continue;
        const std::string model_err = tkan_last_error();
        // A bad value on a known model key should surface as such, not as an
        // unknown train key.
        if (model_err.find("unknown model config key") == std::string::npos)
            die(model_s, "setting " + key);
        check(tkan_train_config_set(tc, key.c_str(), value.c_str()), "setting " + key);
    }
    check(tkan_train_config_set(tc, "seed", std::to_string(data_opt.seed).c_str()), "seed");

    DatasetHandle ds;
    load_dataset(data_opt, ds);

    const std::filesystem::path dir = prepare_out_dir(out_dir);
    Manifest manifest{dir / "manifest.json", {}};
    json config;
    config["model"] = kv_text_to_json(tkan_model_config_describe(mc));
    config["train"] = kv_text_to_json(tkan_train_config_describe(tc));
    manifest.start("train", config, data_opt.seed, hex64(tkan_dataset_fingerprint(ds.ptr)));

    tkan_model* model = nullptr;
    check(tkan_model_create(mc, data_opt.seed, &model), "building model");
    std::cout << "training " << tkan_model_variant(model) << " ("
              << tkan_model_param_count(model) << " parameters) on "
              << tkan_dataset_size(ds.ptr) << " snapshots\n";

    tkan_train_report* report = nullptr;
    check(tkan_train(model, ds.ptr, tc, &report), "training");

    const std::filesystem::path ckpt = dir / "checkpoint.bin";
    check(tkan_model_save(model, ckpt.string().c_str()), "saving checkpoint");
    manifest.add_output(ckpt);
    manifest.doc["checkpoint"] = ckpt.string();

    const std::filesystem::path report_csv = dir / "train_report.csv";
    {
        std::ofstream out(report_csv);
        out << "epoch,train_loss,valid_loss,valid_f1\n";
        for (size_t e = 0; e < tkan_train_report_epochs(report); ++e) {
            double tl = 0, vl = 0, f1 = 0;
            tkan_train_report_row(report, e, &tl, &vl, &f1);
            out << (e + 1) << ',' << fmt(tl) << ',' << fmt(vl) << ',' << fmt(f1) << "\n";
        }
    }
    manifest.add_output(report_csv);

    std::cout << "best epoch " << (tkan_train_report_best_epoch(report) + 1) << ", macro F1 "
              << fmt(tkan_train_report_best_f1(report)) << ", wall "
              << fmt(tkan_train_report_wall_seconds(report)) << " s\n";
    std::cout << "checkpoint: " << ckpt.string() << "\n";

    tkan_train_report_free(report);
    tkan_model_free(model);
    tkan_train_config_free(tc);
    tkan_model_config_free(mc);
    manifest.finish();
    return 0;
}

// ---------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------

int run_evaluate(const DataOptions& data_opt, const std::string& checkpoint,
                 std::vector<int> horizons, const std::string& out_dir) {
    tkan_model* model = nullptr;
    check(tkan_model_load(checkpoint.c_str(), &model), "loading " + checkpoint);
    DatasetHandle ds;
    load_dataset(data_opt, ds);

    const std::filesystem::path dir = prepare_out_dir(out_dir);
    Manifest manifest{dir / "manifest.json", {}};
    json config;
    config["model"] = kv_text_to_json(tkan_model_describe(model));
    config["checkpoint"] = checkpoint;
    config["horizons"] = horizons;
    manifest.start("evaluate", config, data_opt.seed, hex64(tkan_dataset_fingerprint(ds.ptr)));

    tkan_eval_result* result = nullptr;
    check(tkan_evaluate(model, ds.ptr, horizons.data(), horizons.size(), &result), "evaluating");

    std::printf("%-8s %-10s %-10s %-10s %-10s\n", "horizon", "precision", "recall", "f1",
                "ic");
    const std::filesystem::path curve_csv = dir / "decay_curve.csv";
    std::ofstream curve(curve_csv);
    curve << "k,ic,f1\n";
    for (int k : horizons) {
        double prec[3], rec[3], f1[3], mp = 0, mr = 0, mf = 0, ic = 0;
        check(tkan_eval_metrics(result, k, prec, rec, f1, &mp, &mr, &mf), "metrics");
        check(tkan_eval_ic(result, k, &ic), "ic");
        std::printf("%-8d %-10.4f %-10.4f %-10.4f %-10.4f\n", k, mp, mr, mf, ic);
        curve << k << ',' << fmt(ic) << ',' << fmt(mf) << "\n";
    }
    curve.close();
    manifest.add_output(curve_csv);
    std::cout << "decay curve: " << curve_csv.string() << " (" << tkan_eval_sample_count(result)
              << " windows)\n";

    tkan_eval_result_free(result);
    tkan_model_free(model);
    manifest.finish();
    return 0;
}

// ---------------------------------------------------------------------
// backtest
// ---------------------------------------------------------------------

int run_backtest(const DataOptions& data_opt, const std::string& checkpoint, double cost_bps,
                 const std::string& out_dir) {
    tkan_model* model = nullptr;
    check(tkan_model_load(checkpoint.c_str(), &model), "loading " + checkpoint);
    DatasetHandle ds;
    load_dataset(data_opt, ds);

    const std::filesystem::path dir = prepare_out_dir(out_dir);
    Manifest manifest{dir / "manifest.json", {}};
    json config;
    config["model"] = kv_text_to_json(tkan_model_describe(model));
    config["checkpoint"] = checkpoint;
    config["cost_bps"] = cost_bps;
    manifest.start("backtest", config, data_opt.seed, hex64(tkan_dataset_fingerprint(ds.ptr)));

    tkan_backtest_result* result = nullptr;
    check(tkan_run_backtest(model, ds.ptr, cost_bps, &result), "backtesting");

    const std::filesystem::path ledger_csv = dir / "ledger.csv";
    {
        std::ofstream out(ledger_csv);
        out << "step,mid,position,step_return,cum_return\n";
        for (size_t i = 0; i < tkan_backtest_steps(result); ++i) {
            double mid = 0, sr = 0, cr = 0;
            int pos = 0;
            tkan_backtest_row(result, i, &mid, &pos, &sr, &cr);
            out << i << ',' << fmt(mid) << ',' << pos << ',' << fmt(sr) << ',' << fmt(cr)
                << "\n";
        }
    }
    manifest.add_output(ledger_csv);

    std::printf("terminal return: %.2f%% over %zu steps at %.2f bps\n",
                tkan_backtest_terminal_return_pct(result), tkan_backtest_steps(result),
                cost_bps);
    std::cout << "ledger: " << ledger_csv.string() << "\n";

    tkan_backtest_result_free(result);
    tkan_model_free(model);
    manifest.finish();
    return 0;
}

// ---------------------------------------------------------------------
// inspect-splines
// ---------------------------------------------------------------------

int run_inspect(const std::string& checkpoint, size_t layer, const std::string& edge,
                size_t points, const std::string& out_dir) {
    tkan_model* model = nullptr;
    check(tkan_model_load(checkpoint.c_str(), &model), "loading " + checkpoint);
    if (tkan_model_kan_layer_count(model) == 0) {
        std::cerr << "error: checkpoint holds a " << tkan_model_variant(model)
                  << " model with no KAN layers\n";
        return 2;
    }

    size_t out_idx = 0, in_idx = 0;
    if (!edge.empty()) {
        if (std::sscanf(edge.c_str(), "%zu,%zu", &out_idx, &in_idx) != 2) {
            std::cerr << "error: --edge expects 'out,in'\n";
            return 1;
        }
    }

    const std::filesystem::path dir = prepare_out_dir(out_dir);
    Manifest manifest{dir / "manifest.json", {}};
    json config;
    config["checkpoint"] = checkpoint;
    config["layer"] = layer;
    config["edge"] = {out_idx, in_idx};
    config["points"] = points;
    manifest.start("inspect-splines", config, 0, "");

    double lo = 0, hi = 0;
    check(tkan_model_grid_domain(model, &lo, &hi), "grid domain");
    std::vector<double> xs(points), phis(points);
    for (size_t i = 0; i < points; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) /
                         static_cast<double>(points > 1 ? points - 1 : 1);
    check(tkan_model_eval_edge(model, layer, out_idx, in_idx, xs.data(), points, phis.data()),
          "evaluating edge");

    const std::filesystem::path csv = dir / "splines.csv";
    {
        std::ofstream out(csv);
        out << "x,phi\n";
        for (size_t i = 0; i < points; ++i) out << fmt(xs[i]) << ',' << fmt(phis[i]) << "\n";
    }
    manifest.add_output(csv);
    std::cout << "activation of layer " << layer << " edge (" << out_idx << "," << in_idx
              << ") written to " << csv.string() << "\n";

    tkan_model_free(model);
    manifest.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"T-KAN limit-order-book forecasting toolkit"};
    app.require_subcommand(1);

    DataOptions data_opt;
    std::string out_dir;
    std::string config_file;
    std::string checkpoint;
    std::string variant = "tkan_head";
    std::vector<std::string> sets;
    std::vector<int> horizons{10, 20, 30, 50, 100};
    double cost_bps = 1.0;
    size_t layer = 0, points = 101;
    std::string edge = "0,0";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out-dir", out_dir, "output directory")->envname("TKAN_OUT_DIR");
        cmd->add_option("--seed", data_opt.seed, "random seed");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a forecaster");
    add_common(train_cmd);
    add_data_flags(train_cmd, data_opt);
    train_cmd->add_option("--config", config_file, "key=value config file");
    train_cmd->add_option("--variant", variant, "tkan_head | tkan_gated | deeplob_lite");
    train_cmd->add_option("--set", sets, "extra key=value overrides")->expected(-1);
    double lr = -1, lambda = -1;
    int epochs = -1, batch = -1, horizon = -1;
    train_cmd->add_option("--epochs", epochs, "max training epochs");
    train_cmd->add_option("--lr", lr, "learning rate");
    train_cmd->add_option("--batch", batch, "mini-batch size");
    train_cmd->add_option("--lambda", lambda, "L1 sparsity weight");
    train_cmd->add_option("--horizon", horizon, "label horizon (10/20/30/50/100)");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "metrics and alpha-decay curve");
    add_common(eval_cmd);
    add_data_flags(eval_cmd, data_opt);
    eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--horizons", horizons, "horizons to evaluate")->delimiter(',');

    CLI::App* bt_cmd = app.add_subcommand("backtest", "transaction-cost mid-price simulation");
    add_common(bt_cmd);
    add_data_flags(bt_cmd, data_opt);
    bt_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    bt_cmd->add_option("--cost-bps", cost_bps, "one-sided cost per unit turnover");

    CLI::App* inspect_cmd = app.add_subcommand("inspect-splines", "export a learned activation");
    add_common(inspect_cmd);
    inspect_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    inspect_cmd->add_option("--layer", layer, "KAN layer index");
    inspect_cmd->add_option("--edge", edge, "edge as out,in");
    inspect_cmd->add_option("--points", points, "sample point count");

    CLI11_PARSE(app, argc, argv);

    if (train_cmd->parsed()) {
        if (epochs >= 0) sets.push_back("epochs=" + std::to_string(epochs));
        if (lr >= 0) sets.push_back("lr=" + fmt(lr));
        if (batch >= 0) sets.push_back("batch=" + std::to_string(batch));
        if (lambda >= 0) sets.push_back("lambda=" + fmt(lambda));
        if (horizon >= 0) sets.push_back("horizon=" + std::to_string(horizon));
        return run_train(data_opt, config_file, variant, sets, out_dir);
    }
    if (eval_cmd->parsed()) return run_evaluate(data_opt, checkpoint, horizons, out_dir);
    if (bt_cmd->parsed()) return run_backtest(data_opt, checkpoint, cost_bps, out_dir);
    if (inspect_cmd->parsed()) return run_inspect(checkpoint, layer, edge, points, out_dir);
    return 1;
}
