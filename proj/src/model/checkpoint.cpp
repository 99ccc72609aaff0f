#include "model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "core/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace tkan {

namespace {

constexpr char kMagic[8] = {'T', 'K', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

struct Header {
    uint32_t version = kVersion;
    uint32_t variant = 0;
    uint32_t input_dim = 0;
    uint32_t window = 0;
    uint32_t hidden_dim = 0;
    uint32_t encoder_layers = 0;
    uint32_t head_hidden = 0;
    uint32_t head_concat = 0;
    uint32_t class_count = 0;
    uint32_t conv_channels = 0;
    uint32_t grid_order = 0;
    uint32_t grid_intervals = 0;
    double grid_lo = 0.0;
    double grid_hi = 0.0;
    uint64_t param_count = 0;
};

template <typename T>
void read_pod(std::ifstream& in, T& value, const char* what) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), ErrorCode::corrupt,
            std::string("checkpoint truncated while reading ") + what);
}

}  // namespace

void save_checkpoint(const Forecaster& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open checkpoint for writing: " + path);

    const ModelConfig& cfg = model.config();
    Header h;
    h.variant = static_cast<uint32_t>(cfg.variant);
    h.input_dim = cfg.input_dim;
    h.window = cfg.window;
    h.hidden_dim = cfg.hidden_dim;
    h.encoder_layers = cfg.encoder_layers;
    h.head_hidden = cfg.head_hidden;
    h.head_concat = cfg.head_concat ? 1 : 0;
    h.class_count = cfg.class_count;
    h.conv_channels = cfg.conv_channels;
    h.grid_order = cfg.grid.order;
    h.grid_intervals = cfg.grid.intervals;
    h.grid_lo = cfg.grid.lo;
    h.grid_hi = cfg.grid.hi;
    h.param_count = model.param_count();

    std::vector<double> params(model.param_count());
    model.copy_params(params);
    const uint64_t checksum = fnv1a(params.data(), params.size() * sizeof(double));

    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    require(out.good(), ErrorCode::io, "write failed for checkpoint: " + path);
}

Forecaster load_checkpoint(const std::string& path, std::optional<Variant> expected) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, ErrorCode::corrupt,
            "not a tkan checkpoint: " + path);

    Header h;
    read_pod(in, h, "header");
    require(h.version == kVersion, ErrorCode::version_mismatch,
            "checkpoint format version " + std::to_string(h.version) + " unsupported (want " +
                std::to_string(kVersion) + ")");
    require(h.variant <= 2, ErrorCode::corrupt, "checkpoint variant field out of range");

    ModelConfig cfg;
    cfg.variant = static_cast<Variant>(h.variant);
    cfg.input_dim = static_cast<int>(h.input_dim);
    cfg.window = static_cast<int>(h.window);
    cfg.hidden_dim = static_cast<int>(h.hidden_dim);
    cfg.encoder_layers = static_cast<int>(h.encoder_layers);
    cfg.head_hidden = static_cast<int>(h.head_hidden);
    cfg.head_concat = h.head_concat != 0;
    cfg.class_count = static_cast<int>(h.class_count);
    cfg.conv_channels = static_cast<int>(h.conv_channels);
    cfg.grid.order = static_cast<int>(h.grid_order);
    cfg.grid.intervals = static_cast<int>(h.grid_intervals);
    cfg.grid.lo = h.grid_lo;
    cfg.grid.hi = h.grid_hi;

    if (expected && *expected != cfg.variant)
        fail(ErrorCode::shape_mismatch,
             std::string("checkpoint holds a ") + variant_name(cfg.variant) +
                 " model, expected " + variant_name(*expected));

    Forecaster model(cfg, 0);
    require(h.param_count == model.param_count(), ErrorCode::shape_mismatch,
            "checkpoint parameter count " + std::to_string(h.param_count) +
                " does not match the declared configuration (" +
                std::to_string(model.param_count()) + ")");

    std::vector<double> params(model.param_count());
    in.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(params.size() * sizeof(double)),
            ErrorCode::corrupt, "checkpoint truncated in parameter block");

    uint64_t stored = 0;
    read_pod(in, stored, "checksum");
    const uint64_t checksum = fnv1a(params.data(), params.size() * sizeof(double));
    require(stored == checksum, ErrorCode::corrupt, "checkpoint checksum mismatch: " + path);

    model.set_params(params);
    return model;
}

}  // namespace tkan
