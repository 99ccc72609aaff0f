#pragma once

#include <optional>
#include <string>

#include "model/forecaster.hpp"

namespace tkan {

// Self-describing binary checkpoint: header (magic, format version, variant,
// dims, grid spec, parameter count) followed by the flat little-endian double
// parameter array in registry order and an FNV-1a checksum. Round-trips are
// bit-exact.
void save_checkpoint(const Forecaster& model, const std::string& path);

// `expected`, when given, refuses checkpoints of any other variant.
Forecaster load_checkpoint(const std::string& path,
                           std::optional<Variant> expected = std::nullopt);

}  // namespace tkan
