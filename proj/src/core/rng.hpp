#pragma once

#include <cstdint>
#include <vector>

#include "core/error.hpp"

namespace tkan {

// Counter-based generator: draw i is a pure function of (key, i), so streams
// split from the same seed are independent of call order and bit-identical
// across platforms (integer ops only).
class RngState {
public:
    explicit RngState(uint64_t seed);

    // Derives an independent stream; the parent is unaffected.
    RngState split(uint64_t stream_id) const;

    uint64_t next_u64();
    double next_unit();                    // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // standard normal, Box-Muller

    uint64_t seed() const noexcept { return key_; }
    uint64_t counter() const noexcept { return counter_; }

private:
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

// n draws in [lo, hi); advances rng. lo >= hi is an error.
std::vector<double> seeded_uniform(RngState& rng, double lo, double hi, size_t n);

}  // namespace tkan
