#include "core/rng.hpp"

#include <cmath>

namespace tkan {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

}  // namespace

RngState::RngState(uint64_t seed) : key_(mix64(seed ^ kGolden)) {}

RngState RngState::split(uint64_t stream_id) const {
    RngState child(0);
    child.key_ = mix64(key_ ^ mix64(stream_id + 0x632be59bd9b4e019ull));
    child.counter_ = 0;
    return child;
}

uint64_t RngState::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngState::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
    return lo + next_unit() * (hi - lo);
}

double RngState::normal() {
    // 1 - u keeps the log argument strictly positive.
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::vector<double> seeded_uniform(RngState& rng, double lo, double hi, size_t n) {
    require(lo < hi, ErrorCode::invalid_argument, "seeded_uniform: lo must be < hi");
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = rng.uniform(lo, hi);
    return out;
}

}  // namespace tkan
