#pragma once

#include <cstddef>
#include <cstdint>

namespace tkan {

// FNV-1a, 64-bit. Used for data fingerprints and file checksums.
inline uint64_t fnv1a(const void* bytes, size_t len, uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace tkan
