#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace embedkit {

// FNV-1a, 64-bit. Fixed, documented constants: offset basis
// 14695981039346656037, prime 1099511628211. Stable across platforms.
inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t state = kFnvOffsetBasis) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        state ^= bytes[i];
        state *= kFnvPrime;
    }
    return state;
}

inline std::uint64_t fnv1a64(std::string_view text,
                             std::uint64_t state = kFnvOffsetBasis) {
    return fnv1a64(text.data(), text.size(), state);
}

// Feeds a 64-bit value little-endian; used for length prefixes so that
// multi-field hashes cannot be spoofed by moving bytes across field
// boundaries.
inline std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t state) {
    for (int i = 0; i < 8; ++i) {
        state ^= static_cast<unsigned char>(value >> (8 * i));
        state *= kFnvPrime;
    }
    return state;
}

}  // namespace embedkit
