#pragma once

#include <cstdint>

namespace berkson {

// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
    return mix_seed(mix_seed(root ^ mix_seed(stream)) + index);
}

}  // namespace berkson
