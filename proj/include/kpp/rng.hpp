#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kpp {

/// Stream-splitting rule: every consumer derives its own generator from
/// (seed, purpose[, index]) via FNV-1a hashing of the purpose string, so
/// e.g. simulation draws and multi-start perturbations never share a stream.
inline std::uint64_t stream_key(long seed, std::string_view purpose, std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffull;
      h *= 1099511628211ull;
    }
  };
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  mix(static_cast<std::uint64_t>(seed));
  mix(index);
  return h;
}

inline std::mt19937_64 stream_rng(long seed, std::string_view purpose, std::uint64_t index = 0) {
  return std::mt19937_64(stream_key(seed, purpose, index));
}

}  // namespace kpp
