#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace schemamatch {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a. Stable across processes and platforms, used to seed
// deterministic pseudo-random streams.
constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace schemamatch
