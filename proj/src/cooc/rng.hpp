#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cooc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent stream for one unit of work (a document), derived only from the
// run seed and a stable key, so parallel schedules reproduce serial output.
inline std::mt19937_64 derived_stream(std::uint64_t seed, std::string_view key) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ fnv1a(key)));
}
inline std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t key) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(key + 0x51ed27)));
}

// Uniform in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cooc
