#pragma once

#include <cstdint>

namespace sgdqn {

// splitmix64 finaliser; decorrelates nearby integers.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent seed for item `index` of stream `stream` under `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(base) ^ stream) + index);
}

namespace seed_stream {
inline constexpr std::uint64_t training_scenarios = 1;
inline constexpr std::uint64_t exploration = 2;
inline constexpr std::uint64_t network_init = 3;
inline constexpr std::uint64_t replay_sampling = 4;
inline constexpr std::uint64_t predictor = 5;
}  // namespace seed_stream

}  // namespace sgdqn
