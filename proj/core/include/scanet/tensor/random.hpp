#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

// Stateless, counter-keyed random numbers. Every draw is a pure function of
// (seed, stream, index), so results do not depend on evaluation order.

namespace scanet::random {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a; used to key streams by names and image ids.
[[nodiscard]] constexpr std::uint64_t hash_name(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

[[nodiscard]] constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

[[nodiscard]] constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t stream,
                                           std::uint64_t index) noexcept {
  return splitmix64(mix(mix(seed, stream), index));
}

/// Uniform in the open interval (0, 1).
[[nodiscard]] inline double uniform(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return (static_cast<double>(bits(seed, stream, index) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter-keyed uniforms.
[[nodiscard]] inline double normal(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t index) noexcept {
  const double u1 = uniform(seed, stream, 2 * index);
  const double u2 = uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform integer in [0, bound).
[[nodiscard]] inline std::uint64_t below(std::uint64_t seed, std::uint64_t stream,
                                         std::uint64_t index, std::uint64_t bound) noexcept {
  return static_cast<std::uint64_t>(uniform(seed, stream, index) * static_cast<double>(bound)) %
         bound;
}

/// Sequential view over a counter-keyed stream: the i-th draw is bits(seed, stream, i).
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  [[nodiscard]] std::uint64_t below(std::uint64_t bound) noexcept {
    return random::below(seed_, stream_, counter_++, bound);
  }
  [[nodiscard]] bool coin() noexcept { return below(2) == 1; }
  [[nodiscard]] double uniform() noexcept { return random::uniform(seed_, stream_, counter_++); }
  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace scanet::random
