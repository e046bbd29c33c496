#pragma once

#include <cstdint>
#include <string>

#include "scanet/tensor/tensor.hpp"

namespace scanet::data {

enum class NoiseKind { gaussian, poisson_gaussian };

[[nodiscard]] std::string to_string(NoiseKind kind);
[[nodiscard]] NoiseKind parse_noise_kind(const std::string& text);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 25.0 / 255.0;  // read noise, in [0,1] units
  double poisson_scale = 0.0;   // shot-noise gain: variance grows by poisson_scale * clean
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Returns clean + noise, unclamped. Element i of image `stream` always draws the same
/// sample for a given seed, independent of call order.
///
/// poisson_gaussian uses the heteroscedastic Gaussian approximation
/// N(0, sigma^2 + poisson_scale * max(clean, 0)).
[[nodiscard]] Tensor add_noise(const Tensor& clean, const NoiseSpec& spec, std::uint64_t stream = 0);

}  // namespace scanet::data
