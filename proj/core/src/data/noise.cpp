#include "scanet/data/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "scanet/tensor/random.hpp"

namespace scanet::data {

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::gaussian ? "gaussian" : "poisson_gaussian";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "gaussian") return NoiseKind::gaussian;
  if (text == "poisson_gaussian") return NoiseKind::poisson_gaussian;
  throw std::invalid_argument("unknown noise kind '" + text + "'");
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("noise sigma must be >= 0");
  if (!(poisson_scale >= 0.0) || !std::isfinite(poisson_scale)) {
    throw std::invalid_argument("poisson_scale must be >= 0");
  }
}

Tensor add_noise(const Tensor& clean, const NoiseSpec& spec, std::uint64_t stream) {
  spec.validate();
  const auto src = clean.data();
  std::vector<float> out(src.begin(), src.end());
  const bool shot = spec.kind == NoiseKind::poisson_gaussian && spec.poisson_scale > 0.0;
  if (spec.sigma == 0.0 && !shot) return Tensor::from_data(clean.shape(), std::move(out));
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sd = spec.sigma;
    if (shot) sd = std::sqrt(spec.sigma * spec.sigma + spec.poisson_scale * std::max(0.0, double(src[i])));
    out[i] = static_cast<float>(double(src[i]) + sd * random::normal(spec.seed, stream, i));
  }
  return Tensor::from_data(clean.shape(), std::move(out));
}

}  // namespace scanet::data
