#include "scanet/train/adam.hpp"

#include <cmath>

namespace scanet::train {

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("Adam eps must be >= 0");
}

template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::size_t count, std::uint64_t step,
                 double lr, const AdamConfig& cfg) {
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < count; ++i) {
    const double g = static_cast<double>(grad[i]);
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double denom = std::sqrt(vi / c2) + cfg.eps;
    if (denom == 0.0) continue;  // eps = 0 with a zero gradient history
    param[i] = static_cast<T>(static_cast<double>(param[i]) - lr * (mi / c1) / denom);
  }
}

template <typename T>
void adam_step(nn::ParameterSet<T>& params, AdamState<T>& state, double lr) {
  state.config.validate();
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) throw MissingGradientError("adam_step: parameter '" + name + "' has no gradient");
  }
  ++state.step;
  for (auto& [name, p] : params) {
    const std::size_t n = p.shape().numel();
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) m.assign(n, T{0});
    if (v.empty()) v.assign(n, T{0});
    if (m.size() != n || v.size() != n) {
      throw std::invalid_argument("adam_step: moment size mismatch for '" + name + "'");
    }
    adam_update(p.mutable_data().data(), p.grad().data(), m.data(), v.data(), n, state.step, lr,
                state.config);
  }
}

template void adam_update<float>(float*, const float*, float*, float*, std::size_t, std::uint64_t,
                                 double, const AdamConfig&);
template void adam_update<double>(double*, const double*, double*, double*, std::size_t,
                                  std::uint64_t, double, const AdamConfig&);
template void adam_step<float>(nn::ParameterSet<float>&, AdamState<float>&, double);
template void adam_step<double>(nn::ParameterSet<double>&, AdamState<double>&, double);

}  // namespace scanet::train
