#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "scanet/nn/parameters.hpp"

namespace scanet::train {

class MissingGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Moments are kept in the parameter precision so that a saved state resumes bit-exactly.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<T>> first_moment;
  std::map<std::string, std::vector<T>> second_moment;
};

/// One bias-corrected Adam update of a single tensor; `step` is the 1-based step index.
template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::size_t count, std::uint64_t step,
                 double lr, const AdamConfig& cfg);

/// Updates every parameter in place from its .grad(). Throws MissingGradientError if any
/// parameter has no gradient buffer (zero_grad() first so unused parameters carry zeros).
template <typename T>
void adam_step(nn::ParameterSet<T>& params, AdamState<T>& state, double lr);

}  // namespace scanet::train
