#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "scanet/nn/conv.hpp"
#include "scanet/tensor/tensor.hpp"

namespace scanet::nn {

/// Named learnable tensors in canonical (lexicographic) order.
template <typename T>
class ParameterSet {
 public:
  using Map = std::map<std::string, BasicTensor<T>>;

  /// Throws std::invalid_argument on a duplicate name.
  void add(const std::string& name, BasicTensor<T> tensor);
  [[nodiscard]] const BasicTensor<T>& at(const std::string& name) const;
  [[nodiscard]] BasicTensor<T>& at(const std::string& name);
  [[nodiscard]] bool contains(const std::string& name) const { return tensors_.contains(name); }

  [[nodiscard]] std::size_t size() const { return tensors_.size(); }
  [[nodiscard]] std::uint64_t element_count() const;
  [[nodiscard]] auto begin() const { return tensors_.begin(); }
  [[nodiscard]] auto end() const { return tensors_.end(); }
  [[nodiscard]] auto begin() { return tensors_.begin(); }
  [[nodiscard]] auto end() { return tensors_.end(); }

  void zero_grad();

 private:
  Map tensors_;
};

/// Creates convolution parameters and registers them as "<name>.weight" / "<name>.bias".
/// Weights are Kaiming-uniform over fan-in, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn from
/// a stream keyed by (seed, name), so values do not depend on construction order. Biases
/// start at zero.
template <typename T>
class ParamFactory {
 public:
  ParamFactory(ParameterSet<T>& set, std::uint64_t seed) : set_(&set), seed_(seed) {}

  Conv2dParams<T> conv(const std::string& name, const ConvGeometry& geometry);

 private:
  ParameterSet<T>* set_;
  std::uint64_t seed_;
};

}  // namespace scanet::nn
