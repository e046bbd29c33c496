#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scanet/nn/conv.hpp"
#include "scanet/nn/parameters.hpp"
#include "scanet/tensor/tensor.hpp"

namespace scanet::cam {

/// Hyper-parameters of one Complementary Attention Module.
struct CamConfig {
  std::size_t channels = 32;
  /// Cheap maps generated per intrinsic map.
  std::size_t sparse_ratio = 3;
  std::size_t sa_kernel = 7;
  std::size_t ca_reduction = 8;
  std::size_t cheap_kernel = 3;
  bool enable_dense = true;
  bool enable_sparse = true;

  /// Throws std::invalid_argument when a divisibility or odd-kernel rule is violated.
  void validate() const;
  [[nodiscard]] CamConfig with_channels(std::size_t c) const {
    CamConfig copy = *this;
    copy.channels = c;
    return copy;
  }

  friend bool operator==(const CamConfig&, const CamConfig&) = default;
};

/// Gates every channel of U with sigmoid(conv_k(concat(channel_avg(U), channel_max(U)))).
template <typename T>
class SpatialAttention {
 public:
  SpatialAttention(nn::ParamFactory<T>& factory, const std::string& prefix, const CamConfig& cfg);

  /// The [N,1,H,W] gate in (0,1).
  [[nodiscard]] BasicTensor<T> attention_map(const BasicTensor<T>& u) const;
  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& u) const;

  nn::Conv2dParams<T> conv;

 private:
  std::size_t channels_;
};

/// Squeeze-excite style gating: sigmoid(excite(relu(squeeze(global_avg_pool(U))))) per channel.
template <typename T>
class ChannelAttention {
 public:
  ChannelAttention(nn::ParamFactory<T>& factory, const std::string& prefix, const CamConfig& cfg);

  /// The [N,C,1,1] gate in (0,1).
  [[nodiscard]] BasicTensor<T> gates(const BasicTensor<T>& u) const;
  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& u) const;

  nn::Conv2dParams<T> squeeze;
  nn::Conv2dParams<T> excite;

 private:
  std::size_t channels_;
};

/// Y = X + fuse(concat(SA(U), CA(U))) with U = relu(conv2(relu(conv1(X)))).
template <typename T>
class DenseModule {
 public:
  DenseModule(nn::ParamFactory<T>& factory, const std::string& prefix, const CamConfig& cfg);

  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  [[nodiscard]] BasicTensor<T> features(const BasicTensor<T>& x) const;

  nn::Conv2dParams<T> conv1;
  nn::Conv2dParams<T> conv2;
  SpatialAttention<T> spatial;
  ChannelAttention<T> channel;
  nn::Conv2dParams<T> fuse;

 private:
  std::size_t channels_;
};

/// Ghost-style expansion: an intrinsic 3x3 conv (+relu) produces c = out/(s+1) maps, and s
/// independent depthwise filters per map produce the cheap maps. Output channel order is
/// [intrinsic c | cheap j=1 (c) | ... | cheap j=s (c)].
template <typename T>
class SparseModule {
 public:
  SparseModule(nn::ParamFactory<T>& factory, const std::string& prefix, std::size_t in_channels,
               std::size_t out_channels, const CamConfig& cfg);

  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  [[nodiscard]] std::size_t intrinsic_channels() const { return primary.geometry.out_channels; }
  [[nodiscard]] std::size_t out_channels() const {
    return intrinsic_channels() * (cheap.size() + 1);
  }

  nn::Conv2dParams<T> primary;
  std::vector<nn::Conv2dParams<T>> cheap;
};

/// Dense stage then sparse stage (as a residual, z + SM(z)); a disabled stage passes its
/// input through unchanged. Output shape equals input shape.
template <typename T>
class CamBlock {
 public:
  CamBlock(nn::ParamFactory<T>& factory, const std::string& prefix, const CamConfig& cfg);

  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  [[nodiscard]] const CamConfig& config() const { return cfg_; }

  DenseModule<T> dense;
  std::optional<SparseModule<T>> sparse;  // absent when channels are not divisible by s + 1

 private:
  CamConfig cfg_;
};

}  // namespace scanet::cam
