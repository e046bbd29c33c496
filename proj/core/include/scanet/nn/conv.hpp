#pragma once

#include <cstdint>
#include <string>

#include "scanet/tensor/tensor.hpp"

namespace scanet::nn {

/// Shape-only description of a square-kernel 2-D convolution.
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
  bool bias = true;

  /// Throws std::invalid_argument on a zero extent or non-divisible groups.
  void validate() const;
  /// Output shape for input `in`; throws ShapeError on channel mismatch or a kernel
  /// larger than the padded input.
  [[nodiscard]] Shape output_shape(const Shape& in) const;
  [[nodiscard]] std::uint64_t weight_count() const;
  [[nodiscard]] std::uint64_t param_count() const;
  /// H_out * W_out * C_out * (C_in / groups) * k^2 per image.
  [[nodiscard]] std::uint64_t macs(const Shape& out) const;
};

/// A named convolution with its learnable weight [out, in/groups, k, k] and bias [out]
/// (flattened into [1, out, 1, 1]). The bias tensor is undefined when geometry.bias is false.
template <typename T>
struct Conv2dParams {
  std::string name;
  ConvGeometry geometry;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

/// Zero-padded cross-correlation.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const ConvGeometry& geometry);

/// Runs the layer and reports its cost to the active CostRecorder, if any.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p);

/// conv2d with groups = channels (one k x k filter per output channel).
template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p);

/// Stride-2 3x3 conv halving H and W. Rejects odd spatial extents.
template <typename T>
BasicTensor<T> downsample_stride2(const BasicTensor<T>& x, const Conv2dParams<T>& p);

/// Nearest-neighbour 2x enlargement followed by a 3x3 conv.
template <typename T>
BasicTensor<T> upsample2x(const BasicTensor<T>& x, const Conv2dParams<T>& p);

[[nodiscard]] ConvGeometry conv_geometry(std::size_t in, std::size_t out, std::size_t kernel,
                                         std::size_t stride = 1, std::size_t groups = 1);

}  // namespace scanet::nn
