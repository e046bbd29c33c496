#pragma once

#include <array>

#include "scanet/tensor/tensor.hpp"

namespace scanet::arch {

/// Rec. 601 luma weights used to reduce RGB input to one channel.
inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

/// Per-pixel length of the central-difference image gradient, [N,C,H,W] -> [N,1,H,W].
///
/// Three-channel input is first reduced to luma, any other channel count to the channel
/// mean. With L the reduced image, rows indexed by i and columns by j:
///   d_i = L(i+1, j) - L(i-1, j),  d_j = L(i, j+1) - L(i, j-1),  out = sqrt(d_i^2 + d_j^2)
/// Out-of-range indices clamp to the border. Differentiable; the subgradient is zero where
/// the magnitude is zero.
template <typename T>
BasicTensor<T> extract_gradient_map(const BasicTensor<T>& image);

}  // namespace scanet::arch
