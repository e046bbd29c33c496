#pragma once

#include <limits>

#include "scanet/tensor/tensor.hpp"

namespace scanet::loss {

/// Returned by psnr() for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) in dB.
[[nodiscard]] double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5, valid positions only),
/// K1 = 0.01, K2 = 0.03, dynamic range 1. Multi-channel images and batches are averaged per
/// plane. Throws ShapeError when a plane is smaller than the window.
[[nodiscard]] double ssim(const Tensor& a, const Tensor& b);
[[nodiscard]] double ssim(const Tensor64& a, const Tensor64& b);

}  // namespace scanet::loss
