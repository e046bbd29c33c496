#include "scanet/loss/metrics.hpp"

#include <array>
#include <cmath>

namespace scanet::loss {

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (a.shape() != b.shape()) detail::throw_shape_mismatch("psnr", a.shape(), b.shape());
  const auto x = a.data();
  const auto y = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(x.size());
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
    g[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Valid-mode separable Gaussian filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& g) {
  const std::size_t ow = w - kWindow + 1;
  const std::size_t oh = h - kWindow + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * src[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

double plane_ssim(const std::vector<double>& a, const std::vector<double>& b, std::size_t h,
                  std::size_t w) {
  static const auto g = gaussian_taps();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, g);
  const auto mu_b = filter_valid(b, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g);
  const auto e_bb = filter_valid(bb, h, w, g);
  const auto e_ab = filter_valid(ab, h, w, g);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

template <typename T>
double ssim_impl(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) detail::throw_shape_mismatch("ssim", a.shape(), b.shape());
  const Shape s = a.shape();
  if (s.h < kWindow || s.w < kWindow) {
    throw ShapeError("ssim: image " + s.to_string() + " smaller than the 11x11 window");
  }
  const std::size_t plane = s.plane();
  double total = 0.0;
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    std::vector<double> x(plane), y(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = static_cast<double>(a.data()[p * plane + i]);
      y[i] = static_cast<double>(b.data()[p * plane + i]);
    }
    total += plane_ssim(x, y, s.h, s.w);
  }
  return total / static_cast<double>(s.n * s.c);
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) { return ssim_impl(a, b); }
double ssim(const Tensor64& a, const Tensor64& b) { return ssim_impl(a, b); }

}  // namespace scanet::loss
