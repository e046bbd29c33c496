#include "scanet/nn/pooling.hpp"

#include "scanet/tensor/ops.hpp"

namespace scanet::nn {

using detail::make_result;
using detail::Node;

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  const auto in = x.data();
  std::vector<T> out(s.n * s.c);
  for (std::size_t i = 0; i < out.size(); ++i) {
    T acc{0};
    for (std::size_t k = 0; k < plane; ++k) acc += in[i * plane + k];
    out[i] = acc / static_cast<T>(plane);
  }
  auto xn = x.node();
  return make_result<T>(Shape{s.n, s.c, 1, 1}, std::move(out), {xn}, "global_avg_pool",
                        [xn, plane](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          for (std::size_t i = 0; i < self.grad.size(); ++i) {
                            const T up = self.grad[i] / static_cast<T>(plane);
                            for (std::size_t k = 0; k < plane; ++k) g[i * plane + k] += up;
                          }
                        });
}

template <typename T>
BasicTensor<T> channel_avg(const BasicTensor<T>& x) {
  const std::size_t c = x.shape().c;
  std::vector<T> weights(c, T{1} / static_cast<T>(c));
  return weighted_channel_sum(x, std::span<const T>(weights));
}

template <typename T>
BasicTensor<T> channel_max(const BasicTensor<T>& x) {
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  const auto in = x.data();
  std::vector<std::uint32_t> argmax;
  if (PiecewiseReplay::mode() == PiecewiseReplay::Mode::replay) {
    argmax = PiecewiseReplay::next(s.n * plane);
  } else {
    argmax.assign(s.n * plane, 0);
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t i = 0; i < plane; ++i) {
        std::uint32_t best = 0;
        T best_v = in[n * s.c * plane + i];
        for (std::size_t c = 1; c < s.c; ++c) {
          const T v = in[(n * s.c + c) * plane + i];
          if (v > best_v) {  // strict: ties keep the lowest index
            best_v = v;
            best = static_cast<std::uint32_t>(c);
          }
        }
        argmax[n * plane + i] = best;
      }
    }
    if (PiecewiseReplay::mode() == PiecewiseReplay::Mode::record) PiecewiseReplay::record(argmax);
  }
  std::vector<T> out(s.n * plane);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[n * plane + i] = in[(n * s.c + argmax[n * plane + i]) * plane + i];
    }
  }
  auto xn = x.node();
  return make_result<T>(Shape{s.n, 1, s.h, s.w}, std::move(out), {xn}, "channel_max",
                        [xn, argmax = std::move(argmax), plane](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          const std::size_t channels = xn->shape.c;
                          for (std::size_t n = 0; n < xn->shape.n; ++n) {
                            for (std::size_t i = 0; i < plane; ++i) {
                              g[(n * channels + argmax[n * plane + i]) * plane + i] +=
                                  self.grad[n * plane + i];
                            }
                          }
                        });
}

template <typename T>
BasicTensor<T> upsample_nearest(const BasicTensor<T>& x, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
  const Shape s = x.shape();
  const Shape out_shape{s.n, s.c, s.h * factor, s.w * factor};
  const auto in = x.data();
  std::vector<T> out(out_shape.numel());
  const std::size_t W = out_shape.w;
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    const T* src = in.data() + p * s.plane();
    T* dst = out.data() + p * out_shape.plane();
    for (std::size_t y = 0; y < out_shape.h; ++y) {
      const T* row = src + (y / factor) * s.w;
      for (std::size_t xx = 0; xx < W; ++xx) dst[y * W + xx] = row[xx / factor];
    }
  }
  auto xn = x.node();
  return make_result<T>(out_shape, std::move(out), {xn}, "upsample_nearest",
                        [xn, factor, out_shape](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          const Shape& s = xn->shape;
                          const std::size_t W = out_shape.w;
                          for (std::size_t p = 0; p < s.n * s.c; ++p) {
                            const T* up = self.grad.data() + p * out_shape.plane();
                            T* dst = g.data() + p * s.plane();
                            for (std::size_t y = 0; y < out_shape.h; ++y) {
                              T* row = dst + (y / factor) * s.w;
                              for (std::size_t xx = 0; xx < W; ++xx) row[xx / factor] += up[y * W + xx];
                            }
                          }
                        });
}

#define SCANET_INSTANTIATE_POOL(T)                                              \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);               \
  template BasicTensor<T> channel_avg(const BasicTensor<T>&);                   \
  template BasicTensor<T> channel_max(const BasicTensor<T>&);                   \
  template BasicTensor<T> upsample_nearest(const BasicTensor<T>&, std::size_t);

SCANET_INSTANTIATE_POOL(float)
SCANET_INSTANTIATE_POOL(double)

}  // namespace scanet::nn
