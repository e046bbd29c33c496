#include "scanet/nn/conv.hpp"

#include <Eigen/Core>

#include "scanet/nn/cost_recorder.hpp"
#include "scanet/nn/pooling.hpp"

namespace scanet::nn {

using detail::make_result;
using detail::Node;

void ConvGeometry::validate() const {
  if (in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 || groups == 0) {
    throw std::invalid_argument("conv: channels, kernel, stride and groups must be >= 1");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw std::invalid_argument("conv: in_channels " + std::to_string(in_channels) +
                                " and out_channels " + std::to_string(out_channels) +
                                " must be divisible by groups " + std::to_string(groups));
  }
}

Shape ConvGeometry::output_shape(const Shape& in) const {
  validate();
  if (in.c != in_channels) {
    throw ShapeError("conv: input " + in.to_string() + " has " + std::to_string(in.c) +
                     " channels, expected " + std::to_string(in_channels));
  }
  if (in.h + 2 * padding < kernel || in.w + 2 * padding < kernel) {
    throw ShapeError("conv: kernel " + std::to_string(kernel) + " exceeds padded input " +
                     in.to_string());
  }
  return Shape{in.n, out_channels, (in.h + 2 * padding - kernel) / stride + 1,
               (in.w + 2 * padding - kernel) / stride + 1};
}

std::uint64_t ConvGeometry::weight_count() const {
  return static_cast<std::uint64_t>(out_channels) * (in_channels / groups) * kernel * kernel;
}

std::uint64_t ConvGeometry::param_count() const {
  return weight_count() + (bias ? out_channels : 0);
}

std::uint64_t ConvGeometry::macs(const Shape& out) const {
  return static_cast<std::uint64_t>(out.h) * out.w * out_channels * (in_channels / groups) *
         kernel * kernel;
}

ConvGeometry conv_geometry(std::size_t in, std::size_t out, std::size_t kernel,
                           std::size_t stride, std::size_t groups) {
  return ConvGeometry{in, out, kernel, stride, kernel / 2, groups, true};
}

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMatrix<T>>;

struct Dims {
  std::size_t n, cin, h, w, cout, ho, wo, k, stride, pad, groups, cin_g, cout_g;
  [[nodiscard]] std::size_t patch() const { return cin_g * k * k; }
  [[nodiscard]] std::size_t out_plane() const { return ho * wo; }
};

Dims make_dims(const Shape& in, const Shape& out, const ConvGeometry& g) {
  return Dims{in.n,     in.c,     in.h,     in.w,        out.c,
              out.h,    out.w,    g.kernel, g.stride,    g.padding,
              g.groups, in.c / g.groups,    out.c / g.groups};
}

// col[(ci*k + ky)*k + kx][n*P + oy*wo + ox] = x[n, group_base + ci, oy*s - p + ky, ox*s - p + kx]
template <typename T>
void im2col(const T* x, const Dims& d, std::size_t group, RowMatrix<T>& col) {
  const std::size_t P = d.out_plane();
  col.resize(static_cast<Eigen::Index>(d.patch()), static_cast<Eigen::Index>(d.n * P));
  for (std::size_t ci = 0; ci < d.cin_g; ++ci) {
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        T* row = col.data() + ((ci * d.k + ky) * d.k + kx) * d.n * P;
        for (std::size_t n = 0; n < d.n; ++n) {
          const T* plane = x + (n * d.cin + group * d.cin_g + ci) * d.h * d.w;
          T* dst = row + n * P;
          for (std::size_t oy = 0; oy < d.ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            T* line = dst + oy * d.wo;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) {
              std::fill_n(line, d.wo, T{0});
              continue;
            }
            const T* src = plane + static_cast<std::size_t>(iy) * d.w;
            for (std::size_t ox = 0; ox < d.wo; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              line[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) ? T{0} : src[ix];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const RowMatrix<T>& col, const Dims& d, std::size_t group, T* dx) {
  const std::size_t P = d.out_plane();
  for (std::size_t ci = 0; ci < d.cin_g; ++ci) {
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        const T* row = col.data() + ((ci * d.k + ky) * d.k + kx) * d.n * P;
        for (std::size_t n = 0; n < d.n; ++n) {
          T* plane = dx + (n * d.cin + group * d.cin_g + ci) * d.h * d.w;
          const T* src = row + n * P;
          for (std::size_t oy = 0; oy < d.ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
            T* line = plane + static_cast<std::size_t>(iy) * d.w;
            const T* s = src + oy * d.wo;
            for (std::size_t ox = 0; ox < d.wo; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(d.w)) line[ix] += s[ox];
            }
          }
        }
      }
    }
  }
}

// Gathers output channels [group*cout_g, (group+1)*cout_g) of an NCHW buffer into a
// [cout_g, N*P] matrix.
template <typename T>
void gather_output(const T* y, const Dims& d, std::size_t group, RowMatrix<T>& m) {
  const std::size_t P = d.out_plane();
  m.resize(static_cast<Eigen::Index>(d.cout_g), static_cast<Eigen::Index>(d.n * P));
  for (std::size_t co = 0; co < d.cout_g; ++co) {
    for (std::size_t n = 0; n < d.n; ++n) {
      std::copy_n(y + (n * d.cout + group * d.cout_g + co) * P, P, m.data() + (co * d.n + n) * P);
    }
  }
}

template <typename T>
void direct_forward(const T* x, const T* w, const Dims& d, T* y) {
  // Depthwise-style path: every output channel reads a single input channel.
  const std::size_t per_in = d.cout_g;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
      const T* plane = x + (n * d.cin + oc / per_in) * d.h * d.w;
      const T* filt = w + oc * d.k * d.k;
      T* out = y + (n * d.cout + oc) * d.out_plane();
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const T wv = filt[ky * d.k + kx];
          for (std::size_t oy = 0; oy < d.ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
            const T* src = plane + static_cast<std::size_t>(iy) * d.w;
            T* dst = out + oy * d.wo;
            for (std::size_t ox = 0; ox < d.wo; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(d.w)) dst[ox] += wv * src[ix];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void direct_backward(const T* x, const T* w, const T* gy, const Dims& d, T* gx, T* gw) {
  const std::size_t per_in = d.cout_g;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
      const std::size_t ic = oc / per_in;
      const T* plane = x + (n * d.cin + ic) * d.h * d.w;
      T* gplane = gx ? gx + (n * d.cin + ic) * d.h * d.w : nullptr;
      const T* filt = w + oc * d.k * d.k;
      T* gfilt = gw ? gw + oc * d.k * d.k : nullptr;
      const T* up = gy + (n * d.cout + oc) * d.out_plane();
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const T wv = filt[ky * d.k + kx];
          T acc{0};
          for (std::size_t oy = 0; oy < d.ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
            const std::size_t row = static_cast<std::size_t>(iy) * d.w;
            const T* u = up + oy * d.wo;
            for (std::size_t ox = 0; ox < d.wo; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
              acc += u[ox] * plane[row + static_cast<std::size_t>(ix)];
              if (gplane) gplane[row + static_cast<std::size_t>(ix)] += u[ox] * wv;
            }
          }
          if (gfilt) gfilt[ky * d.k + kx] += acc;
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const ConvGeometry& geometry) {
  const Shape out_shape = geometry.output_shape(x.shape());
  const Shape expected_w{geometry.out_channels, geometry.in_channels / geometry.groups,
                         geometry.kernel, geometry.kernel};
  if (weight.shape() != expected_w) detail::throw_shape_mismatch("conv2d weight", weight.shape(), expected_w);
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != geometry.out_channels) {
    detail::throw_shape_mismatch("conv2d bias", bias.shape(), Shape{1, geometry.out_channels, 1, 1});
  }
  const Dims d = make_dims(x.shape(), out_shape, geometry);
  const std::size_t P = d.out_plane();
  std::vector<T> out(out_shape.numel(), T{0});
  const bool direct = d.cin_g == 1 && d.cout_g <= 4;

  if (direct) {
    direct_forward(x.data().data(), weight.data().data(), d, out.data());
  } else {
    RowMatrix<T> col;
    RowMatrix<T> result;
    for (std::size_t g = 0; g < d.groups; ++g) {
      im2col(x.data().data(), d, g, col);
      ConstMap<T> wg(weight.data().data() + g * d.cout_g * d.patch(),
                     static_cast<Eigen::Index>(d.cout_g), static_cast<Eigen::Index>(d.patch()));
      result.noalias() = wg * col;
      for (std::size_t co = 0; co < d.cout_g; ++co) {
        for (std::size_t n = 0; n < d.n; ++n) {
          std::copy_n(result.data() + (co * d.n + n) * P, P,
                      out.data() + (n * d.cout + g * d.cout_g + co) * P);
        }
      }
    }
  }
  if (has_bias) {
    const auto b = bias.data();
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t co = 0; co < d.cout; ++co) {
        T* dst = out.data() + (n * d.cout + co) * P;
        for (std::size_t i = 0; i < P; ++i) dst[i] += b[co];
      }
    }
  }

  auto xn = x.node();
  auto wn = weight.node();
  std::vector<std::shared_ptr<Node<T>>> inputs{xn, wn};
  std::shared_ptr<Node<T>> bn;
  if (has_bias) {
    bn = bias.node();
    inputs.push_back(bn);
  }
  return make_result<T>(out_shape, std::move(out), inputs, "conv2d",
                        [xn, wn, bn, d, direct](Node<T>& self) {
    const std::size_t P = d.out_plane();
    const T* gy = self.grad.data();
    if (bn && bn->requires_grad) {
      auto& gb = bn->ensure_grad();
      for (std::size_t n = 0; n < d.n; ++n) {
        for (std::size_t co = 0; co < d.cout; ++co) {
          const T* src = gy + (n * d.cout + co) * P;
          T acc{0};
          for (std::size_t i = 0; i < P; ++i) acc += src[i];
          gb[co] += acc;
        }
      }
    }
    const bool need_x = xn->requires_grad;
    const bool need_w = wn->requires_grad;
    if (!need_x && !need_w) return;
    if (direct) {
      T* gx = need_x ? xn->ensure_grad().data() : nullptr;
      T* gw = need_w ? wn->ensure_grad().data() : nullptr;
      direct_backward(xn->data.data(), wn->data.data(), gy, d, gx, gw);
      return;
    }
    RowMatrix<T> col;
    RowMatrix<T> gmat;
    RowMatrix<T> dcol;
    for (std::size_t g = 0; g < d.groups; ++g) {
      gather_output(gy, d, g, gmat);
      const auto rows = static_cast<Eigen::Index>(d.cout_g);
      const auto cols = static_cast<Eigen::Index>(d.patch());
      if (need_w) {
        im2col(xn->data.data(), d, g, col);
        MutMap<T> gw(wn->ensure_grad().data() + g * d.cout_g * d.patch(), rows, cols);
        gw.noalias() += gmat * col.transpose();
      }
      if (need_x) {
        ConstMap<T> wg(wn->data.data() + g * d.cout_g * d.patch(), rows, cols);
        dcol.noalias() = wg.transpose() * gmat;
        col2im_add(dcol, d, g, xn->ensure_grad().data());
      }
    }
  });
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p) {
  BasicTensor<T> y = conv2d(x, p.weight, p.bias, p.geometry);
  if (auto* recorder = CostRecorder::active()) {
    recorder->add(LayerCost{p.name, y.shape(), p.geometry.param_count(), p.geometry.macs(y.shape())});
  }
  return y;
}

template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& x, const Conv2dParams<T>& p) {
  const auto& g = p.geometry;
  if (g.groups != g.in_channels || g.out_channels != g.in_channels) {
    throw std::invalid_argument("depthwise_conv2d: layer " + p.name +
                                " must have groups == in_channels == out_channels");
  }
  return conv2d(x, p);
}

template <typename T>
BasicTensor<T> downsample_stride2(const BasicTensor<T>& x, const Conv2dParams<T>& p) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("downsample_stride2: spatial dims must be even, got " + s.to_string());
  }
  if (p.geometry.stride != 2 || p.geometry.kernel != 3 || p.geometry.padding != 1) {
    throw std::invalid_argument("downsample_stride2: layer " + p.name +
                                " must be a 3x3 stride-2 conv with padding 1");
  }
  return conv2d(x, p);
}

template <typename T>
BasicTensor<T> upsample2x(const BasicTensor<T>& x, const Conv2dParams<T>& p) {
  return conv2d(upsample_nearest(x, 2), p);
}

#define SCANET_INSTANTIATE_CONV(T)                                                           \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                 const BasicTensor<T>&, const ConvGeometry&);                \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const Conv2dParams<T>&);             \
  template BasicTensor<T> depthwise_conv2d(const BasicTensor<T>&, const Conv2dParams<T>&);   \
  template BasicTensor<T> downsample_stride2(const BasicTensor<T>&, const Conv2dParams<T>&); \
  template BasicTensor<T> upsample2x(const BasicTensor<T>&, const Conv2dParams<T>&);

SCANET_INSTANTIATE_CONV(float)
SCANET_INSTANTIATE_CONV(double)

}  // namespace scanet::nn
