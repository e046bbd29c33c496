#include "scanet/tensor/ops.hpp"

#include <cmath>
#include <numeric>

namespace scanet {

using detail::make_result;
using detail::Node;

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
void require_same_shape(const char* op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) detail::throw_shape_mismatch(op, a.shape(), b.shape());
}

// Elementwise unary op with derivative expressed through (x, y).
template <typename T, typename Fwd, typename Deriv>
BasicTensor<T> unary(const char* name, const BasicTensor<T>& x, Fwd fwd, Deriv deriv) {
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  NodePtr<T> xn = x.node();
  return make_result<T>(x.shape(), std::move(out), {xn}, name, [xn, deriv](Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(xn->data[i], self.data[i]);
  });
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("add", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  NodePtr<T> an = a.node(), bn = b.node();
  return make_result<T>(a.shape(), std::move(out), {an, bn}, "add", [an, bn](Node<T>& self) {
    if (an->requires_grad) an->accumulate_grad(self.grad);
    if (bn->requires_grad) bn->accumulate_grad(self.grad);
  });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("sub", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  NodePtr<T> an = a.node(), bn = b.node();
  return make_result<T>(a.shape(), std::move(out), {an, bn}, "sub", [an, bn](Node<T>& self) {
    if (an->requires_grad) an->accumulate_grad(self.grad);
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("mul", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  NodePtr<T> an = a.node(), bn = b.node();
  return make_result<T>(a.shape(), std::move(out), {an, bn}, "mul", [an, bn](Node<T>& self) {
    if (an->requires_grad) {
      auto& g = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->data[i];
    }
  });
}

template <typename T>
BasicTensor<T> neg(const BasicTensor<T>& x) {
  return mul_scalar(x, T{-1});
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& x, T value) {
  return unary<T>(
      "add_scalar", x, [value](T v) { return v + value; }, [](T, T) { return T{1}; });
}

template <typename T>
BasicTensor<T> mul_scalar(const BasicTensor<T>& x, T value) {
  return unary<T>(
      "mul_scalar", x, [value](T v) { return v * value; }, [value](T, T) { return value; });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  return unary<T>(
      "sigmoid", x,
      [](T v) {
        // Split on sign so exp never overflows.
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  const auto in = x.data();
  std::vector<std::uint32_t> mask;
  const auto mode = PiecewiseReplay::mode();
  if (mode != PiecewiseReplay::Mode::off) {
    if (mode == PiecewiseReplay::Mode::replay) {
      mask = PiecewiseReplay::next(in.size());
    } else {
      mask.resize(in.size());
      for (std::size_t i = 0; i < in.size(); ++i) mask[i] = in[i] > T{0};
      PiecewiseReplay::record(mask);
    }
  }
  std::vector<T> out(in.size());
  if (mask.empty()) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
  } else {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = mask[i] ? in[i] : T{0};
  }
  NodePtr<T> xn = x.node();
  return make_result<T>(x.shape(), std::move(out), {xn}, "relu",
                        [xn, mask = std::move(mask)](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const bool on = mask.empty() ? xn->data[i] > T{0} : mask[i] != 0;
                            if (on) g[i] += self.grad[i];
                          }
                        });
}

template <typename T>
BasicTensor<T> sqrt(const BasicTensor<T>& x) {
  for (T v : x.data()) {
    if (v < T{0}) throw std::domain_error("sqrt: negative input");
  }
  return unary<T>(
      "sqrt", x, [](T v) { return std::sqrt(v); }, [](T, T y) { return T{0.5} / y; });
}

template <typename T>
BasicTensor<T> square(const BasicTensor<T>& x) {
  return unary<T>(
      "square", x, [](T v) { return v * v; }, [](T v, T) { return T{2} * v; });
}

template <typename T>
BasicTensor<T> abs(const BasicTensor<T>& x) {
  const auto in = x.data();
  std::vector<std::uint32_t> sign;
  const auto mode = PiecewiseReplay::mode();
  if (mode == PiecewiseReplay::Mode::replay) {
    sign = PiecewiseReplay::next(in.size());
  } else if (mode == PiecewiseReplay::Mode::record) {
    sign.resize(in.size());
    // 0: zero, 1: positive, 2: negative
    for (std::size_t i = 0; i < in.size(); ++i) sign[i] = in[i] > T{0} ? 1u : (in[i] < T{0} ? 2u : 0u);
    PiecewiseReplay::record(sign);
  }
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (sign.empty()) {
      out[i] = std::abs(in[i]);
    } else {
      out[i] = sign[i] == 1 ? in[i] : (sign[i] == 2 ? -in[i] : T{0});
    }
  }
  NodePtr<T> xn = x.node();
  return make_result<T>(x.shape(), std::move(out), {xn}, "abs",
                        [xn, sign = std::move(sign)](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            T s;
                            if (sign.empty()) {
                              const T v = xn->data[i];
                              s = v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0});
                            } else {
                              s = sign[i] == 1 ? T{1} : (sign[i] == 2 ? T{-1} : T{0});
                            }
                            g[i] += self.grad[i] * s;
                          }
                        });
}

template <typename T>
BasicTensor<T> hypot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("hypot", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i]);
  NodePtr<T> an = a.node(), bn = b.node();
  return make_result<T>(a.shape(), std::move(out), {an, bn}, "hypot", [an, bn](Node<T>& self) {
    const std::size_t n = self.data.size();
    if (an->requires_grad) {
      auto& g = an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        if (self.data[i] > T{0}) g[i] += self.grad[i] * an->data[i] / self.data[i];
      }
    }
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        if (self.data[i] > T{0}) g[i] += self.grad[i] * bn->data[i] / self.data[i];
      }
    }
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  const auto in = x.data();
  // Accumulate in double for both precisions; order is fixed.
  double acc = 0.0;
  for (T v : in) acc += static_cast<double>(v);
  NodePtr<T> xn = x.node();
  return make_result<T>(Shape{}, {static_cast<T>(acc)}, {xn}, "sum", [xn](Node<T>& self) {
    auto& g = xn->ensure_grad();
    const T up = self.grad[0];
    for (auto& v : g) v += up;
  });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
  const auto in = x.data();
  double acc = 0.0;
  for (T v : in) acc += static_cast<double>(v);
  const double count = static_cast<double>(in.size());
  NodePtr<T> xn = x.node();
  return make_result<T>(Shape{}, {static_cast<T>(acc / count)}, {xn}, "mean",
                        [xn, count](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          const T up = static_cast<T>(self.grad[0] / count);
                          for (auto& v : g) v += up;
                        });
}

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = parts[0].shape();
  std::size_t channels = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      detail::throw_shape_mismatch("concat_channels", first, s);
    }
    channels += s.c;
  }
  const Shape out_shape{first.n, channels, first.h, first.w};
  const std::size_t plane = first.plane();
  std::vector<T> out(out_shape.numel());
  std::vector<NodePtr<T>> nodes;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto src = p.data();
    const std::size_t block = p.shape().c * plane;
    for (std::size_t n = 0; n < first.n; ++n) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(n * block), block,
                  out.begin() + static_cast<std::ptrdiff_t>(n * channels * plane + offset * plane));
    }
    offset += p.shape().c;
    nodes.push_back(p.node());
  }
  return make_result<T>(out_shape, std::move(out), nodes, "concat_channels",
                        [nodes, channels, plane, batch = first.n](Node<T>& self) {
                          std::size_t off = 0;
                          for (const auto& in : nodes) {
                            const std::size_t block = in->shape.c * plane;
                            if (in->requires_grad) {
                              auto& g = in->ensure_grad();
                              for (std::size_t n = 0; n < batch; ++n) {
                                const T* src = self.grad.data() + n * channels * plane + off * plane;
                                T* dst = g.data() + n * block;
                                for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                              }
                            }
                            off += in->shape.c;
                          }
                        });
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::array<BasicTensor<T>, 2> parts{a, b};
  return concat_channels<T>(std::span<const BasicTensor<T>>(parts));
}

template <typename T>
BasicTensor<T> expand_channels(const BasicTensor<T>& x, std::size_t channels) {
  const Shape s = x.shape();
  if (s.c != 1) throw ShapeError("expand_channels: expected one channel, got " + s.to_string());
  const Shape out_shape{s.n, channels, s.h, s.w};
  const std::size_t plane = s.plane();
  const auto in = x.data();
  std::vector<T> out(out_shape.numel());
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(n * plane), plane,
                  out.begin() + static_cast<std::ptrdiff_t>((n * channels + c) * plane));
    }
  }
  NodePtr<T> xn = x.node();
  return make_result<T>(out_shape, std::move(out), {xn}, "expand_channels",
                        [xn, channels, plane](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          const std::size_t batch = xn->shape.n;
                          for (std::size_t n = 0; n < batch; ++n) {
                            for (std::size_t c = 0; c < channels; ++c) {
                              const T* src = self.grad.data() + (n * channels + c) * plane;
                              for (std::size_t i = 0; i < plane; ++i) g[n * plane + i] += src[i];
                            }
                          }
                        });
}

template <typename T>
BasicTensor<T> expand_spatial(const BasicTensor<T>& x, std::size_t h, std::size_t w) {
  const Shape s = x.shape();
  if (s.h != 1 || s.w != 1) {
    throw ShapeError("expand_spatial: expected 1x1 planes, got " + s.to_string());
  }
  const Shape out_shape{s.n, s.c, h, w};
  const std::size_t plane = h * w;
  const auto in = x.data();
  std::vector<T> out(out_shape.numel());
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(i * plane), plane, in[i]);
  }
  NodePtr<T> xn = x.node();
  return make_result<T>(out_shape, std::move(out), {xn}, "expand_spatial",
                        [xn, plane](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T* src = self.grad.data() + i * plane;
                            T acc{0};
                            for (std::size_t k = 0; k < plane; ++k) acc += src[k];
                            g[i] += acc;
                          }
                        });
}

template <typename T>
BasicTensor<T> weighted_channel_sum(const BasicTensor<T>& x, std::span<const T> weights) {
  const Shape s = x.shape();
  if (weights.size() != s.c) {
    throw ShapeError("weighted_channel_sum: " + std::to_string(weights.size()) +
                     " weights for shape " + s.to_string());
  }
  const Shape out_shape{s.n, 1, s.h, s.w};
  const std::size_t plane = s.plane();
  const auto in = x.data();
  std::vector<T> out(out_shape.numel(), T{0});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* src = in.data() + (n * s.c + c) * plane;
      T* dst = out.data() + n * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += weights[c] * src[i];
    }
  }
  NodePtr<T> xn = x.node();
  std::vector<T> wv(weights.begin(), weights.end());
  return make_result<T>(out_shape, std::move(out), {xn}, "weighted_channel_sum",
                        [xn, wv = std::move(wv), plane](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          const Shape& is = xn->shape;
                          for (std::size_t n = 0; n < is.n; ++n) {
                            for (std::size_t c = 0; c < is.c; ++c) {
                              T* dst = g.data() + (n * is.c + c) * plane;
                              const T* src = self.grad.data() + n * plane;
                              for (std::size_t i = 0; i < plane; ++i) dst[i] += wv[c] * src[i];
                            }
                          }
                        });
}

template <typename T>
BasicTensor<T> central_difference(const BasicTensor<T>& x, Axis axis) {
  const Shape s = x.shape();
  const auto in = x.data();
  std::vector<T> out(in.size());
  const std::size_t planes = s.n * s.c;
  const std::size_t H = s.h, W = s.w;
  auto prev = [](std::size_t i) { return i == 0 ? std::size_t{0} : i - 1; };
  auto next = [](std::size_t i, std::size_t extent) { return i + 1 >= extent ? extent - 1 : i + 1; };
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * H * W;
    T* dst = out.data() + p * H * W;
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        if (axis == Axis::rows) {
          dst[i * W + j] = src[next(i, H) * W + j] - src[prev(i) * W + j];
        } else {
          dst[i * W + j] = src[i * W + next(j, W)] - src[i * W + prev(j)];
        }
      }
    }
  }
  NodePtr<T> xn = x.node();
  return make_result<T>(s, std::move(out), {xn}, "central_difference",
                        [xn, axis, planes, H, W, prev, next](Node<T>& self) {
                          auto& g = xn->ensure_grad();
                          for (std::size_t p = 0; p < planes; ++p) {
                            const T* up = self.grad.data() + p * H * W;
                            T* dst = g.data() + p * H * W;
                            for (std::size_t i = 0; i < H; ++i) {
                              for (std::size_t j = 0; j < W; ++j) {
                                const T v = up[i * W + j];
                                if (axis == Axis::rows) {
                                  dst[next(i, H) * W + j] += v;
                                  dst[prev(i) * W + j] -= v;
                                } else {
                                  dst[i * W + next(j, W)] += v;
                                  dst[i * W + prev(j)] -= v;
                                }
                              }
                            }
                          }
                        });
}

// ---------------------------------------------------------------------------
// PiecewiseReplay

namespace {
struct ReplayState {
  PiecewiseReplay::Mode mode = PiecewiseReplay::Mode::off;
  std::vector<std::vector<std::uint32_t>> decisions;
  std::size_t cursor = 0;
};
thread_local ReplayState replay_state;
}  // namespace

PiecewiseReplay::Session::Session() {
  if (replay_state.mode != Mode::off) throw std::logic_error("nested PiecewiseReplay session");
  replay_state = ReplayState{Mode::record, {}, 0};
}

PiecewiseReplay::Session::~Session() { replay_state = ReplayState{}; }

void PiecewiseReplay::Session::start_replay() {
  replay_state.mode = Mode::replay;
  replay_state.cursor = 0;
}

void PiecewiseReplay::Session::rewind() { replay_state.cursor = 0; }

PiecewiseReplay::Mode PiecewiseReplay::mode() noexcept { return replay_state.mode; }

void PiecewiseReplay::record(std::vector<std::uint32_t> decisions) {
  replay_state.decisions.push_back(std::move(decisions));
}

const std::vector<std::uint32_t>& PiecewiseReplay::next(std::size_t expected_size) {
  if (replay_state.cursor >= replay_state.decisions.size()) {
    throw std::logic_error("PiecewiseReplay: more piecewise ops than recorded");
  }
  const auto& d = replay_state.decisions[replay_state.cursor++];
  if (d.size() != expected_size) throw std::logic_error("PiecewiseReplay: decision size changed");
  return d;
}

#define SCANET_INSTANTIATE_OPS(T)                                                            \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> neg(const BasicTensor<T>&);                                         \
  template BasicTensor<T> add_scalar(const BasicTensor<T>&, T);                               \
  template BasicTensor<T> mul_scalar(const BasicTensor<T>&, T);                               \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                     \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                        \
  template BasicTensor<T> sqrt(const BasicTensor<T>&);                                        \
  template BasicTensor<T> square(const BasicTensor<T>&);                                      \
  template BasicTensor<T> abs(const BasicTensor<T>&);                                         \
  template BasicTensor<T> hypot(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                         \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                        \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> concat_channels(std::span<const BasicTensor<T>>);                   \
  template BasicTensor<T> expand_channels(const BasicTensor<T>&, std::size_t);                \
  template BasicTensor<T> expand_spatial(const BasicTensor<T>&, std::size_t, std::size_t);    \
  template BasicTensor<T> weighted_channel_sum(const BasicTensor<T>&, std::span<const T>);    \
  template BasicTensor<T> central_difference(const BasicTensor<T>&, Axis);

SCANET_INSTANTIATE_OPS(float)
SCANET_INSTANTIATE_OPS(double)

}  // namespace scanet
