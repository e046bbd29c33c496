#pragma once

#include <array>
#include <span>

#include "scanet/tensor/tensor.hpp"

// Differentiable primitives. Elementwise binary ops require identical shapes; the only
// implicit broadcast is tensor-scalar. Channel/spatial broadcasting goes through the
// explicit expand_* ops.

namespace scanet {

template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> neg(const BasicTensor<T>& x);

template <typename T> BasicTensor<T> add_scalar(const BasicTensor<T>& x, T value);
template <typename T> BasicTensor<T> mul_scalar(const BasicTensor<T>& x, T value);

template <typename T> BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> relu(const BasicTensor<T>& x);
/// Requires x >= 0. The derivative at exactly zero is infinite, as in the math.
template <typename T> BasicTensor<T> sqrt(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> square(const BasicTensor<T>& x);
/// Subgradient 0 at x == 0.
template <typename T> BasicTensor<T> abs(const BasicTensor<T>& x);
/// sqrt(a^2 + b^2) with the subgradient 0 where both are zero.
template <typename T> BasicTensor<T> hypot(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Reductions to a [1,1,1,1] scalar.
template <typename T> BasicTensor<T> sum(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> mean(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>> parts);

/// [N,1,H,W] -> [N,channels,H,W]; backward sums over the copies.
template <typename T> BasicTensor<T> expand_channels(const BasicTensor<T>& x, std::size_t channels);
/// [N,C,1,1] -> [N,C,h,w]; backward sums over the plane.
template <typename T>
BasicTensor<T> expand_spatial(const BasicTensor<T>& x, std::size_t h, std::size_t w);

/// Per-pixel sum_c weights[c] * x[:, c]; output [N,1,H,W].
template <typename T>
BasicTensor<T> weighted_channel_sum(const BasicTensor<T>& x, std::span<const T> weights);

enum class Axis { rows, cols };
/// d[i] = x[i+1] - x[i-1] along the axis, indices clamped to the border (replicate).
template <typename T> BasicTensor<T> central_difference(const BasicTensor<T>& x, Axis axis);

/// Scalar-valued helpers built from the primitives.
template <typename T>
BasicTensor<T> weighted_sum(const BasicTensor<T>& x, const BasicTensor<T>& weights) {
  return sum(mul(x, weights));
}

/// Piecewise-linear ops (relu, abs, channel max) can record the branch they took on one
/// forward pass and replay it on later passes. Gradient audits use this so that a finite
/// difference probes the same linear piece that backward differentiates.
class PiecewiseReplay {
 public:
  enum class Mode { off, record, replay };

  /// Starts a recording session on the current thread; ends it on destruction.
  class Session {
   public:
    Session();
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;
    /// Switches from recording to replaying from the first recorded decision.
    void start_replay();
    /// Rewinds the replay cursor before each re-evaluation.
    void rewind();
  };

  [[nodiscard]] static Mode mode() noexcept;
  static void record(std::vector<std::uint32_t> decisions);
  /// Next recorded decision vector; its length must equal `expected_size`.
  static const std::vector<std::uint32_t>& next(std::size_t expected_size);
};

}  // namespace scanet
