#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "scanet/arch/config.hpp"
#include "scanet/cam/cam.hpp"
#include "scanet/nn/parameters.hpp"

namespace scanet::arch {

enum class Phase { train, inference };

/// Decoder output of the pixel branch plus the features it hands to the gradient branch.
template <typename T>
struct PixelFeatures {
  BasicTensor<T> decoder;                      // [N, base_channels, H, W]
  std::vector<BasicTensor<T>> skip_features;   // full resolution, base_channels each
};

template <typename T>
struct PixelBranchOutput {
  BasicTensor<T> residual;                     // [N, 3, H, W]
  std::vector<BasicTensor<T>> skip_features;
};

template <typename T>
struct GradientBranchOutput {
  BasicTensor<T> pred_grad;                    // [N, 1, H, W]
  BasicTensor<T> grad_features;                // [N, base_channels, H, W]
};

template <typename T>
struct ForwardOutput {
  BasicTensor<T> denoised;
  /// Undefined when the gradient branch is disabled.
  BasicTensor<T> pred_grad;
};

/// UNet pixel branch. Encoder: per scale, CAM blocks then a stride-2 downsample doubling the
/// channels; bottleneck CAMs; decoder: upsample, skip concat, 1x1 fuse, CAMs. One feature per
/// scale (bottleneck first, finest last) is 1x1-projected to base_channels and enlarged to
/// full resolution for the gradient branch.
template <typename T>
class PixelBranch {
 public:
  PixelBranch(nn::ParamFactory<T>& factory, const NetworkConfig& cfg);

  [[nodiscard]] PixelFeatures<T> features(const BasicTensor<T>& noisy, bool with_skips) const;
  [[nodiscard]] BasicTensor<T> tail_residual(const BasicTensor<T>& decoder) const;
  /// Residual without gradient-branch fusion, together with the skip features.
  [[nodiscard]] PixelBranchOutput<T> forward(const BasicTensor<T>& noisy) const;

 private:
  NetworkConfig cfg_;
  nn::Conv2dParams<T> head_;
  std::vector<std::vector<cam::CamBlock<T>>> encoder_;   // per scale 0..S-2
  std::vector<nn::Conv2dParams<T>> down_;
  std::vector<cam::CamBlock<T>> bottleneck_;
  std::vector<nn::Conv2dParams<T>> up_;                  // indexed by target scale
  std::vector<nn::Conv2dParams<T>> merge_;
  std::vector<std::vector<cam::CamBlock<T>>> decoder_;
  std::vector<nn::Conv2dParams<T>> taps_;                // indexed by scale
  nn::Conv2dParams<T> tail_;
};

/// Single-resolution chain of CAM blocks between a 3x3 head and tail. Block outputs are the
/// skip features (the head output when the chain is empty).
template <typename T>
class CascadeBody {
 public:
  CascadeBody(nn::ParamFactory<T>& factory, const NetworkConfig& cfg);

  [[nodiscard]] PixelFeatures<T> features(const BasicTensor<T>& noisy, bool with_skips) const;
  [[nodiscard]] BasicTensor<T> tail_residual(const BasicTensor<T>& decoder) const;

 private:
  nn::Conv2dParams<T> head_;
  std::vector<cam::CamBlock<T>> blocks_;
  nn::Conv2dParams<T> tail_;
};

/// Gradient branch: lifts the noisy gradient map to base_channels, then before each CAM block
/// concatenates skip feature t (cycled) and 1x1-fuses back; a final 1x1 conv predicts the
/// clean gradient map.
template <typename T>
class GradientBranch {
 public:
  GradientBranch(nn::ParamFactory<T>& factory, const NetworkConfig& cfg);

  [[nodiscard]] GradientBranchOutput<T> forward(
      const BasicTensor<T>& noisy_grad, const std::vector<BasicTensor<T>>& skip_features) const;

  nn::Conv2dParams<T> head;
  std::vector<nn::Conv2dParams<T>> fuse;
  std::vector<cam::CamBlock<T>> blocks;
  nn::Conv2dParams<T> out;

 private:
  std::size_t channels_;
};

/// The full dual-branch denoiser. All parameters, including those of components switched off
/// in the config, are allocated from `seed`; toggles only change the forward graph.
template <typename T>
class ScaNet {
 public:
  ScaNet(const NetworkConfig& cfg, std::uint64_t seed);

  /// denoised = noisy + residual, clamped to [0,1] only in the inference phase.
  [[nodiscard]] ForwardOutput<T> forward(const BasicTensor<T>& noisy,
                                         Phase phase = Phase::train) const;

  [[nodiscard]] const NetworkConfig& config() const { return cfg_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] nn::ParameterSet<T>& parameters() { return params_; }
  [[nodiscard]] const nn::ParameterSet<T>& parameters() const { return params_; }

  [[nodiscard]] const PixelBranch<T>* pixel_branch() const { return pixel_.get(); }
  [[nodiscard]] const GradientBranch<T>& gradient_branch() const { return *grad_; }

  /// Throws ShapeError when H or W is not a multiple of config().size_multiple().
  void check_input(const Shape& s) const;

 private:
  NetworkConfig cfg_;
  std::uint64_t seed_;
  nn::ParameterSet<T> params_;
  std::unique_ptr<PixelBranch<T>> pixel_;
  std::unique_ptr<CascadeBody<T>> cascade_;
  std::unique_ptr<GradientBranch<T>> grad_;
  nn::Conv2dParams<T> grad_fusion_;
};

/// Copies of `in` with every value clamped to [lo, hi]; no gradient history.
template <typename T>
BasicTensor<T> clamp_values(const BasicTensor<T>& in, T lo, T hi);

}  // namespace scanet::arch
