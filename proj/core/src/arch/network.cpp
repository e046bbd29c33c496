#include "scanet/arch/network.hpp"

#include <algorithm>

#include "scanet/arch/gradient_map.hpp"
#include "scanet/nn/pooling.hpp"
#include "scanet/tensor/ops.hpp"

namespace scanet::arch {

using nn::conv2d;
using nn::conv_geometry;

namespace {

template <typename T>
std::vector<cam::CamBlock<T>> make_stage(nn::ParamFactory<T>& factory, const std::string& prefix,
                                         std::size_t count, const cam::CamConfig& cfg) {
  std::vector<cam::CamBlock<T>> stage;
  stage.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    stage.emplace_back(factory, prefix + ".cam" + std::to_string(k), cfg);
  }
  return stage;
}

template <typename T>
BasicTensor<T> run_stage(const std::vector<cam::CamBlock<T>>& stage, BasicTensor<T> x) {
  for (const auto& block : stage) x = block(x);
  return x;
}

template <typename T>
BasicTensor<T> enlarge(const BasicTensor<T>& x, std::size_t factor) {
  return factor == 1 ? x : nn::upsample_nearest(x, factor);
}

}  // namespace

// ---------------------------------------------------------------------------
// PixelBranch

template <typename T>
PixelBranch<T>::PixelBranch(nn::ParamFactory<T>& factory, const NetworkConfig& cfg) : cfg_(cfg) {
  const std::size_t S = cfg.num_scales;
  const std::size_t c0 = cfg.base_channels;
  head_ = factory.conv("pixel.head", conv_geometry(3, c0, 3));
  for (std::size_t i = 0; i + 1 < S; ++i) {
    const std::size_t c = cfg.channels_at(i);
    const std::string idx = std::to_string(i);
    encoder_.push_back(make_stage(factory, "pixel.enc" + idx, cfg.cams_per_stage, cfg.cam.with_channels(c)));
    down_.push_back(factory.conv("pixel.down" + idx, conv_geometry(c, 2 * c, 3, 2)));
    up_.push_back(factory.conv("pixel.up" + idx, conv_geometry(2 * c, c, 3)));
    merge_.push_back(factory.conv("pixel.merge" + idx, conv_geometry(2 * c, c, 1)));
    decoder_.push_back(make_stage(factory, "pixel.dec" + idx, cfg.cams_per_stage, cfg.cam.with_channels(c)));
  }
  bottleneck_ = make_stage(factory, "pixel.mid", cfg.cams_per_stage, cfg.cam.with_channels(cfg.channels_at(S - 1)));
  for (std::size_t i = 0; i < S; ++i) {
    taps_.push_back(factory.conv("pixel.tap" + std::to_string(i), conv_geometry(cfg.channels_at(i), c0, 1)));
  }
  tail_ = factory.conv("pixel.tail", conv_geometry(c0, 3, 3));
}

template <typename T>
PixelFeatures<T> PixelBranch<T>::features(const BasicTensor<T>& noisy, bool with_skips) const {
  const std::size_t S = cfg_.num_scales;
  PixelFeatures<T> out;
  std::vector<BasicTensor<T>> encoded;
  BasicTensor<T> x = conv2d(noisy, head_);
  for (std::size_t i = 0; i + 1 < S; ++i) {
    x = run_stage(encoder_[i], x);
    encoded.push_back(x);
    x = nn::downsample_stride2(x, down_[i]);
  }
  x = run_stage(bottleneck_, x);
  if (with_skips) out.skip_features.push_back(enlarge(conv2d(x, taps_[S - 1]), std::size_t{1} << (S - 1)));
  for (std::size_t i = S - 1; i-- > 0;) {
    x = nn::upsample2x(x, up_[i]);
    x = conv2d(concat_channels(x, encoded[i]), merge_[i]);
    x = run_stage(decoder_[i], x);
    if (with_skips) out.skip_features.push_back(enlarge(conv2d(x, taps_[i]), std::size_t{1} << i));
  }
  out.decoder = x;
  return out;
}

template <typename T>
BasicTensor<T> PixelBranch<T>::tail_residual(const BasicTensor<T>& decoder) const {
  return conv2d(decoder, tail_);
}

template <typename T>
PixelBranchOutput<T> PixelBranch<T>::forward(const BasicTensor<T>& noisy) const {
  const std::size_t m = cfg_.size_multiple();
  if (noisy.shape().h % m != 0 || noisy.shape().w % m != 0) {
    throw ShapeError("pixel_branch: spatial dims of " + noisy.shape().to_string() +
                     " must be multiples of " + std::to_string(m));
  }
  PixelFeatures<T> f = features(noisy, true);
  return PixelBranchOutput<T>{tail_residual(f.decoder), std::move(f.skip_features)};
}

// ---------------------------------------------------------------------------
// CascadeBody

template <typename T>
CascadeBody<T>::CascadeBody(nn::ParamFactory<T>& factory, const NetworkConfig& cfg) {
  const std::size_t c0 = cfg.base_channels;
  head_ = factory.conv("cascade.head", conv_geometry(3, c0, 3));
  for (std::size_t b = 0; b < cfg.cascade_depth; ++b) {
    blocks_.emplace_back(factory, "cascade.block" + std::to_string(b), cfg.cam.with_channels(c0));
  }
  tail_ = factory.conv("cascade.tail", conv_geometry(c0, 3, 3));
}

template <typename T>
PixelFeatures<T> CascadeBody<T>::features(const BasicTensor<T>& noisy, bool with_skips) const {
  PixelFeatures<T> out;
  BasicTensor<T> x = conv2d(noisy, head_);
  for (const auto& block : blocks_) {
    x = block(x);
    if (with_skips) out.skip_features.push_back(x);
  }
  if (with_skips && blocks_.empty()) out.skip_features.push_back(x);
  out.decoder = x;
  return out;
}

template <typename T>
BasicTensor<T> CascadeBody<T>::tail_residual(const BasicTensor<T>& decoder) const {
  return conv2d(decoder, tail_);
}

// ---------------------------------------------------------------------------
// GradientBranch

template <typename T>
GradientBranch<T>::GradientBranch(nn::ParamFactory<T>& factory, const NetworkConfig& cfg)
    : channels_(cfg.base_channels) {
  const std::size_t c0 = cfg.base_channels;
  head = factory.conv("grad.head", conv_geometry(1, c0, 3));
  for (std::size_t t = 0; t < cfg.grad_branch_blocks; ++t) {
    const std::string idx = std::to_string(t);
    fuse.push_back(factory.conv("grad.fuse" + idx, conv_geometry(2 * c0, c0, 1)));
    blocks.emplace_back(factory, "grad.cam" + idx, cfg.cam.with_channels(c0));
  }
  out = factory.conv("grad.out", conv_geometry(c0, 1, 1));
}

template <typename T>
GradientBranchOutput<T> GradientBranch<T>::forward(
    const BasicTensor<T>& noisy_grad, const std::vector<BasicTensor<T>>& skip_features) const {
  if (noisy_grad.shape().c != 1) {
    throw ShapeError("gradient_branch: gradient map must have one channel, got " +
                     noisy_grad.shape().to_string());
  }
  if (skip_features.empty() && !blocks.empty()) {
    throw ShapeError("gradient_branch: no skip features supplied");
  }
  const Shape expected{noisy_grad.shape().n, channels_, noisy_grad.shape().h, noisy_grad.shape().w};
  for (const auto& f : skip_features) {
    if (f.shape() != expected) detail::throw_shape_mismatch("gradient_branch skip feature", f.shape(), expected);
  }
  BasicTensor<T> x = conv2d(noisy_grad, head);
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    x = conv2d(concat_channels(x, skip_features[t % skip_features.size()]), fuse[t]);
    x = blocks[t](x);
  }
  return GradientBranchOutput<T>{conv2d(x, out), x};
}

// ---------------------------------------------------------------------------
// ScaNet

template <typename T>
ScaNet<T>::ScaNet(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  nn::ParamFactory<T> factory(params_, seed);
  if (cfg_.structure == Structure::unet) {
    pixel_ = std::make_unique<PixelBranch<T>>(factory, cfg_);
  } else {
    cascade_ = std::make_unique<CascadeBody<T>>(factory, cfg_);
  }
  grad_ = std::make_unique<GradientBranch<T>>(factory, cfg_);
  grad_fusion_ = factory.conv("fusion.grad", conv_geometry(2 * cfg_.base_channels, cfg_.base_channels, 1));
}

template <typename T>
void ScaNet<T>::check_input(const Shape& s) const {
  const std::size_t m = cfg_.size_multiple();
  if (s.c != 3) throw ShapeError("scanet: expected a 3-channel image, got " + s.to_string());
  if (s.h % m != 0 || s.w % m != 0) {
    throw ShapeError("scanet: spatial dims of " + s.to_string() + " must be multiples of " +
                     std::to_string(m));
  }
}

template <typename T>
ForwardOutput<T> ScaNet<T>::forward(const BasicTensor<T>& noisy, Phase phase) const {
  check_input(noisy.shape());
  const bool branch = cfg_.enable_grad_branch;
  PixelFeatures<T> f = pixel_ ? pixel_->features(noisy, branch) : cascade_->features(noisy, branch);
  ForwardOutput<T> out;
  BasicTensor<T> decoder = f.decoder;
  if (branch) {
    GradientBranchOutput<T> g = grad_->forward(extract_gradient_map(noisy), f.skip_features);
    decoder = conv2d(concat_channels(decoder, g.grad_features), grad_fusion_);
    out.pred_grad = g.pred_grad;
  }
  const BasicTensor<T> residual = pixel_ ? pixel_->tail_residual(decoder) : cascade_->tail_residual(decoder);
  out.denoised = add(noisy, residual);
  if (phase == Phase::inference) out.denoised = clamp_values(out.denoised, T{0}, T{1});
  return out;
}

template <typename T>
BasicTensor<T> clamp_values(const BasicTensor<T>& in, T lo, T hi) {
  std::vector<T> v(in.data().begin(), in.data().end());
  for (auto& x : v) x = std::clamp(x, lo, hi);
  return BasicTensor<T>::from_data(in.shape(), std::move(v));
}

template class PixelBranch<float>;
template class PixelBranch<double>;
template class CascadeBody<float>;
template class CascadeBody<double>;
template class GradientBranch<float>;
template class GradientBranch<double>;
template class ScaNet<float>;
template class ScaNet<double>;
template BasicTensor<float> clamp_values(const BasicTensor<float>&, float, float);
template BasicTensor<double> clamp_values(const BasicTensor<double>&, double, double);

}  // namespace scanet::arch
