#include "scanet/cam/cam.hpp"

#include "scanet/nn/pooling.hpp"
#include "scanet/tensor/ops.hpp"

namespace scanet::cam {

using nn::conv2d;
using nn::conv_geometry;

namespace {
const CamConfig& checked(const CamConfig& cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

void CamConfig::validate() const {
  if (channels == 0 || sparse_ratio == 0 || ca_reduction == 0) {
    throw std::invalid_argument("CamConfig: channels, sparse_ratio and ca_reduction must be >= 1");
  }
  if (channels % ca_reduction != 0) {
    throw std::invalid_argument("CamConfig: channels " + std::to_string(channels) +
                                " not divisible by ca_reduction " + std::to_string(ca_reduction));
  }
  if (enable_sparse && channels % (sparse_ratio + 1) != 0) {
    throw std::invalid_argument("CamConfig: channels " + std::to_string(channels) +
                                " not divisible by sparse_ratio + 1 = " +
                                std::to_string(sparse_ratio + 1));
  }
  for (std::size_t k : {sa_kernel, cheap_kernel}) {
    if (k % 2 == 0) throw std::invalid_argument("CamConfig: kernels must be odd");
  }
}

template <typename T>
SpatialAttention<T>::SpatialAttention(nn::ParamFactory<T>& factory, const std::string& prefix,
                                      const CamConfig& cfg)
    : conv(factory.conv(prefix + ".sa", conv_geometry(2, 1, cfg.sa_kernel))),
      channels_(cfg.channels) {}

template <typename T>
BasicTensor<T> SpatialAttention<T>::attention_map(const BasicTensor<T>& u) const {
  if (u.shape().c != channels_) {
    throw ShapeError("spatial_attention: input " + u.shape().to_string() + " expected " +
                     std::to_string(channels_) + " channels");
  }
  return sigmoid(conv2d(concat_channels(nn::channel_avg(u), nn::channel_max(u)), conv));
}

template <typename T>
BasicTensor<T> SpatialAttention<T>::operator()(const BasicTensor<T>& u) const {
  return mul(u, expand_channels(attention_map(u), channels_));
}

template <typename T>
ChannelAttention<T>::ChannelAttention(nn::ParamFactory<T>& factory, const std::string& prefix,
                                      const CamConfig& cfg)
    : squeeze(factory.conv(prefix + ".ca_squeeze",
                           conv_geometry(cfg.channels, cfg.channels / cfg.ca_reduction, 1))),
      excite(factory.conv(prefix + ".ca_excite",
                          conv_geometry(cfg.channels / cfg.ca_reduction, cfg.channels, 1))),
      channels_(cfg.channels) {}

template <typename T>
BasicTensor<T> ChannelAttention<T>::gates(const BasicTensor<T>& u) const {
  if (u.shape().c != channels_) {
    throw ShapeError("channel_attention: input " + u.shape().to_string() + " expected " +
                     std::to_string(channels_) + " channels");
  }
  return sigmoid(conv2d(relu(conv2d(nn::global_avg_pool(u), squeeze)), excite));
}

template <typename T>
BasicTensor<T> ChannelAttention<T>::operator()(const BasicTensor<T>& u) const {
  const Shape& s = u.shape();
  return mul(u, expand_spatial(gates(u), s.h, s.w));
}

template <typename T>
DenseModule<T>::DenseModule(nn::ParamFactory<T>& factory, const std::string& prefix,
                            const CamConfig& cfg)
    : conv1(factory.conv(prefix + ".conv1", conv_geometry(cfg.channels, cfg.channels, 3))),
      conv2(factory.conv(prefix + ".conv2", conv_geometry(cfg.channels, cfg.channels, 3))),
      spatial(factory, prefix, cfg),
      channel(factory, prefix, cfg),
      fuse(factory.conv(prefix + ".fuse", conv_geometry(2 * cfg.channels, cfg.channels, 1))),
      channels_(cfg.channels) {}

template <typename T>
BasicTensor<T> DenseModule<T>::features(const BasicTensor<T>& x) const {
  return relu(conv2d(relu(conv2d(x, conv1)), conv2));
}

template <typename T>
BasicTensor<T> DenseModule<T>::operator()(const BasicTensor<T>& x) const {
  if (x.shape().c != channels_) {
    throw ShapeError("dense_module: input " + x.shape().to_string() + " expected " +
                     std::to_string(channels_) + " channels");
  }
  const BasicTensor<T> u = features(x);
  const BasicTensor<T> sa = spatial(u);
  const BasicTensor<T> ca = channel(u);
  return add(x, conv2d(concat_channels(sa, ca), fuse));
}

template <typename T>
SparseModule<T>::SparseModule(nn::ParamFactory<T>& factory, const std::string& prefix,
                              std::size_t in_channels, std::size_t out_channels,
                              const CamConfig& cfg) {
  const std::size_t groups = cfg.sparse_ratio + 1;
  if (out_channels % groups != 0) {
    throw std::invalid_argument("sparse_module: target_out " + std::to_string(out_channels) +
                                " not divisible by sparse_ratio + 1 = " + std::to_string(groups));
  }
  const std::size_t intrinsic = out_channels / groups;
  primary = factory.conv(prefix + ".primary", conv_geometry(in_channels, intrinsic, 3));
  for (std::size_t j = 1; j <= cfg.sparse_ratio; ++j) {
    cheap.push_back(factory.conv(prefix + ".cheap" + std::to_string(j),
                                 conv_geometry(intrinsic, intrinsic, cfg.cheap_kernel, 1, intrinsic)));
  }
}

template <typename T>
BasicTensor<T> SparseModule<T>::operator()(const BasicTensor<T>& x) const {
  std::vector<BasicTensor<T>> parts;
  parts.reserve(cheap.size() + 1);
  parts.push_back(relu(conv2d(x, primary)));
  for (const auto& psi : cheap) parts.push_back(nn::depthwise_conv2d(parts.front(), psi));
  return concat_channels(std::span<const BasicTensor<T>>(parts));
}

template <typename T>
CamBlock<T>::CamBlock(nn::ParamFactory<T>& factory, const std::string& prefix,
                      const CamConfig& cfg)
    : dense(factory, prefix + ".dense", checked(cfg)), cfg_(cfg) {
  if (cfg.channels % (cfg.sparse_ratio + 1) == 0) {
    sparse.emplace(factory, prefix + ".sparse", cfg.channels, cfg.channels, cfg);
  }
}

template <typename T>
BasicTensor<T> CamBlock<T>::operator()(const BasicTensor<T>& x) const {
  BasicTensor<T> z = cfg_.enable_dense ? dense(x) : x;
  if (cfg_.enable_sparse) z = add(z, (*sparse)(z));
  return z;
}

template class SpatialAttention<float>;
template class SpatialAttention<double>;
template class ChannelAttention<float>;
template class ChannelAttention<double>;
template class DenseModule<float>;
template class DenseModule<double>;
template class SparseModule<float>;
template class SparseModule<double>;
template class CamBlock<float>;
template class CamBlock<double>;

}  // namespace scanet::cam
