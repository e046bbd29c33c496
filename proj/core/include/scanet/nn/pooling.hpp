#pragma once

#include "scanet/tensor/tensor.hpp"

namespace scanet::nn {

/// [N,C,H,W] -> [N,C,1,1] plane means.
template <typename T> BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

/// [N,C,H,W] -> [N,1,H,W] mean over channels.
template <typename T> BasicTensor<T> channel_avg(const BasicTensor<T>& x);

/// [N,C,H,W] -> [N,1,H,W] max over channels. Backward routes each pixel's gradient to
/// the lowest channel index attaining the max.
template <typename T> BasicTensor<T> channel_max(const BasicTensor<T>& x);

/// Nearest-neighbour enlargement by an integer factor; backward sums each factor x factor block.
template <typename T>
BasicTensor<T> upsample_nearest(const BasicTensor<T>& x, std::size_t factor);

}  // namespace scanet::nn
