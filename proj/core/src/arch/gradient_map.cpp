#include "scanet/arch/gradient_map.hpp"

#include "scanet/nn/pooling.hpp"
#include "scanet/tensor/ops.hpp"

namespace scanet::arch {

template <typename T>
BasicTensor<T> extract_gradient_map(const BasicTensor<T>& image) {
  BasicTensor<T> luma;
  switch (image.shape().c) {
    case 1:
      luma = image;
      break;
    case 3: {
      const std::array<T, 3> w{static_cast<T>(kLumaWeights[0]), static_cast<T>(kLumaWeights[1]),
                               static_cast<T>(kLumaWeights[2])};
      luma = weighted_channel_sum(image, std::span<const T>(w));
      break;
    }
    default:
      luma = nn::channel_avg(image);
  }
  return hypot(central_difference(luma, Axis::rows), central_difference(luma, Axis::cols));
}

template BasicTensor<float> extract_gradient_map(const BasicTensor<float>&);
template BasicTensor<double> extract_gradient_map(const BasicTensor<double>&);

}  // namespace scanet::arch
