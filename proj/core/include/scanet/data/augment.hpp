#pragma once

#include <cstddef>
#include <string>

#include "scanet/tensor/random.hpp"
#include "scanet/tensor/tensor.hpp"

namespace scanet::data {

struct ImagePair {
  Tensor noisy;
  Tensor clean;
  std::string id;

  void validate() const;
};

struct Augmentation {
  bool hflip = false;
  bool vflip = false;
  int rot90 = 0;  // counter-clockwise quarter turns, 0..3

  [[nodiscard]] bool identity() const noexcept { return !hflip && !vflip && rot90 == 0; }
};

[[nodiscard]] Tensor hflip(const Tensor& x);
[[nodiscard]] Tensor vflip(const Tensor& x);
[[nodiscard]] Tensor rot90(const Tensor& x, int k);

/// Three independent draws: hflip coin, vflip coin, k uniform in {0,1,2,3}.
[[nodiscard]] Augmentation draw_augmentation(random::Stream& rng);
/// Flips first (horizontal, then vertical), then rotation.
[[nodiscard]] Tensor apply_augmentation(const Tensor& x, const Augmentation& aug);

/// Same size x size window from both images. Throws if the image is smaller than the crop.
[[nodiscard]] ImagePair random_crop_pair(const ImagePair& pair, std::size_t size, random::Stream& rng);
[[nodiscard]] ImagePair augment_pair(const ImagePair& pair, random::Stream& rng);

/// Spatial window [y, y+h) x [x, x+w) of every plane.
[[nodiscard]] Tensor crop(const Tensor& x, std::size_t y, std::size_t x0, std::size_t h, std::size_t w);

}  // namespace scanet::data
