#include "scanet/data/augment.hpp"

#include <vector>

namespace scanet::data {

void ImagePair::validate() const {
  if (!noisy.defined() || !clean.defined()) throw std::invalid_argument("image pair '" + id + "' is empty");
  if (noisy.shape() != clean.shape()) throw ShapeError("image pair '" + id + "': noisy " + noisy.shape().to_string() + " vs clean " + clean.shape().to_string());
}

namespace {

// out(n, c, y, x) = in(n, c, src(y, x)) for a spatial index map over the output grid.
template <typename Map>
Tensor remap(const Tensor& x, std::size_t oh, std::size_t ow, Map map) {
  const Shape s = x.shape();
  const auto src = x.data();
  std::vector<float> out(s.n * s.c * oh * ow);
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    const float* in = src.data() + p * s.plane();
    float* o = out.data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const auto [sy, sx] = map(y, xx);
        o[y * ow + xx] = in[sy * s.w + sx];
      }
    }
  }
  return Tensor::from_data(Shape{s.n, s.c, oh, ow}, std::move(out));
}

}  // namespace

Tensor hflip(const Tensor& x) {
  const Shape s = x.shape();
  return remap(x, s.h, s.w, [&](std::size_t y, std::size_t c) { return std::pair{y, s.w - 1 - c}; });
}

Tensor vflip(const Tensor& x) {
  const Shape s = x.shape();
  return remap(x, s.h, s.w, [&](std::size_t y, std::size_t c) { return std::pair{s.h - 1 - y, c}; });
}

Tensor rot90(const Tensor& x, int k) {
  const Shape s = x.shape();
  switch (((k % 4) + 4) % 4) {
    case 0:
      return x.detach().clone();
    case 1:  // out is W x H; out(y, c) = in(c, W-1-y)
      return remap(x, s.w, s.h, [&](std::size_t y, std::size_t c) { return std::pair{c, s.w - 1 - y}; });
    case 2:
      return remap(x, s.h, s.w,
                   [&](std::size_t y, std::size_t c) { return std::pair{s.h - 1 - y, s.w - 1 - c}; });
    default:  // out(y, c) = in(H-1-c, y)
      return remap(x, s.w, s.h, [&](std::size_t y, std::size_t c) { return std::pair{s.h - 1 - c, y}; });
  }
}

Augmentation draw_augmentation(random::Stream& rng) {
  Augmentation a;
  a.hflip = rng.coin();
  a.vflip = rng.coin();
  a.rot90 = static_cast<int>(rng.below(4));
  return a;
}

Tensor apply_augmentation(const Tensor& x, const Augmentation& aug) {
  Tensor y = x;
  if (aug.hflip) y = hflip(y);
  if (aug.vflip) y = vflip(y);
  if (aug.rot90 != 0) y = rot90(y, aug.rot90);
  return aug.identity() ? x.detach().clone() : y;
}

Tensor crop(const Tensor& x, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  const Shape s = x.shape();
  if (y0 + h > s.h || x0 + w > s.w) {
    throw ShapeError("crop window exceeds image " + s.to_string());
  }
  return remap(x, h, w, [&](std::size_t y, std::size_t c) { return std::pair{y0 + y, x0 + c}; });
}

ImagePair random_crop_pair(const ImagePair& pair, std::size_t size, random::Stream& rng) {
  pair.validate();
  const Shape s = pair.clean.shape();
  if (size == 0 || s.h < size || s.w < size) {
    throw ShapeError("image '" + pair.id + "' " + s.to_string() + " is smaller than crop " +
                     std::to_string(size));
  }
  const std::size_t y = rng.below(s.h - size + 1);
  const std::size_t x = rng.below(s.w - size + 1);
  return {crop(pair.noisy, y, x, size, size), crop(pair.clean, y, x, size, size), pair.id};
}

ImagePair augment_pair(const ImagePair& pair, random::Stream& rng) {
  pair.validate();
  const Augmentation a = draw_augmentation(rng);
  return {apply_augmentation(pair.noisy, a), apply_augmentation(pair.clean, a), pair.id};
}

}  // namespace scanet::data
