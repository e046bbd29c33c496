#include "scanet/data/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <vector>

namespace scanet::data {

namespace {

struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

std::uint8_t quantize(float v) noexcept {
  const float c = std::min(std::max(v, 0.0f), 1.0f);
  return static_cast<std::uint8_t>(std::floor(c * 255.0f + 0.5f));
}

Tensor load_image(const std::filesystem::path& path) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw ImageError("cannot read PNG " + path.string() + ": " + png.image.message);
  }
  const auto fmt = png.image.format;
  if (!(fmt & PNG_FORMAT_FLAG_COLOR) || (fmt & PNG_FORMAT_FLAG_ALPHA) || (fmt & PNG_FORMAT_FLAG_LINEAR)) {
    throw ImageError("not an 8-bit RGB PNG: " + path.string());
  }
  png.image.format = PNG_FORMAT_RGB;
  const std::size_t h = png.image.height;
  const std::size_t w = png.image.width;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, bytes.data(), 0, nullptr)) {
    throw ImageError("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  std::vector<float> data(3 * h * w);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < h * w; ++i) {
      data[c * h * w + i] = static_cast<float>(bytes[i * 3 + c]) / 255.0f;
    }
  }
  return Tensor::from_data(Shape{1, 3, h, w}, std::move(data));
}

void save_image(const Tensor& image, const std::filesystem::path& path) {
  const Shape s = image.shape();
  if (s.n != 1 || (s.c != 3 && s.c != 1)) {
    throw ImageError("save_image: expected [1,3,H,W] or [1,1,H,W], got " + s.to_string());
  }
  const std::size_t plane = s.plane();
  std::vector<std::uint8_t> bytes(3 * plane);
  const auto src = image.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      bytes[i * 3 + c] = quantize(src[(s.c == 3 ? c : 0) * plane + i]);
    }
  }
  PngImage png;
  png.image.width = static_cast<png_uint_32>(s.w);
  png.image.height = static_cast<png_uint_32>(s.h);
  png.image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw ImageError("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

}  // namespace scanet::data
