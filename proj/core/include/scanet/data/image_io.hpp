#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "scanet/tensor/tensor.hpp"

namespace scanet::data {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads an 8-bit RGB PNG into [1,3,H,W] with byte v mapped to v/255.
[[nodiscard]] Tensor load_image(const std::filesystem::path& path);

/// Writes [1,3,H,W] (or [1,1,H,W], replicated to gray RGB) as an 8-bit RGB PNG. Values are
/// clamped to [0,1] and quantized with round-half-up.
void save_image(const Tensor& image, const std::filesystem::path& path);

[[nodiscard]] std::uint8_t quantize(float v) noexcept;

}  // namespace scanet::data
