#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "scanet/tensor/tensor.hpp"

namespace scanet {

// Binary tensor record:
//   "SCTN" | u32 version | u64 n | u64 c | u64 h | u64 w | n*c*h*w little-endian float32
inline constexpr std::uint32_t kTensorFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_tensor(std::ostream& out, const Tensor& t);
[[nodiscard]] Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
[[nodiscard]] Tensor load_tensor(const std::filesystem::path& path);

namespace io {
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
[[nodiscard]] std::uint32_t read_u32(std::istream& in);
[[nodiscard]] std::uint64_t read_u64(std::istream& in);
}  // namespace io

}  // namespace scanet
