#include "scanet/tensor/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace scanet {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'C', 'T', 'N'};
// Guards against allocating absurd buffers from a corrupt header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

template <typename U>
void write_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U read_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("unexpected end of stream");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

namespace io {
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
}  // namespace io

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic.data(), kMagic.size());
  io::write_u32(out, kTensorFormatVersion);
  const Shape& s = t.shape();
  for (std::uint64_t d : {s.n, s.c, s.h, s.w}) io::write_u64(out, d);
  for (float v : t.data()) io::write_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw FormatError("failed writing tensor");
}

Tensor read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("bad tensor magic (expected SCTN)");
  const std::uint32_t version = io::read_u32(in);
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported tensor format version " + std::to_string(version));
  }
  std::array<std::uint64_t, 4> dims{};
  for (auto& d : dims) d = io::read_u64(in);
  std::uint64_t count = 1;
  for (auto d : dims) {
    if (d == 0 || d > kMaxElements || count > kMaxElements / d) {
      throw FormatError("invalid tensor dimensions");
    }
    count *= d;
  }
  std::vector<float> data(count);
  for (auto& v : data) v = std::bit_cast<float>(io::read_u32(in));
  return Tensor::from_data(Shape{dims[0], dims[1], dims[2], dims[3]}, std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace scanet
