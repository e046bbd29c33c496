#include "scanet/arch/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include "scanet/tensor/serialize.hpp"

namespace scanet::arch {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'C', 'C', 'K'};
constexpr std::uint64_t kMaxNameLength = 4096;
constexpr std::uint64_t kMaxTextLength = 1 << 20;

void write_string(std::ostream& out, const std::string& s) {
  io::write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, std::uint64_t limit) {
  const std::uint64_t len = io::read_u64(in);
  if (len > limit) throw FormatError("checkpoint: string length " + std::to_string(len) + " too large");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("checkpoint: truncated string");
  return s;
}

std::uint64_t read_count(std::istream& in) {
  const std::uint64_t n = io::read_u64(in);
  if (n > (1u << 24)) throw FormatError("checkpoint: implausible entry count");
  return n;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  out.write(kMagic.data(), kMagic.size());
  io::write_u32(out, Checkpoint::kVersion);
  io::write_u64(out, ck.parameters.size());
  for (const auto& [name, t] : ck.parameters) {
    write_string(out, name);
    write_tensor(out, t);
  }
  out.put(ck.optimizer ? '\1' : '\0');
  if (ck.optimizer) {
    const auto& opt = *ck.optimizer;
    if (opt.first_moment.size() != opt.second_moment.size()) {
      throw FormatError("checkpoint: optimizer moment sets differ in size");
    }
    io::write_u64(out, opt.step);
    io::write_u64(out, opt.first_moment.size());
    for (const auto& [name, m] : opt.first_moment) {
      write_string(out, name);
      write_tensor(out, m);
      write_tensor(out, opt.second_moment.at(name));
    }
  }
  io::write_u64(out, ck.epoch);
  io::write_u64(out, ck.step);
  io::write_u64(out, ck.seed);
  write_string(out, to_text(ck.config));
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("checkpoint: bad magic (expected SCCK)");
  const std::uint32_t version = io::read_u32(in);
  if (version != Checkpoint::kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint64_t count = read_count(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(in, kMaxNameLength);
    ck.parameters.emplace(std::move(name), read_tensor(in));
  }
  const int has_opt = in.get();
  if (has_opt == std::char_traits<char>::eof() || (has_opt != 0 && has_opt != 1)) {
    throw FormatError("checkpoint: bad optimizer flag");
  }
  if (has_opt == 1) {
    OptimizerSnapshot opt;
    opt.step = io::read_u64(in);
    const std::uint64_t n = read_count(in);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string name = read_string(in, kMaxNameLength);
      Tensor m = read_tensor(in);
      Tensor v = read_tensor(in);
      opt.first_moment.emplace(name, std::move(m));
      opt.second_moment.emplace(std::move(name), std::move(v));
    }
    ck.optimizer = std::move(opt);
  }
  ck.epoch = io::read_u64(in);
  ck.step = io::read_u64(in);
  ck.seed = io::read_u64(in);
  ck.config = network_config_from_text(read_string(in, kMaxTextLength));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ck);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

NamedTensors export_parameters(const ScaNet<float>& model) {
  NamedTensors out;
  for (const auto& [name, t] : model.parameters()) out.emplace(name, t.clone());
  return out;
}

void import_parameters(ScaNet<float>& model, const NamedTensors& values) {
  auto& params = model.parameters();
  if (values.size() != params.size()) {
    throw FormatError("checkpoint: " + std::to_string(values.size()) + " tensors for a model with " +
                      std::to_string(params.size()) + " parameters");
  }
  for (auto& [name, t] : params) {
    const auto it = values.find(name);
    if (it == values.end()) throw FormatError("checkpoint: missing parameter " + name);
    if (it->second.shape() != t.shape()) {
      throw FormatError("checkpoint: parameter " + name + " has shape " +
                        it->second.shape().to_string() + ", model expects " + t.shape().to_string());
    }
    const auto src = it->second.data();
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  }
}

ScaNet<float> model_from_checkpoint(const Checkpoint& ck) {
  ScaNet<float> model(ck.config, ck.seed);
  import_parameters(model, ck.parameters);
  return model;
}

}  // namespace scanet::arch
