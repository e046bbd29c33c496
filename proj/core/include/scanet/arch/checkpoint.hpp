#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "scanet/arch/config.hpp"
#include "scanet/arch/network.hpp"
#include "scanet/tensor/tensor.hpp"

namespace scanet::arch {

using NamedTensors = std::map<std::string, Tensor>;

/// Adam moments keyed like the parameters they belong to.
struct OptimizerSnapshot {
  std::uint64_t step = 0;
  NamedTensors first_moment;
  NamedTensors second_moment;
};

/// On-disk layout (all integers little-endian):
///   "SCCK" | u32 version
///   u64 count | count x (u64 name_len | name | SCTN tensor)        parameters, sorted by name
///   u8 has_optimizer | [u64 step | u64 count | count x (u64 name_len | name | m | v)]
///   u64 epoch | u64 step | u64 seed
///   u64 text_len | NetworkConfig text
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  NetworkConfig config;
  NamedTensors parameters;
  std::optional<OptimizerSnapshot> optimizer;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ck);
[[nodiscard]] Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Snapshot of a float model's parameters.
[[nodiscard]] NamedTensors export_parameters(const ScaNet<float>& model);
/// Copies values into the model's existing parameter tensors. Throws FormatError when names or
/// shapes disagree.
void import_parameters(ScaNet<float>& model, const NamedTensors& values);

/// Builds a model from the checkpoint's config and seed, then loads its parameters.
[[nodiscard]] ScaNet<float> model_from_checkpoint(const Checkpoint& ck);

}  // namespace scanet::arch
