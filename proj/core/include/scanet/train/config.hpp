#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "scanet/arch/config.hpp"
#include "scanet/data/noise.hpp"
#include "scanet/loss/losses.hpp"
#include "scanet/train/adam.hpp"

namespace scanet::train {

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  std::size_t crop = 128;
  double lr0 = 1e-4;
  double decay_factor = 0.1;
  std::size_t decay_every = 25;  // epochs
  loss::LossWeights loss;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool augment = true;
  /// Stop after this many optimizer steps in total, even mid-epoch.
  std::optional<std::size_t> max_steps;
  /// When set, the stored noisy images are ignored and fresh noise is drawn from the clean
  /// crop at every step.
  std::optional<data::NoiseSpec> online_noise;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// lr0 * decay_factor^floor(epoch / decay_every).
[[nodiscard]] double lr_at(std::size_t epoch, const TrainConfig& cfg);

struct RunConfig {
  arch::NetworkConfig network;
  TrainConfig train;
};

/// "paper": 60 epochs, batch 16, 128 crops, lr 1e-4 decayed x0.1 every 25 epochs.
/// "desk": the same objective and optimizer at laptop scale (32 crops, batch 8).
[[nodiscard]] RunConfig preset(std::string_view name);

/// JSON object {"preset": name, "network": {...}, "train": {...}}; every section is optional
/// and overrides the preset key by key. Unknown keys are rejected.
[[nodiscard]] RunConfig run_config_from_text(std::string_view text);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);
[[nodiscard]] std::string to_text(const RunConfig& cfg);

}  // namespace scanet::train
