#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scanet/arch/config.hpp"

namespace scanet::profile {

struct MachineInfo {
  std::string cpu;
  unsigned hardware_threads = 0;
  std::string compiler;
  std::string build;
};

[[nodiscard]] MachineInfo machine_info();

struct BenchmarkResult {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> samples_ms;
  double median_ms = 0.0;
  double mad_ms = 0.0;  // median absolute deviation
  std::uint64_t macs = 0;
  MachineInfo machine;

  [[nodiscard]] double gmacs_per_second() const noexcept {
    return median_ms > 0.0 ? static_cast<double>(macs) / (median_ms * 1e6) : 0.0;
  }
  void print(std::ostream& out) const;
};

/// Median wall-clock of inference-phase forward passes on one random image; `warmup` runs
/// are discarded. Throws std::invalid_argument if repeats < 3.
[[nodiscard]] BenchmarkResult benchmark_forward(const arch::NetworkConfig& cfg, std::size_t height,
                                                std::size_t width, std::size_t repeats,
                                                std::size_t warmup = 1, std::uint64_t seed = 0);

[[nodiscard]] double median(std::vector<double> values);
[[nodiscard]] double median_absolute_deviation(const std::vector<double>& values);

}  // namespace scanet::profile
