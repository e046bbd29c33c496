#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "scanet/arch/config.hpp"
#include "scanet/nn/cost_recorder.hpp"

namespace scanet::profile {

/// Per-layer cost of one forward pass on a single image.
///
/// Conventions: only convolutions cost MACs (H_out * W_out * C_out * C_in/groups * k^2);
/// bias, pooling, activations, attention products and other elementwise work count 0.
/// FLOPs = 2 * MACs. Parameters are those of the layers active under the config.
struct CostReport {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<nn::LayerCost> rows;  // execution order
  std::uint64_t total_macs = 0;
  std::uint64_t total_params = 0;

  [[nodiscard]] std::uint64_t flops() const noexcept { return 2 * total_macs; }
  /// Human-readable table with a header stating the conventions.
  void print(std::ostream& out) const;
  /// "name,out_c,out_h,out_w,params,macs" rows followed by a "total" row.
  void write_csv(std::ostream& out) const;
};

/// Walks the architecture analytically; no tensors are allocated. Layer names match those
/// reported by nn::CostRecorder during an executed forward pass.
[[nodiscard]] CostReport count_costs(const arch::NetworkConfig& cfg, std::size_t height,
                                     std::size_t width);

struct SparseCostComparison {
  std::uint64_t sparse_macs = 0;
  std::uint64_t standard_macs = 0;
  [[nodiscard]] double ratio() const noexcept {
    return static_cast<double>(sparse_macs) / static_cast<double>(standard_macs);
  }
};

/// MACs of a sparse module (in -> out with ratio s, cheap kernel d) against a standard
/// k x k conv in -> out, both at height x width.
[[nodiscard]] SparseCostComparison sparse_vs_standard(std::size_t in_channels,
                                                      std::size_t out_channels,
                                                      std::size_t sparse_ratio,
                                                      std::size_t cheap_kernel, std::size_t kernel,
                                                      std::size_t height, std::size_t width);

}  // namespace scanet::profile
