#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scanet/tensor/tensor.hpp"

namespace scanet::nn {

struct LayerCost {
  std::string name;
  Shape output;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

/// While alive, collects one LayerCost per named convolution executed on this thread.
/// Lets tests compare an executed forward pass against the analytic profiler.
class CostRecorder {
 public:
  CostRecorder();
  ~CostRecorder();
  CostRecorder(const CostRecorder&) = delete;
  CostRecorder& operator=(const CostRecorder&) = delete;

  [[nodiscard]] const std::vector<LayerCost>& rows() const { return rows_; }

  /// nullptr when no recorder is active.
  [[nodiscard]] static CostRecorder* active() noexcept;
  void add(LayerCost row) { rows_.push_back(std::move(row)); }

 private:
  CostRecorder* previous_;
  std::vector<LayerCost> rows_;
};

}  // namespace scanet::nn
