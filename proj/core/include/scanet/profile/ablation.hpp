#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "scanet/arch/config.hpp"
#include "scanet/data/augment.hpp"
#include "scanet/train/config.hpp"

namespace scanet::profile {

/// One row of the structure x component grid: the baseline, then dense module, sparse
/// module and gradient branch switched on cumulatively.
struct AblationVariant {
  arch::Structure structure = arch::Structure::unet;
  bool dense = false;
  bool sparse = false;
  bool grad_branch = false;

  [[nodiscard]] std::string label() const;
  [[nodiscard]] arch::NetworkConfig apply(arch::NetworkConfig base) const;
};

/// cascade block first, then unet; 4 cumulative rows each.
[[nodiscard]] std::vector<AblationVariant> ablation_grid();

struct AblationRow {
  AblationVariant variant;
  std::uint64_t macs = 0;  // at cost_hw x cost_hw
  std::uint64_t params = 0;
  double runtime_ms = 0.0;  // median inference time at cost_hw
  double runtime_mad_ms = 0.0;
  double psnr = 0.0;        // mean over the validation pairs after training
  double noisy_psnr = 0.0;
};

struct AblationOptions {
  arch::NetworkConfig base;
  train::TrainConfig train;
  std::vector<data::ImagePair> train_set;
  std::vector<data::ImagePair> validation_set;
  std::size_t cost_hw = 256;
  std::size_t bench_hw = 64;
  std::size_t bench_repeats = 3;
};

[[nodiscard]] std::vector<AblationRow> run_ablation(
    const AblationOptions& opts, const std::function<void(const AblationRow&)>& on_row = {});

/// "structure,dense,sparse,grad_branch,macs,params,runtime_ms,runtime_mad_ms,psnr,noisy_psnr"
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace scanet::profile
