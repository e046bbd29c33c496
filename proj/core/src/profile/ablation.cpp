#include "scanet/profile/ablation.hpp"

#include <cstdio>
#include <ostream>

#include "scanet/loss/metrics.hpp"
#include "scanet/profile/benchmark.hpp"
#include "scanet/profile/cost.hpp"
#include "scanet/train/trainer.hpp"

namespace scanet::profile {

std::string AblationVariant::label() const {
  std::string s(arch::to_string(structure));
  if (!dense && !sparse && !grad_branch) return s + " baseline";
  if (dense) s += " +DM";
  if (sparse) s += " +SM";
  if (grad_branch) s += " +grad";
  return s;
}

arch::NetworkConfig AblationVariant::apply(arch::NetworkConfig base) const {
  base.structure = structure;
  base.cam.enable_dense = dense;
  base.cam.enable_sparse = sparse;
  base.enable_grad_branch = grad_branch;
  return base;
}

std::vector<AblationVariant> ablation_grid() {
  std::vector<AblationVariant> grid;
  for (const auto s : {arch::Structure::cascade, arch::Structure::unet}) {
    grid.push_back({s, false, false, false});
    grid.push_back({s, true, false, false});
    grid.push_back({s, true, true, false});
    grid.push_back({s, true, true, true});
  }
  return grid;
}

std::vector<AblationRow> run_ablation(const AblationOptions& opts,
                                      const std::function<void(const AblationRow&)>& on_row) {
  if (opts.validation_set.empty()) throw std::invalid_argument("ablate: empty validation set");
  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_grid()) {
    const arch::NetworkConfig cfg = variant.apply(opts.base);
    AblationRow row;
    row.variant = variant;
    const CostReport cost = count_costs(cfg, opts.cost_hw, opts.cost_hw);
    row.macs = cost.total_macs;
    row.params = cost.total_params;
    const BenchmarkResult bench = benchmark_forward(cfg, opts.bench_hw, opts.bench_hw, opts.bench_repeats);
    row.runtime_ms = bench.median_ms;
    row.runtime_mad_ms = bench.mad_ms;

    train::Trainer trainer(cfg, opts.train, opts.train_set);
    trainer.run();
    const train::EvalTable table = train::evaluate(trainer.model(), opts.validation_set);
    row.psnr = table.mean_psnr;
    for (const auto& p : opts.validation_set) row.noisy_psnr += loss::psnr(p.noisy, p.clean);
    row.noisy_psnr /= static_cast<double>(opts.validation_set.size());
    rows.push_back(row);
    if (on_row) on_row(row);
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "structure,dense,sparse,grad_branch,macs,params,runtime_ms,runtime_mad_ms,psnr,noisy_psnr\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%llu,%llu,%.4f,%.4f,%.4f,%.4f\n",
                  std::string(arch::to_string(r.variant.structure)).c_str(), r.variant.dense,
                  r.variant.sparse, r.variant.grad_branch, static_cast<unsigned long long>(r.macs),
                  static_cast<unsigned long long>(r.params), r.runtime_ms, r.runtime_mad_ms, r.psnr,
                  r.noisy_psnr);
    out << buf;
  }
}

}  // namespace scanet::profile
