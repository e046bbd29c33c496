#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "scanet/arch/network.hpp"
#include "scanet/nn/cost_recorder.hpp"
#include "scanet/profile/ablation.hpp"
#include "scanet/profile/benchmark.hpp"
#include "scanet/profile/cost.hpp"

using namespace scanet;

namespace {

arch::NetworkConfig small(arch::Structure s) {
  arch::NetworkConfig c;
  c.base_channels = 6;
  c.num_scales = 3;
  c.cams_per_stage = 1;
  c.cam.ca_reduction = 3;
  c.cam.sparse_ratio = 2;
  c.grad_branch_blocks = 4;  // more blocks than skip features: cycling
  c.structure = s;
  c.cascade_depth = 3;
  return c;
}

std::vector<arch::NetworkConfig> variants() {
  std::vector<arch::NetworkConfig> out;
  for (const auto s : {arch::Structure::unet, arch::Structure::cascade}) {
    for (const auto& v : profile::ablation_grid()) {
      if (v.structure == s) out.push_back(v.apply(small(s)));
    }
  }
  auto odd = small(arch::Structure::unet);
  odd.cam.enable_dense = false;
  odd.cam.enable_sparse = true;
  out.push_back(odd);
  return out;
}

}  // namespace

TEST_CASE("analytic costs match an executed forward pass") {
  for (const auto& cfg : variants()) {
    CAPTURE(arch::to_text(cfg));
    const std::size_t h = 8, w = 12;
    const auto report = profile::count_costs(cfg, h, w);
    const arch::ScaNet<float> net(cfg, 0);
    nn::CostRecorder rec;
    (void)net.forward(Tensor::full({1, 3, h, w}, 0.5f), arch::Phase::inference);
    REQUIRE(rec.rows().size() == report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      CHECK(rec.rows()[i].name == report.rows[i].name);
      CHECK(rec.rows()[i].output == report.rows[i].output);
      CHECK(rec.rows()[i].macs == report.rows[i].macs);
      CHECK(rec.rows()[i].params == report.rows[i].params);
    }
    std::uint64_t macs = 0, params = 0;
    for (const auto& r : report.rows) {
      macs += r.macs;
      params += r.params;
    }
    CHECK(report.total_macs == macs);
    CHECK(report.total_params == params);
    CHECK(report.flops() == 2 * macs);
  }
}

TEST_CASE("full configuration counts every parameter") {
  const auto cfg = small(arch::Structure::unet);
  const arch::ScaNet<float> net(cfg, 0);
  CHECK(profile::count_costs(cfg, 8, 8).total_params == net.parameters().element_count());
}

TEST_CASE("costs scale linearly with pixel count") {
  const arch::NetworkConfig cfg;
  const auto a = profile::count_costs(cfg, 64, 64);
  const auto b = profile::count_costs(cfg, 128, 256);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    // Channel-attention convs act on pooled 1x1 maps and do not scale.
    const bool pooled = a.rows[i].output.h == 1 && a.rows[i].output.w == 1;
    CHECK(b.rows[i].macs == (pooled ? 1 : 8) * a.rows[i].macs);
  }
  CHECK(b.total_params == a.total_params);
  CHECK_THROWS_AS((void)profile::count_costs(cfg, 63, 64), std::invalid_argument);
}

TEST_CASE("sparse module cost ratio") {
  const auto cmp = profile::sparse_vs_standard(64, 64, 3, 3, 3, 32, 32);
  CHECK(cmp.standard_macs == 32ull * 32 * 64 * 64 * 9);
  CHECK(cmp.sparse_macs == 32ull * 32 * (16 * 64 * 9 + 3 * 16 * 9));
  CHECK(cmp.ratio() == 67.0 / 256.0);
  CHECK(std::abs(cmp.ratio() - 0.2539) <= 0.05 * 0.2539);
  CHECK_THROWS_AS((void)profile::sparse_vs_standard(64, 63, 3, 3, 3, 8, 8), std::invalid_argument);
}

TEST_CASE("ablation grid is cumulative and costs grow along it") {
  const auto grid = profile::ablation_grid();
  REQUIRE(grid.size() == 8);
  CHECK(grid[0].structure == arch::Structure::cascade);
  CHECK(grid[4].structure == arch::Structure::unet);
  CHECK_FALSE(grid[0].dense);
  CHECK((grid[3].dense && grid[3].sparse && grid[3].grad_branch));
  const arch::NetworkConfig base;
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t i = 1; i < 4; ++i) {
      const auto prev = profile::count_costs(grid[4 * s + i - 1].apply(base), 64, 64).total_macs;
      const auto cur = profile::count_costs(grid[4 * s + i].apply(base), 64, 64).total_macs;
      CHECK(cur > prev);
    }
  }
}

TEST_CASE("robust statistics") {
  CHECK(profile::median({3, 1, 2}) == 2.0);
  CHECK(profile::median({4, 1, 2, 3}) == 2.5);
  CHECK(profile::median_absolute_deviation({1, 1, 2, 2, 4, 6, 9}) == 1.0);
  CHECK_THROWS((void)profile::median({}));
}

TEST_CASE("forward benchmark") {
  auto cfg = small(arch::Structure::unet);
  CHECK_THROWS_AS((void)profile::benchmark_forward(cfg, 16, 16, 2), std::invalid_argument);
  const auto r = profile::benchmark_forward(cfg, 16, 16, 3);
  CHECK(r.samples_ms.size() == 3);
  CHECK(std::isfinite(r.median_ms));
  CHECK(r.median_ms > 0.0);
  CHECK(r.macs == profile::count_costs(cfg, 16, 16).total_macs);
  std::ostringstream out;
  r.print(out);
  CHECK(out.str().find("median") != std::string::npos);
}

TEST_CASE("cost report output") {
  const auto rep = profile::count_costs(small(arch::Structure::cascade), 8, 8);
  std::ostringstream csv;
  rep.write_csv(csv);
  CHECK(csv.str().rfind("name,out_c,out_h,out_w,params,macs\n", 0) == 0);
  CHECK(csv.str().find("total,") != std::string::npos);
}
