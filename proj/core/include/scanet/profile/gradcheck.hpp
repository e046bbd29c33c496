#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "scanet/tensor/tensor.hpp"

namespace scanet::profile {

struct GradcheckOptions {
  double step = 1e-4;       // central-difference half step
  double rtol = 1e-4;       // bound on the relative error
  double floor = 1e-6;      // below this, gradients are compared absolutely (rtol * floor)
  /// Differences below roundoff_factor * eps * (|f+| + |f-|) / 2h are indistinguishable
  /// from rounding noise and are accepted.
  double roundoff_factor = 8.0;
  std::size_t max_coords_per_leaf = 16;  // leaves with more elements are sampled
  std::uint64_t seed = 0;
};

struct GradcheckCase {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "leaf[index]: analytic vs numeric" of the largest error
  double seconds = 0.0;
  bool passed = false;
};

using NamedLeaves = std::vector<std::pair<std::string, Tensor64>>;

/// Compares backward() of the scalar `loss` against central differences
/// (f(x+h) - f(x-h)) / 2h on (sampled) elements of every leaf. Relative error is
/// |a - n| / max(|a|, |n|, floor, resolution / rtol), where resolution is the rounding
/// limit of the difference quotient. Piecewise-linear ops are pinned to the branches of the
/// unperturbed pass so a difference never straddles a kink.
[[nodiscard]] GradcheckCase gradcheck(const std::string& name, const std::function<Tensor64()>& loss,
                                      const NamedLeaves& leaves, const GradcheckOptions& opts = {});

/// Every differentiable op, the attention / dense / sparse / CAM blocks, both branches and
/// the full network at 8x8, and the three losses.
[[nodiscard]] std::vector<GradcheckCase> run_audit_suite(const GradcheckOptions& opts = {},
                                                         std::ostream* progress = nullptr);

void print_case(std::ostream& out, const GradcheckCase& c);

}  // namespace scanet::profile
