#include "scanet/profile/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>

#include "scanet/arch/gradient_map.hpp"
#include "scanet/arch/network.hpp"
#include "scanet/cam/cam.hpp"
#include "scanet/loss/losses.hpp"
#include "scanet/nn/conv.hpp"
#include "scanet/nn/parameters.hpp"
#include "scanet/nn/pooling.hpp"
#include "scanet/tensor/ops.hpp"
#include "scanet/tensor/random.hpp"

namespace scanet::profile {

namespace {

std::vector<std::size_t> sample_coords(std::size_t numel, std::size_t limit, std::uint64_t seed,
                                       std::uint64_t stream) {
  std::vector<std::size_t> idx(numel);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (numel <= limit) return idx;
  random::Stream rng(seed, stream);
  for (std::size_t i = 0; i < limit; ++i) std::swap(idx[i], idx[i + rng.below(numel - i)]);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradcheckCase gradcheck(const std::string& name, const std::function<Tensor64()>& loss,
                        const NamedLeaves& leaves, const GradcheckOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckCase res;
  res.name = name;
  PiecewiseReplay::Session session;
  for (auto [leaf_name, t] : leaves) {
    t.set_requires_grad(true);
    t.clear_grad();
  }
  const Tensor64 value = loss();
  if (value.shape().numel() != 1) throw ShapeError("gradcheck '" + name + "': loss is not a scalar");
  value.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& [leaf_name, t] : leaves) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.shape().numel(), 0.0);
    }
  }
  session.start_replay();
  const auto evaluate = [&] {
    session.rewind();
    NoGradGuard guard;
    return loss().item();
  };
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor64 t = leaves[li].second;
    const auto coords = sample_coords(t.shape().numel(), opts.max_coords_per_leaf, opts.seed,
                                      random::hash_name(name + "/" + leaves[li].first));
    for (std::size_t i : coords) {
      auto data = t.mutable_data();
      const double orig = data[i];
      data[i] = orig + opts.step;
      const double fp = evaluate();
      data[i] = orig - opts.step;
      const double fm = evaluate();
      data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * opts.step);
      const double a = analytic[li][i];
      // The difference quotient cannot resolve more than the rounding error of fp and fm.
      const double resolution = opts.roundoff_factor * std::numeric_limits<double>::epsilon() *
                                (std::abs(fp) + std::abs(fm)) / (2.0 * opts.step);
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), opts.floor, resolution / opts.rtol});
      ++res.checked;
      if (!(rel <= res.max_rel_error)) {
        res.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s[%zu]: analytic %.10g vs numeric %.10g",
                      leaves[li].first.c_str(), i, a, numeric);
        res.worst = buf;
      }
    }
  }
  res.passed = res.checked > 0 && res.max_rel_error <= opts.rtol;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void print_case(std::ostream& out, const GradcheckCase& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-4s %-28s %6zu coords  max rel err %.3e  (%.2fs)",
                c.passed ? "ok" : "FAIL", c.name.c_str(), c.checked, c.max_rel_error, c.seconds);
  out << buf;
  if (!c.passed && !c.worst.empty()) out << "  worst " << c.worst;
  out << '\n';
}

namespace {

class Suite {
 public:
  Suite(const GradcheckOptions& opts, std::ostream* progress) : opts_(opts), progress_(progress) {}

  Tensor64 rand(const Shape& s, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(s.numel());
    const std::uint64_t stream = random::mix(random::hash_name("gradcheck-data"), counter_++);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = lo + (hi - lo) * random::uniform(opts_.seed, stream, i);
    return Tensor64::from_data(s, std::move(v));
  }

  /// A linear probe sum(W * out) with W drawn once per case (on the recording pass).
  std::function<Tensor64(const Tensor64&)> probe() {
    auto weights = std::make_shared<Tensor64>();
    return [this, weights](const Tensor64& out) {
      if (!weights->defined() || weights->shape() != out.shape()) *weights = rand(out.shape());
      return weighted_sum(out, *weights);
    };
  }

  void run(const std::string& name, const std::function<Tensor64()>& loss, const NamedLeaves& leaves) {
    results_.push_back(gradcheck(name, loss, leaves, opts_));
    if (progress_) print_case(*progress_, results_.back());
  }

  void unary(const std::string& name, Tensor64 (*op)(const Tensor64&), double lo = -1.0, double hi = 1.0) {
    Tensor64 x = rand(Shape{2, 3, 4, 5}, lo, hi);
    auto p = probe();
    run(name, [=] { return p(op(x)); }, {{"x", x}});
  }

  static NamedLeaves leaves_of(nn::ParameterSet<double>& set, NamedLeaves extra) {
    for (auto& [name, t] : set) extra.emplace_back(name, t);
    return extra;
  }

  std::vector<GradcheckCase> take() { return std::move(results_); }

  const GradcheckOptions& opts_;
  std::ostream* progress_;
  std::uint64_t counter_ = 0;
  std::vector<GradcheckCase> results_;
};

template <typename F>
Tensor64 (*as_fn(F))(const Tensor64&) {
  return +F{};
}

cam::CamConfig small_cam(std::size_t channels) {
  cam::CamConfig c;
  c.channels = channels;
  c.sparse_ratio = 3;
  c.sa_kernel = 7;
  c.ca_reduction = 2;
  c.cheap_kernel = 3;
  return c;
}

arch::NetworkConfig small_network(arch::Structure structure) {
  arch::NetworkConfig cfg;
  cfg.base_channels = 8;
  cfg.num_scales = 2;
  cfg.cams_per_stage = 1;
  cfg.cam = small_cam(8);
  cfg.grad_branch_blocks = 2;
  cfg.structure = structure;
  cfg.cascade_depth = 2;
  return cfg;
}

void elementwise_cases(Suite& s) {
  {
    Tensor64 a = s.rand(Shape{2, 3, 4, 5}), b = s.rand(Shape{2, 3, 4, 5});
    auto p = s.probe();
    s.run("add", [=] { return p(add(a, b)); }, {{"a", a}, {"b", b}});
    s.run("sub", [=] { return p(sub(a, b)); }, {{"a", a}, {"b", b}});
    s.run("mul", [=] { return p(mul(a, b)); }, {{"a", a}, {"b", b}});
    s.run("hypot", [=] { return p(hypot(a, b)); }, {{"a", a}, {"b", b}});
  }
  s.unary("neg", as_fn([](const Tensor64& x) { return neg(x); }));
  s.unary("add_scalar", as_fn([](const Tensor64& x) { return add_scalar(x, 0.75); }));
  s.unary("mul_scalar", as_fn([](const Tensor64& x) { return mul_scalar(x, -1.5); }));
  s.unary("sigmoid", as_fn([](const Tensor64& x) { return sigmoid(mul_scalar(x, 3.0)); }));
  s.unary("relu", as_fn([](const Tensor64& x) { return relu(x); }));
  s.unary("sqrt", as_fn([](const Tensor64& x) { return sqrt(x); }), 0.2, 2.0);
  s.unary("square", as_fn([](const Tensor64& x) { return square(x); }));
  s.unary("abs", as_fn([](const Tensor64& x) { return abs(x); }));
  s.unary("sum", as_fn([](const Tensor64& x) { return sum(x); }));
  s.unary("mean", as_fn([](const Tensor64& x) { return mean(x); }));
  s.unary("central_difference_rows", as_fn([](const Tensor64& x) { return central_difference(x, Axis::rows); }));
  s.unary("central_difference_cols", as_fn([](const Tensor64& x) { return central_difference(x, Axis::cols); }));
  s.unary("weighted_channel_sum", as_fn([](const Tensor64& x) {
            static constexpr double w[3] = {0.299, 0.587, 0.114};
            return weighted_channel_sum(x, std::span<const double>(w));
          }));
  {
    Tensor64 a = s.rand(Shape{2, 3, 4, 4}), b = s.rand(Shape{2, 2, 4, 4}), c = s.rand(Shape{2, 1, 4, 4});
    auto p = s.probe();
    s.run("concat_channels", [=] { return p(concat_channels(a, b)); }, {{"a", a}, {"b", b}});
    s.run("concat_channels_n", [=] {
            const std::vector<Tensor64> parts{a, b, c};
            return p(concat_channels(std::span<const Tensor64>(parts)));
          }, {{"a", a}, {"b", b}, {"c", c}});
    s.run("expand_channels", [=] { return p(expand_channels(c, 5)); }, {{"x", c}});
  }
  {
    Tensor64 g = s.rand(Shape{2, 3, 1, 1});
    auto p = s.probe();
    s.run("expand_spatial", [=] { return p(expand_spatial(g, 3, 4)); }, {{"x", g}});
  }
}

void layer_cases(Suite& s) {
  const auto conv_case = [&](const std::string& name, const nn::ConvGeometry& g, const Shape& in) {
    Tensor64 x = s.rand(in);
    Tensor64 w = s.rand(Shape{g.out_channels, g.in_channels / g.groups, g.kernel, g.kernel});
    Tensor64 b = s.rand(Shape{1, g.out_channels, 1, 1});
    auto p = s.probe();
    s.run(name, [=] { return p(nn::conv2d(x, w, b, g)); }, {{"x", x}, {"weight", w}, {"bias", b}});
  };
  conv_case("conv2d_3x3", nn::conv_geometry(3, 4, 3), Shape{2, 3, 6, 5});
  conv_case("conv2d_1x1", nn::conv_geometry(4, 3, 1), Shape{2, 4, 5, 5});
  conv_case("conv2d_stride2", nn::conv_geometry(3, 4, 3, 2), Shape{2, 3, 6, 6});
  conv_case("conv2d_grouped", nn::conv_geometry(4, 6, 3, 1, 2), Shape{1, 4, 5, 6});
  conv_case("conv2d_depthwise", nn::conv_geometry(4, 4, 3, 1, 4), Shape{2, 4, 5, 5});
  conv_case("conv2d_7x7", nn::conv_geometry(2, 1, 7), Shape{1, 2, 8, 8});
  {
    nn::ParameterSet<double> set;
    nn::ParamFactory<double> f(set, s.opts_.seed);
    const auto down = f.conv("down", nn::conv_geometry(3, 6, 3, 2));
    const auto up = f.conv("up", nn::conv_geometry(3, 2, 3));
    Tensor64 x = s.rand(Shape{1, 3, 4, 6});
    auto p = s.probe();
    s.run("downsample_stride2", [=] { return p(nn::downsample_stride2(x, down)); },
          {{"x", x}, {"down.weight", set.at("down.weight")}, {"down.bias", set.at("down.bias")}});
    auto q = s.probe();
    s.run("upsample2x", [=] { return q(nn::upsample2x(x, up)); },
          {{"x", x}, {"up.weight", set.at("up.weight")}, {"up.bias", set.at("up.bias")}});
  }
  s.unary("upsample_nearest", as_fn([](const Tensor64& x) { return nn::upsample_nearest(x, 2); }));
  s.unary("global_avg_pool", as_fn([](const Tensor64& x) { return nn::global_avg_pool(x); }));
  s.unary("channel_avg", as_fn([](const Tensor64& x) { return nn::channel_avg(x); }));
  s.unary("channel_max", as_fn([](const Tensor64& x) { return nn::channel_max(x); }));
  {
    // hypot bends sharply where the gradient magnitude nears zero; a steep ramp under
    // bounded noise keeps every pixel's magnitude >= 0.2.
    Tensor64 noise = s.rand(Shape{2, 3, 6, 7}, 0.0, 0.2);
    std::vector<double> v(noise.data().begin(), noise.data().end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.6 * double((i / 7) % 6) + 0.4 * double(i % 7);
    Tensor64 x = Tensor64::from_data(noise.shape(), std::move(v));
    auto p = s.probe();
    s.run("gradient_map", [=] { return p(arch::extract_gradient_map(x)); }, {{"x", x}});
  }
}

void block_cases(Suite& s) {
  const std::size_t c = 8;
  const auto block_case = [&](const std::string& name, auto make, const cam::CamConfig& cfg,
                              std::size_t in_channels) {
    auto set = std::make_shared<nn::ParameterSet<double>>();
    nn::ParamFactory<double> f(*set, s.opts_.seed);
    auto module = std::make_shared<decltype(make(f, cfg))>(make(f, cfg));
    Tensor64 x = s.rand(Shape{2, in_channels, 8, 8});
    auto p = s.probe();
    s.run(name, [=] { return p((*module)(x)); }, Suite::leaves_of(*set, {{"x", x}}));
  };
  block_case("spatial_attention",
             [](auto& f, const cam::CamConfig& k) { return cam::SpatialAttention<double>(f, "m", k); },
             small_cam(c), c);
  block_case("channel_attention",
             [](auto& f, const cam::CamConfig& k) { return cam::ChannelAttention<double>(f, "m", k); },
             small_cam(c), c);
  block_case("dense_module",
             [](auto& f, const cam::CamConfig& k) { return cam::DenseModule<double>(f, "m", k); },
             small_cam(c), c);
  block_case("sparse_module",
             [](auto& f, const cam::CamConfig& k) { return cam::SparseModule<double>(f, "m", 6, 8, k); },
             small_cam(c), 6);
  for (const auto& [name, dense, sparse] :
       {std::tuple{"cam_block", true, true}, std::tuple{"cam_block_dense_only", true, false},
        std::tuple{"cam_block_sparse_only", false, true}}) {
    cam::CamConfig k = small_cam(c);
    k.enable_dense = dense;
    k.enable_sparse = sparse;
    block_case(name, [](auto& f, const cam::CamConfig& kk) { return cam::CamBlock<double>(f, "m", kk); }, k, c);
  }
}

void network_cases(Suite& s) {
  {
    const auto cfg = small_network(arch::Structure::unet);
    auto set = std::make_shared<nn::ParameterSet<double>>();
    nn::ParamFactory<double> f(*set, s.opts_.seed);
    auto branch = std::make_shared<arch::PixelBranch<double>>(f, cfg);
    Tensor64 x = s.rand(Shape{1, 3, 8, 8}, 0.0, 1.0);
    auto p = s.probe();
    auto q = s.probe();
    s.run("pixel_branch", [=] {
            const auto out = branch->forward(x);
            Tensor64 total = p(out.residual);
            for (const auto& skip : out.skip_features) total = add(total, q(skip));
            return total;
          }, Suite::leaves_of(*set, {{"x", x}}));
  }
  {
    const auto cfg = small_network(arch::Structure::unet);
    auto set = std::make_shared<nn::ParameterSet<double>>();
    nn::ParamFactory<double> f(*set, s.opts_.seed);
    auto branch = std::make_shared<arch::GradientBranch<double>>(f, cfg);
    Tensor64 g = s.rand(Shape{1, 1, 8, 8}, 0.0, 1.0);
    Tensor64 k0 = s.rand(Shape{1, 8, 8, 8}), k1 = s.rand(Shape{1, 8, 8, 8});
    auto p = s.probe();
    auto q = s.probe();
    s.run("gradient_branch", [=] {
            const auto out = branch->forward(g, {k0, k1});
            return add(p(out.pred_grad), q(out.grad_features));
          }, Suite::leaves_of(*set, {{"grad_map", g}, {"skip0", k0}, {"skip1", k1}}));
  }
  for (const auto structure : {arch::Structure::unet, arch::Structure::cascade}) {
    const auto cfg = small_network(structure);
    auto model = std::make_shared<arch::ScaNet<double>>(cfg, s.opts_.seed);
    Tensor64 x = s.rand(Shape{1, 3, 8, 8}, 0.0, 1.0);
    auto p = s.probe();
    auto q = s.probe();
    s.run("scanet_" + std::string(arch::to_string(structure)), [=] {
            const auto out = model->forward(x);
            return add(p(out.denoised), q(out.pred_grad));
          }, Suite::leaves_of(model->parameters(), {{"x", x}}));
  }
}

// Charbonnier's sqrt(r^2 + eps^2) bends on the scale of eps = 1e-3, so a 1e-4 step near
// r = 0 measures curvature rather than slope. Targets keep |r| >= 0.05.
Tensor64 offset_target(Suite& s, const Tensor64& d) {
  const Tensor64 mag = s.rand(d.shape(), 0.05, 0.3);
  const Tensor64 sign = s.rand(d.shape());
  std::vector<double> v(d.data().begin(), d.data().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += (sign.data()[i] < 0 ? -1.0 : 1.0) * mag.data()[i];
  return Tensor64::from_data(d.shape(), std::move(v));
}

void loss_cases(Suite& s) {
  Tensor64 d = s.rand(Shape{2, 3, 8, 8}, 0.0, 1.0);
  Tensor64 gt = offset_target(s, d);
  Tensor64 pg = s.rand(Shape{2, 1, 8, 8}, 0.0, 1.0);
  s.run("charbonnier_loss", [=] { return loss::charbonnier_loss(d, gt, 1e-3); }, {{"denoised", d}});
  s.run("pixel_grad_loss", [=] { return loss::pixel_grad_loss(d, gt); }, {{"denoised", d}});
  s.run("grad_branch_loss", [=] { return loss::grad_branch_loss(pg, gt); }, {{"pred_grad", pg}});
  s.run("total_loss", [=] { return loss::total_loss(d, pg, gt, loss::LossWeights{}, true).total; },
        {{"denoised", d}, {"pred_grad", pg}});
  {
    const auto cfg = small_network(arch::Structure::unet);
    auto model = std::make_shared<arch::ScaNet<double>>(cfg, s.opts_.seed + 1);
    Tensor64 noisy = s.rand(Shape{1, 3, 8, 8}, 0.0, 1.0);
    Tensor64 clean = [&] {
      NoGradGuard guard;
      return offset_target(s, model->forward(noisy).denoised);
    }();
    s.run("scanet_training_objective", [=] {
            const auto out = model->forward(noisy);
            return loss::total_loss(out.denoised, out.pred_grad, clean, loss::LossWeights{}, true).total;
          }, Suite::leaves_of(model->parameters(), {{"noisy", noisy}}));
  }
}

}  // namespace

std::vector<GradcheckCase> run_audit_suite(const GradcheckOptions& opts, std::ostream* progress) {
  Suite s(opts, progress);
  elementwise_cases(s);
  layer_cases(s);
  block_cases(s);
  network_cases(s);
  loss_cases(s);
  return s.take();
}

}  // namespace scanet::profile
