#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scanet/arch/checkpoint.hpp"
#include "scanet/arch/config.hpp"
#include "scanet/arch/gradient_map.hpp"
#include "scanet/arch/network.hpp"
#include "scanet/tensor/random.hpp"
#include "scanet/tensor/serialize.hpp"

using namespace scanet;

namespace {

Tensor rand_image(Shape s, std::uint64_t stream) {
  std::vector<float> v(s.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = float(random::uniform(9, stream, i));
  return Tensor::from_data(s, std::move(v));
}

arch::NetworkConfig tiny(arch::Structure s = arch::Structure::unet) {
  arch::NetworkConfig c;
  c.base_channels = 8;
  c.num_scales = 2;
  c.cams_per_stage = 1;
  c.cam.ca_reduction = 2;
  c.grad_branch_blocks = 2;
  c.structure = s;
  c.cascade_depth = 2;
  return c;
}

std::string bytes_of(const arch::Checkpoint& ck) {
  std::ostringstream ss;
  arch::write_checkpoint(ss, ck);
  return ss.str();
}

}  // namespace

TEST_CASE("gradient map of a constant image is zero") {
  const Tensor g = arch::extract_gradient_map(Tensor::full({1, 3, 6, 5}, 0.7f));
  CHECK(g.shape() == Shape{1, 1, 6, 5});
  for (float v : g.data()) CHECK(v == 0.0f);
}

TEST_CASE("gradient map of a horizontal ramp") {
  std::vector<float> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = float(i % 4);
  const Tensor g = arch::extract_gradient_map(Tensor::from_data({1, 1, 4, 4}, v));
  CHECK(g.at(0, 0, 1, 0) == 1.0f);  // border: x1 - x0
  CHECK(g.at(0, 0, 1, 1) == 2.0f);  // interior: x2 - x0
  CHECK(g.at(0, 0, 1, 3) == 1.0f);
}

TEST_CASE("network forward shapes for both structures") {
  for (const auto s : {arch::Structure::unet, arch::Structure::cascade}) {
    const arch::ScaNet<float> net(tiny(s), 1);
    const Tensor x = rand_image({2, 3, 8, 12}, 1);
    const auto out = net.forward(x);
    CHECK(out.denoised.shape() == x.shape());
    CHECK(out.pred_grad.shape() == Shape{2, 1, 8, 12});
  }
  auto cfg = tiny();
  cfg.enable_grad_branch = false;
  const arch::ScaNet<float> net(cfg, 1);
  CHECK_FALSE(net.forward(rand_image({1, 3, 4, 4}, 2)).pred_grad.defined());
}

TEST_CASE("network rejects bad inputs") {
  auto cfg = tiny();
  cfg.num_scales = 3;
  const arch::ScaNet<float> net(cfg, 1);
  CHECK_THROWS_AS((void)net.forward(rand_image({1, 3, 6, 8}, 1)), ShapeError);
  CHECK_THROWS_AS((void)net.forward(rand_image({1, 1, 8, 8}, 1)), ShapeError);
}

TEST_CASE("inference clamps, training does not") {
  const arch::ScaNet<float> net(tiny(), 3);
  const Tensor x = Tensor::full({1, 3, 4, 4}, 1.0f);
  const Tensor y = net.forward(x, arch::Phase::inference).denoised;
  for (float v : y.data()) CHECK((v >= 0.0f && v <= 1.0f));
  const Tensor raw = net.forward(x, arch::Phase::train).denoised;
  CHECK(std::any_of(raw.data().begin(), raw.data().end(), [](float v) { return v != std::clamp(v, 0.0f, 1.0f); }));
}

TEST_CASE("toggles do not change the parameter set") {
  auto a = tiny(), b = tiny();
  b.cam.enable_dense = false;
  b.cam.enable_sparse = false;
  b.enable_grad_branch = false;
  const arch::ScaNet<float> na(a, 4), nb(b, 4);
  CHECK(na.parameters().size() == nb.parameters().size());
  CHECK(na.parameters().element_count() == nb.parameters().element_count());
}

TEST_CASE("config text round-trips and rejects unknown keys") {
  auto cfg = tiny(arch::Structure::cascade);
  cfg.cam.sparse_ratio = 1;
  cfg.cam.enable_sparse = false;
  const std::string text = arch::to_text(cfg);
  CHECK(arch::network_config_from_text(text) == cfg);
  CHECK_THROWS_AS((void)arch::network_config_from_text(R"({"base_chanels": 8})"), std::invalid_argument);
  CHECK_THROWS_AS((void)arch::network_config_from_text(R"({"structure": "tree"})"), std::invalid_argument);
  CHECK_THROWS_AS((void)arch::parse_structure("x"), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is byte-exact") {
  const arch::ScaNet<float> net(tiny(), 5);
  arch::Checkpoint ck;
  ck.config = net.config();
  ck.parameters = arch::export_parameters(net);
  ck.epoch = 3;
  ck.step = 17;
  ck.seed = 5;
  arch::OptimizerSnapshot opt;
  opt.step = 17;
  opt.first_moment["pixel.head.bias"] = Tensor::full({1, 8, 1, 1}, 0.25f);
  opt.second_moment["pixel.head.bias"] = Tensor::full({1, 8, 1, 1}, 0.5f);
  ck.optimizer = opt;
  const std::string bytes = bytes_of(ck);
  CHECK(bytes.substr(0, 4) == "SCCK");
  std::istringstream in(bytes);
  const arch::Checkpoint back = arch::read_checkpoint(in);
  CHECK(bytes_of(back) == bytes);
  CHECK(back.config == ck.config);
  CHECK(back.step == 17);

  const arch::ScaNet<float> restored = arch::model_from_checkpoint(back);
  const Tensor x = rand_image({1, 3, 4, 4}, 7);
  const auto y0 = net.forward(x).denoised, y1 = restored.forward(x).denoised;
  CHECK(std::equal(y0.data().begin(), y0.data().end(), y1.data().begin()));
}

TEST_CASE("checkpoint import checks names and shapes") {
  arch::ScaNet<float> net(tiny(), 5);
  auto params = arch::export_parameters(net);
  params.erase(params.begin());
  CHECK_THROWS_AS(arch::import_parameters(net, params), FormatError);
  params = arch::export_parameters(net);
  params.begin()->second = Tensor::zeros({1, 1, 1, 1});
  CHECK_THROWS_AS(arch::import_parameters(net, params), FormatError);
  std::istringstream junk("SCCK\x07\0\0\0");
  CHECK_THROWS_AS((void)arch::read_checkpoint(junk), FormatError);
}
