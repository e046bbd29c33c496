#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "scanet/arch/checkpoint.hpp"
#include "scanet/data/dataset.hpp"
#include "scanet/tensor/ops.hpp"
#include "scanet/tensor/random.hpp"
#include "scanet/train/adam.hpp"
#include "scanet/train/config.hpp"
#include "scanet/train/trainer.hpp"

using namespace scanet;

namespace {

arch::NetworkConfig tiny_net() {
  arch::NetworkConfig c;
  c.base_channels = 8;
  c.num_scales = 2;
  c.cams_per_stage = 1;
  c.cam.ca_reduction = 2;
  c.grad_branch_blocks = 1;
  return c;
}

train::TrainConfig tiny_train(std::size_t steps) {
  train::TrainConfig t;
  t.batch_size = 2;
  t.crop = 8;
  t.epochs = 100;
  t.max_steps = steps;
  t.seed = 3;
  t.online_noise = data::NoiseSpec{};
  return t;
}

std::string bytes_of(const arch::Checkpoint& ck) {
  std::ostringstream ss;
  arch::write_checkpoint(ss, ck);
  return ss.str();
}

nn::ParameterSet<double> scalar_param(double value) {
  nn::ParameterSet<double> ps;
  ps.add("w", Tensor64::full({1, 1, 1, 1}, value, true));
  return ps;
}

}  // namespace

TEST_CASE("adam first step moves each weight by lr against the gradient sign") {
  std::vector<double> p{1.0, 1.0, 1.0}, g{3.0, -0.01, 0.0}, m(3), v(3);
  train::adam_update(p.data(), g.data(), m.data(), v.data(), 3, 1, 0.01, train::AdamConfig{});
  CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(1.01).epsilon(1e-6));
  CHECK(p[2] == 1.0);
}

TEST_CASE("adam trace on a quadratic") {
  // Minimizing (w - 3)^2 from w = 1 with lr 0.1 and default betas; reference values computed
  // independently in double precision.
  const double expect[10] = {1.09999999975,      1.1998335138842988, 1.2993766079535347,
                             1.398495104710579,  1.4970442187049877, 1.5948682698398855,
                             1.6918005043860822, 1.7876630568721164, 1.8822670910356916,
                             1.9754131621746405};
  auto ps = scalar_param(1.0);
  train::AdamState<double> st;
  for (int t = 0; t < 10; ++t) {
    auto& w = ps.at("w");
    w.zero_grad();
    const Tensor64 d = add_scalar(w, -3.0);
    mul(d, d).backward();
    train::adam_step(ps, st, 0.1);
    CHECK(std::abs(ps.at("w").item() - expect[t]) < 1e-10);
  }
  CHECK(st.step == 10);
}

TEST_CASE("adam with zero betas is sign descent") {
  train::AdamConfig cfg;
  cfg.beta1 = 0.0;
  cfg.beta2 = 0.0;
  cfg.eps = 0.0;
  std::vector<double> p{0.0, 0.0}, g{5.0, -0.2}, m(2), v(2);
  for (std::uint64_t t = 1; t <= 3; ++t) train::adam_update(p.data(), g.data(), m.data(), v.data(), 2, t, 0.5, cfg);
  CHECK(p[0] == doctest::Approx(-1.5));
  CHECK(p[1] == doctest::Approx(1.5));
}

TEST_CASE("adam rejects missing gradients and bad betas") {
  auto ps = scalar_param(1.0);
  ps.at("w").clear_grad();
  train::AdamState<double> st;
  CHECK_THROWS_AS(train::adam_step(ps, st, 0.1), train::MissingGradientError);
  st.config.beta1 = 1.0;
  ps.at("w").zero_grad();
  CHECK_THROWS_AS(train::adam_step(ps, st, 0.1), std::invalid_argument);
}

TEST_CASE("step schedule and presets") {
  const auto paper = train::preset("paper");
  CHECK(paper.train.epochs == 60);
  CHECK(paper.train.batch_size == 16);
  CHECK(paper.train.crop == 128);
  CHECK(paper.train.lr0 == 1e-4);
  CHECK(train::lr_at(0, paper.train) == 1e-4);
  CHECK(train::lr_at(24, paper.train) == 1e-4);
  CHECK(train::lr_at(25, paper.train) == doctest::Approx(1e-5));
  CHECK(train::lr_at(50, paper.train) == doctest::Approx(1e-6));
  CHECK(paper.train.adam == train::AdamConfig{});
  CHECK_THROWS_AS((void)train::preset("cluster"), std::invalid_argument);
}

TEST_CASE("run config text round trip and overrides") {
  auto cfg = train::preset("desk");
  cfg.train.max_steps = 12;
  cfg.train.online_noise = data::NoiseSpec{data::NoiseKind::poisson_gaussian, 0.05, 0.01, 9};
  cfg.network.structure = arch::Structure::cascade;
  CHECK(train::run_config_from_text(train::to_text(cfg)).train == cfg.train);
  CHECK(train::run_config_from_text(train::to_text(cfg)).network == cfg.network);
  const auto over = train::run_config_from_text(R"({"preset": "paper", "train": {"batch_size": 4}})");
  CHECK(over.train.batch_size == 4);
  CHECK(over.train.crop == 128);
  CHECK_THROWS_AS((void)train::run_config_from_text(R"({"train": {"batch": 4}})"), std::invalid_argument);
  CHECK_THROWS((void)train::run_config_from_text("{not json"));
}

TEST_CASE("training is deterministic and resumes exactly") {
  const auto pairs = data::synthetic_pairs(3, 16, 5);
  train::Trainer a(tiny_net(), tiny_train(4), pairs);
  CHECK(a.steps_per_epoch() == 2);
  std::ostringstream log;
  a.set_log(&log);
  const auto full = a.run();
  CHECK(full.step == 4);
  CHECK(log.str().rfind(train::kTrainLogHeader, 0) == 0);

  train::Trainer b(tiny_net(), tiny_train(4), pairs);
  CHECK(bytes_of(b.run()) == bytes_of(full));

  train::Trainer c(tiny_net(), tiny_train(4), pairs);
  c.run_steps(3);
  std::stringstream saved;
  arch::write_checkpoint(saved, c.checkpoint());
  train::Trainer d(tiny_net(), tiny_train(4), pairs);
  d.resume(arch::read_checkpoint(saved));
  CHECK(d.step() == 3);
  CHECK(bytes_of(d.run()) == bytes_of(full));

  auto other = tiny_train(4);
  other.seed = 4;
  train::Trainer e(tiny_net(), other, pairs);
  CHECK_THROWS_AS(e.resume(full), std::invalid_argument);
}

TEST_CASE("batches cover the epoch and differ across epochs") {
  const auto pairs = data::synthetic_pairs(4, 16, 5);
  train::Trainer t(tiny_net(), tiny_train(8), pairs);
  auto i0 = t.batch_indices(0), i1 = t.batch_indices(1);
  i0.insert(i0.end(), i1.begin(), i1.end());
  std::sort(i0.begin(), i0.end());
  CHECK(i0 == std::vector<std::size_t>{0, 1, 2, 3});
  const auto [noisy, clean] = t.make_batch(0);
  CHECK(noisy.shape() == Shape{2, 3, 8, 8});
  CHECK(clean.shape() == noisy.shape());
}

TEST_CASE("non-finite loss aborts with context") {
  auto pairs = data::synthetic_pairs(2, 8, 1);
  for (auto& p : pairs) {
    std::vector<float> v(p.clean.data().begin(), p.clean.data().end());
    v[0] = std::numeric_limits<float>::quiet_NaN();
    p.clean = Tensor::from_data(p.clean.shape(), v);
    p.noisy = p.clean.clone();
  }
  auto cfg = tiny_train(2);
  cfg.crop = 8;
  train::Trainer t(tiny_net(), cfg, pairs);
  try {
    (void)t.train_step();
    FAIL("expected TrainingError");
  } catch (const train::TrainingError& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("trainer rejects crops that do not fit the network") {
  auto cfg = tiny_train(1);
  cfg.crop = 7;
  CHECK_THROWS_AS(train::Trainer(tiny_net(), cfg, data::synthetic_pairs(1, 16, 0)), std::invalid_argument);
}

TEST_CASE("reflect padding mirrors without repeating the edge") {
  const Tensor x = Tensor::from_data({1, 1, 2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor p = train::reflect_pad(x, 1, 2);
  CHECK(p.shape() == Shape{1, 1, 3, 5});
  const std::vector<float> expect{1, 2, 3, 2, 1, 4, 5, 6, 5, 4, 1, 2, 3, 2, 1};
  CHECK(std::equal(expect.begin(), expect.end(), p.data().begin()));
}

TEST_CASE("evaluation of an identity model on clean pairs") {
  arch::ScaNet<float> model(tiny_net(), 1);
  for (auto& [name, t] : model.parameters()) {
    if (name.rfind("pixel.tail", 0) == 0) std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0f);
  }
  auto pairs = data::synthetic_pairs(2, 24, 1);
  pairs[1].noisy = data::synthetic_image(22, 13, 1, 1);  // odd size exercises padding
  pairs[1].clean = pairs[1].noisy;
  const auto table = train::evaluate(model, pairs);
  REQUIRE(table.rows.size() == 2);
  for (const auto& r : table.rows) {
    CHECK(std::isinf(r.psnr));
    CHECK(r.ssim == doctest::Approx(1.0));
  }
  std::ostringstream csv;
  table.write_csv(csv);
  CHECK(csv.str().rfind("id,psnr,ssim\n", 0) == 0);
  CHECK(csv.str().find("mean,") != std::string::npos);
}
