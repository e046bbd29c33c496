#include "scanet/train/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace scanet::train {

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || crop == 0 || decay_every == 0) {
    throw std::invalid_argument("train: epochs, batch_size, crop and decay_every must be positive");
  }
  if (!(lr0 > 0.0)) throw std::invalid_argument("train: lr0 must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw std::invalid_argument("train: decay_factor must lie in (0, 1]");
  }
  if (max_steps && *max_steps == 0) throw std::invalid_argument("train: max_steps must be positive");
  loss.validate();
  adam.validate();
  if (online_noise) online_noise->validate();
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_every));
}

RunConfig preset(std::string_view name) {
  RunConfig rc;
  if (name == "paper") return rc;
  if (name == "desk") {
    rc.train.epochs = 40;
    rc.train.batch_size = 8;
    rc.train.crop = 32;
    return rc;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (paper|desk)");
}

namespace {

void to_json(json& j, const data::NoiseSpec& n) {
  j = json{{"kind", data::to_string(n.kind)}, {"sigma", n.sigma},
           {"poisson_scale", n.poisson_scale}, {"seed", n.seed}};
}

void from_json(const json& j, data::NoiseSpec& n) {
  jsonio::reject_unknown(j, {"kind", "sigma", "poisson_scale", "seed"}, "online_noise");
  if (j.contains("kind")) n.kind = data::parse_noise_kind(j.at("kind").get<std::string>());
  n.sigma = j.value("sigma", n.sigma);
  n.poisson_scale = j.value("poisson_scale", n.poisson_scale);
  n.seed = j.value("seed", n.seed);
}

void apply_train(const json& j, TrainConfig& t) {
  jsonio::reject_unknown(j, {"epochs", "batch_size", "crop", "lr0", "decay_factor", "decay_every",
                             "alpha", "beta", "gamma", "charbonnier_eps", "adam_beta1",
                             "adam_beta2", "adam_eps", "seed", "augment", "max_steps",
                             "online_noise"}, "train");
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.crop = j.value("crop", t.crop);
  t.lr0 = j.value("lr0", t.lr0);
  t.decay_factor = j.value("decay_factor", t.decay_factor);
  t.decay_every = j.value("decay_every", t.decay_every);
  t.loss.alpha = j.value("alpha", t.loss.alpha);
  t.loss.beta = j.value("beta", t.loss.beta);
  t.loss.gamma = j.value("gamma", t.loss.gamma);
  t.loss.charbonnier_eps = j.value("charbonnier_eps", t.loss.charbonnier_eps);
  t.adam.beta1 = j.value("adam_beta1", t.adam.beta1);
  t.adam.beta2 = j.value("adam_beta2", t.adam.beta2);
  t.adam.eps = j.value("adam_eps", t.adam.eps);
  t.seed = j.value("seed", t.seed);
  t.augment = j.value("augment", t.augment);
  if (j.contains("max_steps")) {
    const auto& v = j.at("max_steps");
    t.max_steps = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
  }
  if (j.contains("online_noise")) {
    const auto& v = j.at("online_noise");
    if (v.is_null()) {
      t.online_noise.reset();
    } else {
      data::NoiseSpec n = t.online_noise.value_or(data::NoiseSpec{});
      from_json(v, n);
      t.online_noise = n;
    }
  }
}

json train_json(const TrainConfig& t) {
  json j{{"epochs", t.epochs},           {"batch_size", t.batch_size},
         {"crop", t.crop},               {"lr0", t.lr0},
         {"decay_factor", t.decay_factor}, {"decay_every", t.decay_every},
         {"alpha", t.loss.alpha},        {"beta", t.loss.beta},
         {"gamma", t.loss.gamma},        {"charbonnier_eps", t.loss.charbonnier_eps},
         {"adam_beta1", t.adam.beta1},   {"adam_beta2", t.adam.beta2},
         {"adam_eps", t.adam.eps},       {"seed", t.seed},
         {"augment", t.augment}};
  j["max_steps"] = t.max_steps ? json(*t.max_steps) : json(nullptr);
  if (t.online_noise) {
    json n;
    to_json(n, *t.online_noise);
    j["online_noise"] = n;
  } else {
    j["online_noise"] = nullptr;
  }
  return j;
}

}  // namespace

RunConfig run_config_from_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  try {
    jsonio::reject_unknown(j, {"preset", "network", "train"}, "config");
    RunConfig rc = preset(j.value("preset", std::string("desk")));
    if (j.contains("network")) arch::from_json(j.at("network"), rc.network);
    if (j.contains("train")) apply_train(j.at("train"), rc.train);
    rc.network.validate();
    rc.train.validate();
    return rc;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_config_from_text(ss.str());
}

std::string to_text(const RunConfig& cfg) {
  json net;
  arch::to_json(net, cfg.network);
  return json{{"network", net}, {"train", train_json(cfg.train)}}.dump(2);
}

}  // namespace scanet::train
