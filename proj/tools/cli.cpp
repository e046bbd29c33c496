#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "scanet/arch/checkpoint.hpp"
#include "scanet/arch/gradient_map.hpp"
#include "scanet/data/dataset.hpp"
#include "scanet/data/image_io.hpp"
#include "scanet/data/noise.hpp"
#include "scanet/profile/ablation.hpp"
#include "scanet/profile/benchmark.hpp"
#include "scanet/profile/cost.hpp"
#include "scanet/profile/gradcheck.hpp"
#include "scanet/tensor/random.hpp"
#include "scanet/train/config.hpp"
#include "scanet/train/trainer.hpp"

namespace scanet::cli {

namespace fs = std::filesystem;

namespace {

std::pair<std::size_t, std::size_t> parse_hw(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) {
      const auto v = std::stoul(text);
      return {v, v};
    }
    return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("bad size '" + text + "', expected HxW");
  }
}

std::vector<data::ImagePair> load_dataset(const fs::path& root, std::ostream& err) {
  const auto scan = data::scan_pair_dir(root);
  for (const auto& w : scan.warnings) err << "warning: " << w << '\n';
  return data::load_pairs(scan.pairs);
}

/// Held-out noisy/clean pairs from a disjoint synthetic stream with fixed noise.
std::vector<data::ImagePair> synthetic_validation(std::size_t count, std::size_t size,
                                                  double sigma, std::uint64_t seed) {
  auto pairs = data::synthetic_pairs(count, size, random::mix(seed, 0xE7A1));
  data::NoiseSpec spec;
  spec.sigma = sigma;
  spec.seed = random::mix(seed, 0xE7A2);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].noisy = data::add_noise(pairs[i].clean, spec, i);
  return pairs;
}

struct TrainArgs {
  std::string config;
  std::string preset = "desk";
  std::string data;
  std::optional<double> synthetic;
  std::size_t synthetic_count = 64;
  std::size_t synthetic_size = 64;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> crop;
  std::optional<double> lr;
  std::string out = "run";
  std::string resume;
  std::size_t print_every = 10;
};

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  train::RunConfig rc = a.config.empty() ? train::preset(a.preset) : train::load_run_config(a.config);
  auto& t = rc.train;
  if (a.seed) t.seed = *a.seed;
  if (a.steps) t.max_steps = *a.steps;
  if (a.epochs) t.epochs = *a.epochs;
  if (a.batch) t.batch_size = *a.batch;
  if (a.crop) t.crop = *a.crop;
  if (a.lr) t.lr0 = *a.lr;

  std::vector<data::ImagePair> dataset;
  if (a.synthetic) {
    data::NoiseSpec spec;
    spec.sigma = *a.synthetic / 255.0;
    t.online_noise = spec;
    dataset = data::synthetic_pairs(a.synthetic_count, a.synthetic_size, t.seed);
  } else if (!a.data.empty()) {
    dataset = load_dataset(a.data, err);
  } else {
    throw CLI::RequiredError("--data or --synthetic");
  }
  rc.network.validate();
  t.validate();

  const fs::path dir = a.out;
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << train::to_text(rc) << '\n';
  }
  train::Trainer trainer(rc.network, t, std::move(dataset));
  const bool resuming = !a.resume.empty();
  if (resuming) trainer.resume(arch::load_checkpoint(a.resume));
  std::ofstream log(dir / "train_log.csv", resuming ? std::ios::app : std::ios::trunc);
  trainer.set_log(&log, !resuming || fs::file_size(dir / "train_log.csv") == 0);
  trainer.set_checkpoint_dir(dir);
  const std::uint64_t total = trainer.total_steps();
  trainer.on_step([&](const train::StepLog& s) {
    if (a.print_every && (s.step % a.print_every == 0 || s.step == total)) {
      out << "step " << s.step << "/" << total << "  loss " << s.loss.total << "  psnr " << s.psnr
          << " dB\n" << std::flush;
    }
  });
  trainer.run();
  out << "wrote " << (dir / "final.ckpt").string() << " and " << (dir / "train_log.csv").string() << '\n';
  return 0;
}

void write_csv_or_stdout(const std::string& path, std::ostream& out,
                         const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write(f);
}

}  // namespace

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SCANet image denoiser: training, inference and profiling"};
  app.name("scanet");
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model on a paired dataset or synthetic noise");
  train->add_option("--config", train_args.config, "JSON run config")->check(CLI::ExistingFile);
  train->add_option("--preset", train_args.preset, "preset when no config is given")
      ->check(CLI::IsMember({"desk", "paper"}));
  auto* data_opt = train->add_option("--data", train_args.data, "dataset root with noisy/ and clean/")
                       ->check(CLI::ExistingDirectory);
  auto* synth_opt = train->add_option("--synthetic", train_args.synthetic,
                                      "train on procedural images with AWGN of this sigma (0-255 scale)")
                        ->check(CLI::NonNegativeNumber);
  data_opt->excludes(synth_opt);
  train->add_option("--synthetic-count", train_args.synthetic_count, "number of synthetic images");
  train->add_option("--synthetic-size", train_args.synthetic_size, "synthetic image side length");
  train->add_option("--seed", train_args.seed, "random seed");
  train->add_option("--steps", train_args.steps, "stop after this many optimizer steps");
  train->add_option("--epochs", train_args.epochs);
  train->add_option("--batch", train_args.batch);
  train->add_option("--crop", train_args.crop);
  train->add_option("--lr", train_args.lr, "initial learning rate");
  train->add_option("--out", train_args.out, "output directory for checkpoints and logs");
  train->add_option("--resume", train_args.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--print-every", train_args.print_every, "progress interval in steps (0 = silent)");

  std::string ckpt, input, output, data_dir, csv_out, config_path, hw = "256x256";
  auto* denoise = app.add_subcommand("denoise", "denoise one PNG");
  denoise->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  denoise->add_option("input", input)->required()->check(CLI::ExistingFile);
  denoise->add_option("output", output)->required();

  auto* gradmap = app.add_subcommand("gradmap", "write the normalized gradient map of a PNG");
  gradmap->add_option("input", input)->required()->check(CLI::ExistingFile);
  gradmap->add_option("output", output)->required();

  auto* eval = app.add_subcommand("eval", "per-image PSNR/SSIM of a checkpoint on a dataset");
  eval->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", csv_out, "CSV path (stdout if omitted)");

  bool csv = false;
  auto* flops = app.add_subcommand("flops", "analytic per-layer MACs/FLOPs/params");
  flops->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
  flops->add_option("--hw", hw, "input size HxW")
      ->check(CLI::Validator(
          [](std::string& v) {
            try {
              (void)parse_hw(v);
              return std::string();
            } catch (const std::exception& e) {
              return std::string(e.what());
            }
          },
          "HxW"));
  flops->add_flag("--csv", csv, "emit CSV instead of a table");
  std::size_t bench_repeats = 0;
  flops->add_option("--bench", bench_repeats, "also time this many forward passes (>= 3)");

  profile::GradcheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit of every op and block");
  gradcheck->add_option("--seed", gc.seed);
  gradcheck->add_option("--max-coords", gc.max_coords_per_leaf, "sampled elements per tensor");
  gradcheck->add_option("--rtol", gc.rtol);

  std::size_t ab_steps = 200, ab_count = 32, ab_size = 64, ab_val = 4, ab_hw = 256, ab_bench = 64,
              ab_repeats = 3;
  double ab_sigma = 25.0;
  std::uint64_t ab_seed = 0;
  std::optional<std::size_t> ab_channels;
  auto* ablate = app.add_subcommand("ablate", "structure x component grid at desk scale");
  ablate->add_option("--config", config_path, "JSON run config for the base network/training")
      ->check(CLI::ExistingFile);
  ablate->add_option("--steps", ab_steps, "training steps per configuration");
  ablate->add_option("--synthetic", ab_sigma, "AWGN sigma (0-255 scale)");
  ablate->add_option("--count", ab_count, "synthetic training images");
  ablate->add_option("--size", ab_size, "synthetic image side length");
  ablate->add_option("--val-count", ab_val, "held-out validation images");
  ablate->add_option("--hw", ab_hw, "side length for MAC counts");
  ablate->add_option("--bench-hw", ab_bench, "side length for runtime");
  ablate->add_option("--repeats", ab_repeats, "timed forward passes per configuration");
  ablate->add_option("--base-channels", ab_channels);
  ablate->add_option("--seed", ab_seed);
  ablate->add_option("--out", csv_out, "CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*train) return run_train(train_args, out, err);

    if (*denoise) {
      const auto model = arch::model_from_checkpoint(arch::load_checkpoint(ckpt));
      data::save_image(train::denoise_image(model, data::load_image(input)), output);
      return 0;
    }

    if (*gradmap) {
      const Tensor g = arch::extract_gradient_map(data::load_image(input));
      const auto v = g.data();
      const float peak = v.empty() ? 0.0f : *std::max_element(v.begin(), v.end());
      std::vector<float> scaled(v.begin(), v.end());
      for (float& x : scaled) x = peak > 0.0f ? x / peak : 0.0f;
      data::save_image(Tensor::from_data(g.shape(), std::move(scaled)), output);
      return 0;
    }

    if (*eval) {
      const auto ck = arch::load_checkpoint(ckpt);
      const auto table = train::evaluate(ck, load_dataset(data_dir, err));
      write_csv_or_stdout(csv_out, out, [&](std::ostream& o) { table.write_csv(o); });
      return 0;
    }

    if (*flops) {
      const arch::NetworkConfig cfg =
          config_path.empty() ? arch::NetworkConfig{} : train::load_run_config(config_path).network;
      const auto [h, w] = parse_hw(hw);
      const auto report = profile::count_costs(cfg, h, w);
      if (csv) {
        report.write_csv(out);
      } else {
        report.print(out);
      }
      if (bench_repeats) profile::benchmark_forward(cfg, h, w, bench_repeats).print(out);
      return 0;
    }

    if (*gradcheck) {
      const auto results = profile::run_audit_suite(gc, &out);
      const auto failed = std::count_if(results.begin(), results.end(), [](const auto& c) { return !c.passed; });
      out << results.size() - failed << "/" << results.size() << " gradient checks passed\n";
      return failed ? 1 : 0;
    }

    if (*ablate) {
      profile::AblationOptions opts;
      if (!config_path.empty()) {
        const auto rc = train::load_run_config(config_path);
        opts.base = rc.network;
        opts.train = rc.train;
      } else {
        opts.train = train::preset("desk").train;
      }
      if (ab_channels) opts.base.base_channels = *ab_channels;
      opts.train.seed = ab_seed;
      opts.train.max_steps = ab_steps;
      data::NoiseSpec spec;
      spec.sigma = ab_sigma / 255.0;
      opts.train.online_noise = spec;
      opts.train_set = data::synthetic_pairs(ab_count, ab_size, ab_seed);
      opts.validation_set = synthetic_validation(ab_val, ab_size, ab_sigma / 255.0, ab_seed);
      opts.cost_hw = ab_hw;
      opts.bench_hw = ab_bench;
      opts.bench_repeats = ab_repeats;
      const auto rows = profile::run_ablation(opts, [&](const profile::AblationRow& r) {
        err << r.variant.label() << ": " << r.macs << " MACs, " << r.psnr << " dB\n";
      });
      write_csv_or_stdout(csv_out, out, [&](std::ostream& o) { profile::write_ablation_csv(o, rows); });
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace scanet::cli
