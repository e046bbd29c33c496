#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "cli.hpp"
#include "scanet/data/image_io.hpp"
#include "scanet/profile/cost.hpp"

using namespace scanet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "scanet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("scanet_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({"--bogus"}).code == 2);
  CHECK(run({"flops", "--hw", "abc"}).code == 2);
  CHECK(run({"denoise"}).code == 2);
}

TEST_CASE("gradmap of a constant image is black") {
  TempDir dir;
  data::save_image(Tensor::full({1, 3, 9, 7}, 0.4f), dir.path / "flat.png");
  const auto r = run({"gradmap", (dir.path / "flat.png").string(), (dir.path / "g.png").string()});
  REQUIRE(r.code == 0);
  const Tensor g = data::load_image(dir.path / "g.png");
  CHECK(g.shape() == Shape{1, 3, 9, 7});
  for (float v : g.data()) CHECK(v == 0.0f);
}

TEST_CASE("flops prints the analytic totals") {
  const auto r = run({"flops", "--hw", "64", "--csv"});
  REQUIRE(r.code == 0);
  const auto rep = profile::count_costs(arch::NetworkConfig{}, 64, 64);
  std::ostringstream expect;
  rep.write_csv(expect);
  CHECK(r.out.find(expect.str()) != std::string::npos);
}

TEST_CASE("bad checkpoints fail with 1") {
  TempDir dir;
  { std::ofstream(dir.path / "bad.ckpt") << "garbage"; }
  data::save_image(Tensor::full({1, 3, 4, 4}, 0.4f), dir.path / "in.png");
  const auto r = run({"denoise", "--checkpoint", (dir.path / "bad.ckpt").string(),
                      (dir.path / "in.png").string(), (dir.path / "out.png").string()});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("train then denoise and eval") {
  TempDir dir;
  const auto out = dir.path / "run";
  const auto t = run({"train", "--synthetic", "25", "--synthetic-count", "2", "--synthetic-size", "32",
                      "--steps", "2", "--batch", "1", "--crop", "32", "--print-every", "0",
                      "--out", out.string()});
  REQUIRE(t.code == 0);
  CHECK(fs::exists(out / "final.ckpt"));
  CHECK(fs::exists(out / "train_log.csv"));
  CHECK(fs::exists(out / "config.json"));

  data::save_image(Tensor::full({1, 3, 10, 13}, 0.4f), dir.path / "in.png");
  const auto d = run({"denoise", "--checkpoint", (out / "final.ckpt").string(),
                      (dir.path / "in.png").string(), (dir.path / "out.png").string()});
  REQUIRE(d.code == 0);
  CHECK(data::load_image(dir.path / "out.png").shape() == Shape{1, 3, 10, 13});

  fs::create_directories(dir.path / "set" / "noisy");
  fs::create_directories(dir.path / "set" / "clean");
  // SSIM needs planes of at least 11x11.
  data::save_image(Tensor::full({1, 3, 16, 13}, 0.4f), dir.path / "set" / "noisy" / "a.png");
  data::save_image(Tensor::full({1, 3, 16, 13}, 0.45f), dir.path / "set" / "clean" / "a.png");
  const auto e = run({"eval", "--checkpoint", (out / "final.ckpt").string(), "--data",
                      (dir.path / "set").string()});
  INFO(e.err);
  REQUIRE(e.code == 0);
  CHECK(e.out.find("a.png,") != std::string::npos);
}
