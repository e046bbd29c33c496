#include <doctest.h>
#include <png.h>

#include <cmath>
#include <cstring>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "scanet/data/augment.hpp"
#include "scanet/data/dataset.hpp"
#include "scanet/data/image_io.hpp"
#include "scanet/data/noise.hpp"
#include "scanet/loss/metrics.hpp"

using namespace scanet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("scanet_data_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

Tensor byte_image(std::size_t h, std::size_t w) {
  std::vector<float> v(3 * h * w);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = float((i * 37) % 256) / 255.0f;
  return Tensor::from_data({1, 3, h, w}, std::move(v));
}

void write_gray_png(const fs::path& p) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = 4;
  img.height = 4;
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> bytes(16, 100);
  REQUIRE(png_image_write_to_file(&img, p.c_str(), 0, bytes.data(), 0, nullptr));
}

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("png round trip is byte exact") {
  TempDir dir;
  const Tensor img = byte_image(5, 7);
  data::save_image(img, dir.path / "a.png");
  const Tensor back = data::load_image(dir.path / "a.png");
  CHECK(same(back, img));
  data::save_image(back, dir.path / "b.png");
  std::ifstream fa(dir.path / "a.png", std::ios::binary), fb(dir.path / "b.png", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
}

TEST_CASE("byte values map to v/255 and quantize back") {
  CHECK(data::quantize(128.0f / 255.0f) == 128);
  CHECK(data::quantize(-0.5f) == 0);
  CHECK(data::quantize(2.0f) == 255);
  TempDir dir;
  data::save_image(Tensor::full({1, 3, 2, 2}, 128.0f / 255.0f), dir.path / "c.png");
  const Tensor back = data::load_image(dir.path / "c.png");
  for (float v : back.data()) CHECK(v == 128.0f / 255.0f);
}

TEST_CASE("non-RGB and missing files are rejected") {
  TempDir dir;
  write_gray_png(dir.path / "g.png");
  CHECK_THROWS_AS((void)data::load_image(dir.path / "g.png"), data::ImageError);
  CHECK_THROWS_AS((void)data::load_image(dir.path / "none.png"), data::ImageError);
  CHECK_THROWS_AS(data::save_image(Tensor::zeros({1, 2, 2, 2}), dir.path / "x.png"), data::ImageError);
}

TEST_CASE("noise statistics and determinism") {
  const Tensor clean = Tensor::full({1, 1, 1000, 1000}, 0.5f);
  data::NoiseSpec spec;
  spec.sigma = 0.0;
  CHECK(same(data::add_noise(clean, spec), clean));

  spec.sigma = 25.0 / 255.0;
  spec.seed = 3;
  const Tensor noisy = data::add_noise(clean, spec);
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < noisy.numel(); ++i) {
    const double d = noisy.data()[i] - 0.5;
    sum += d;
    sq += d * d;
  }
  const double n = double(noisy.numel());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  CHECK(std::abs(sd / spec.sigma - 1.0) < 0.01);
  CHECK(std::abs(sum / n) < 3 * spec.sigma / std::sqrt(n) + 1e-6);

  CHECK(same(data::add_noise(clean, spec), noisy));
  CHECK_FALSE(same(data::add_noise(clean, spec, 1), noisy));
  spec.seed = 4;
  CHECK_FALSE(same(data::add_noise(clean, spec), noisy));
}

TEST_CASE("poisson-gaussian variance grows with intensity") {
  data::NoiseSpec spec;
  spec.kind = data::NoiseKind::poisson_gaussian;
  spec.sigma = 0.01;
  spec.poisson_scale = 0.01;
  auto var_at = [&](float level) {
    const Tensor c = Tensor::full({1, 1, 300, 300}, level);
    const Tensor y = data::add_noise(c, spec);
    double sq = 0;
    for (float v : y.data()) sq += (v - level) * (v - level);
    return sq / double(c.numel());
  };
  CHECK(var_at(0.0f) == doctest::Approx(1e-4).epsilon(0.05));
  CHECK(var_at(0.9f) == doctest::Approx(1e-4 + 0.009).epsilon(0.05));
  CHECK(data::parse_noise_kind(data::to_string(spec.kind)) == spec.kind);
  CHECK_THROWS_AS((void)data::parse_noise_kind("speckle"), std::invalid_argument);
}

TEST_CASE("flips and rotations compose to identity") {
  const Tensor x = byte_image(4, 6);
  CHECK(same(data::hflip(data::hflip(x)), x));
  CHECK(same(data::vflip(data::vflip(x)), x));
  Tensor r = x;
  for (int i = 0; i < 4; ++i) r = data::rot90(r, 1);
  CHECK(same(r, x));
  CHECK(data::rot90(x, 1).shape() == Shape{1, 3, 6, 4});
  CHECK(same(data::rot90(x, 2), data::hflip(data::vflip(x))));
  // Counter-clockwise: the top-right pixel moves to the top-left.
  CHECK(data::rot90(x, 1).at(0, 0, 0, 0) == x.at(0, 0, 0, 5));
}

TEST_CASE("crop and augmentation keep the pair aligned") {
  data::ImagePair pair{byte_image(16, 20), byte_image(16, 20), "p"};
  std::vector<float> shifted(pair.clean.data().begin(), pair.clean.data().end());
  for (auto& v : shifted) v += 0.1f;
  pair.noisy = Tensor::from_data(pair.clean.shape(), shifted);
  const double full = loss::psnr(pair.noisy, pair.clean);
  for (std::uint64_t s = 0; s < 20; ++s) {
    random::Stream rng(11, s);
    const auto c = data::random_crop_pair(pair, 8, rng);
    CHECK(c.clean.shape() == Shape{1, 3, 8, 8});
    CHECK(loss::psnr(c.noisy, c.clean) == doctest::Approx(full));
    const auto a = data::augment_pair(c, rng);
    CHECK(loss::psnr(a.noisy, a.clean) == doctest::Approx(full));
  }
  random::Stream a(1, 2), b(1, 2);
  CHECK(same(data::random_crop_pair(pair, 8, a).clean, data::random_crop_pair(pair, 8, b).clean));
  random::Stream rng(0, 0);
  CHECK_THROWS((void)data::random_crop_pair(pair, 17, rng));
  data::ImagePair bad{byte_image(4, 4), byte_image(4, 5), "bad"};
  CHECK_THROWS_AS(bad.validate(), ShapeError);
}

TEST_CASE("pair directory scanning") {
  TempDir dir;
  CHECK_THROWS_AS((void)data::scan_pair_dir(dir.path), data::DatasetError);
  fs::create_directories(dir.path / "noisy");
  fs::create_directories(dir.path / "clean");
  CHECK_THROWS_AS((void)data::scan_pair_dir(dir.path), data::DatasetError);
  const Tensor img = byte_image(4, 4);
  for (const char* n : {"b.png", "a.png"}) {
    data::save_image(img, dir.path / "noisy" / n);
    data::save_image(img, dir.path / "clean" / n);
  }
  data::save_image(img, dir.path / "noisy" / "orphan.png");
  const auto scan = data::scan_pair_dir(dir.path);
  REQUIRE(scan.pairs.size() == 2);
  CHECK(scan.pairs[0].id == "a.png");
  CHECK(scan.warnings.size() == 1);
  const auto pairs = data::load_pairs(scan.pairs);
  CHECK(same(pairs[1].noisy, img));

  data::save_image(byte_image(4, 5), dir.path / "clean" / "a.png");
  CHECK_THROWS((void)data::load_pair(scan.pairs[0]));
}

TEST_CASE("synthetic images are deterministic and in range") {
  const Tensor a = data::synthetic_image(32, 32, 1, 0);
  CHECK(same(a, data::synthetic_image(32, 32, 1, 0)));
  CHECK_FALSE(same(a, data::synthetic_image(32, 32, 1, 1)));
  for (float v : a.data()) CHECK((v >= 0.05f && v <= 0.95f));
  const auto pairs = data::synthetic_pairs(3, 16, 2);
  CHECK(pairs.size() == 3);
  CHECK(same(pairs[2].noisy, pairs[2].clean));
}
