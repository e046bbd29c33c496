#include <doctest.h>

#include <cmath>

#include "scanet/nn/conv.hpp"
#include "scanet/nn/cost_recorder.hpp"
#include "scanet/nn/parameters.hpp"
#include "scanet/nn/pooling.hpp"
#include "scanet/tensor/ops.hpp"
#include "scanet/tensor/random.hpp"

using namespace scanet;
using nn::ConvGeometry;

namespace {

Tensor64 rand64(Shape s, std::uint64_t stream) {
  std::vector<double> v(s.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 2 * random::uniform(11, stream, i) - 1;
  return Tensor64::from_data(s, std::move(v));
}

// Direct seven-loop zero-padded cross-correlation.
std::vector<double> naive_conv(const Tensor64& x, const Tensor64& w, const Tensor64& b,
                               const ConvGeometry& g) {
  const Shape s = x.shape();
  const Shape o = g.output_shape(s);
  const std::size_t cin_g = g.in_channels / g.groups, cout_g = g.out_channels / g.groups;
  std::vector<double> out(o.numel());
  for (std::size_t n = 0; n < o.n; ++n)
    for (std::size_t co = 0; co < o.c; ++co)
      for (std::size_t y = 0; y < o.h; ++y)
        for (std::size_t xx = 0; xx < o.w; ++xx) {
          double acc = b.data()[co];
          const std::size_t grp = co / cout_g;
          for (std::size_t ci = 0; ci < cin_g; ++ci)
            for (std::size_t ky = 0; ky < g.kernel; ++ky)
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const long iy = long(y * g.stride + ky) - long(g.padding);
                const long ix = long(xx * g.stride + kx) - long(g.padding);
                if (iy < 0 || ix < 0 || iy >= long(s.h) || ix >= long(s.w)) continue;
                acc += w.at(co, ci, ky, kx) * x.at(n, grp * cin_g + ci, iy, ix);
              }
          out[((n * o.c + co) * o.h + y) * o.w + xx] = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("conv2d matches the naive loop") {
  const ConvGeometry cases[] = {
      nn::conv_geometry(3, 4, 3),    nn::conv_geometry(4, 3, 1),       nn::conv_geometry(3, 5, 3, 2),
      nn::conv_geometry(4, 6, 3, 1, 2), nn::conv_geometry(6, 6, 3, 1, 6), nn::conv_geometry(2, 1, 7),
      nn::conv_geometry(8, 8, 5, 1, 8)};
  std::uint64_t stream = 0;
  for (const auto& g : cases) {
    const Tensor64 x = rand64({2, g.in_channels, 9, 8}, stream++);
    const Tensor64 w = rand64({g.out_channels, g.in_channels / g.groups, g.kernel, g.kernel}, stream++);
    const Tensor64 b = rand64({1, g.out_channels, 1, 1}, stream++);
    const Tensor64 y = nn::conv2d(x, w, b, g);
    const auto ref = naive_conv(x, w, b, g);
    REQUIRE(y.numel() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv geometry validation and cost formula") {
  CHECK_THROWS_AS(nn::conv_geometry(3, 4, 3, 1, 2).validate(), std::invalid_argument);
  CHECK(nn::conv_geometry(1, 1, 1).macs(Shape{1, 1, 4, 4}) == 16);
  CHECK(nn::conv_geometry(64, 64, 3).macs(Shape{1, 64, 256, 256}) == 2415919104ULL);
  CHECK(nn::conv_geometry(64, 64, 3).param_count() == 64 * 64 * 9 + 64);
  const Shape out = nn::conv_geometry(3, 8, 3, 2).output_shape(Shape{1, 3, 16, 16});
  CHECK(out == Shape{1, 8, 8, 8});
  CHECK_THROWS_AS((void)nn::conv_geometry(4, 8, 3).output_shape(Shape{1, 3, 8, 8}), ShapeError);
}

TEST_CASE("conv2d records named costs") {
  nn::ParameterSet<float> set;
  nn::ParamFactory<float> f(set, 1);
  const auto p = f.conv("layer", nn::conv_geometry(3, 4, 3));
  nn::CostRecorder rec;
  (void)nn::conv2d(Tensor::zeros({1, 3, 5, 5}), p);
  REQUIRE(rec.rows().size() == 1);
  CHECK(rec.rows()[0].name == "layer");
  CHECK(rec.rows()[0].macs == 25 * 4 * 3 * 9);
}

TEST_CASE("parameter init is keyed by name and bounded by 1/sqrt(fan_in)") {
  nn::ParameterSet<float> a, b;
  nn::ParamFactory<float> fa(a, 5), fb(b, 5);
  (void)fa.conv("x", nn::conv_geometry(16, 8, 3));
  (void)fa.conv("y", nn::conv_geometry(8, 8, 1));
  (void)fb.conv("y", nn::conv_geometry(8, 8, 1));  // different construction order
  (void)fb.conv("x", nn::conv_geometry(16, 8, 3));
  const auto wa = a.at("x.weight").data(), wb = b.at("x.weight").data();
  CHECK(std::equal(wa.begin(), wa.end(), wb.begin()));
  const float bound = 1.0f / std::sqrt(16.0f * 9.0f);
  for (float v : wa) CHECK(std::abs(v) <= bound);
  for (float v : a.at("x.bias").data()) CHECK(v == 0.0f);
  CHECK(a.at("x.weight").shape() == Shape{8, 16, 3, 3});
  CHECK(a.at("x.bias").shape() == Shape{1, 8, 1, 1});
  CHECK_THROWS_AS((void)fa.conv("x", nn::conv_geometry(16, 8, 3)), std::invalid_argument);
  CHECK(a.element_count() == 8 * 16 * 9 + 8 + 64 + 8);
}

TEST_CASE("pooling ops") {
  const Tensor x = Tensor::from_data({1, 2, 1, 2}, {1, 5, 3, 5});
  CHECK(nn::global_avg_pool(x).data()[0] == 3.0f);
  CHECK(nn::channel_avg(x).data()[0] == 2.0f);
  const Tensor m = nn::channel_max(x);
  CHECK(m.data()[0] == 3.0f);
  CHECK(m.data()[1] == 5.0f);
  const Tensor u = nn::upsample_nearest(Tensor::from_data({1, 1, 1, 2}, {1, 2}), 2);
  CHECK(u.shape() == Shape{1, 1, 2, 4});
  CHECK(u.data()[5] == 1.0f);
}

TEST_CASE("channel max routes ties to the lowest channel") {
  Tensor64 x = Tensor64::from_data({1, 3, 1, 1}, {2, 2, 1}, true);
  sum(nn::channel_max(x)).backward();
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("downsample rejects odd extents") {
  nn::ParameterSet<float> set;
  nn::ParamFactory<float> f(set, 1);
  const auto p = f.conv("d", nn::conv_geometry(2, 4, 3, 2));
  CHECK(nn::downsample_stride2(Tensor::zeros({1, 2, 8, 6}), p).shape() == Shape{1, 4, 4, 3});
  CHECK_THROWS_AS((void)nn::downsample_stride2(Tensor::zeros({1, 2, 7, 6}), p), ShapeError);
}
