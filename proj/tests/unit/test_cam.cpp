#include <doctest.h>

#include "scanet/cam/cam.hpp"
#include "scanet/tensor/ops.hpp"
#include "scanet/tensor/random.hpp"

using namespace scanet;

namespace {

Tensor rand_image(Shape s, std::uint64_t stream) {
  std::vector<float> v(s.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = float(random::uniform(3, stream, i)) - 0.5f;
  return Tensor::from_data(s, std::move(v));
}

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

cam::CamConfig config(std::size_t c) {
  cam::CamConfig k;
  k.channels = c;
  k.ca_reduction = 4;
  return k;
}

}  // namespace

TEST_CASE("sparse module emits c*s + c channels in intrinsic-first order") {
  for (std::size_t c : {4, 8, 16}) {
    for (std::size_t s : {1, 2, 3}) {
      nn::ParameterSet<float> set;
      nn::ParamFactory<float> f(set, 1);
      cam::CamConfig k = config(c * (s + 1));
      k.sparse_ratio = s;
      const cam::SparseModule<float> sm(f, "sm", 5, c * (s + 1), k);
      const Tensor x = rand_image({1, 5, 6, 6}, c * 10 + s);
      const Tensor y = sm(x);
      CHECK(y.shape().c == c * s + c);
      CHECK(sm.intrinsic_channels() == c);
      const Tensor intrinsic = relu(nn::conv2d(x, sm.primary));
      CHECK(std::equal(intrinsic.data().begin(), intrinsic.data().end(), y.data().begin()));
    }
  }
}

TEST_CASE("sparse module rejects indivisible widths") {
  nn::ParameterSet<float> set;
  nn::ParamFactory<float> f(set, 1);
  cam::CamConfig k = config(8);
  CHECK_THROWS_AS(cam::SparseModule<float>(f, "sm", 8, 10, k), std::invalid_argument);
}

TEST_CASE("cam block toggles") {
  nn::ParameterSet<float> set;
  nn::ParamFactory<float> f(set, 2);
  cam::CamConfig k = config(8);
  const Tensor x = rand_image({2, 8, 6, 6}, 1);

  k.enable_dense = false;
  k.enable_sparse = false;
  const cam::CamBlock<float> identity(f, "none", k);
  CHECK(same(identity(x), x));

  k.enable_dense = true;
  const cam::CamBlock<float> dense_only(f, "dense", k);
  CHECK(same(dense_only(x), dense_only.dense(x)));

  k.enable_sparse = true;
  const cam::CamBlock<float> both(f, "both", k);
  const Tensor z = both.dense(x);
  CHECK(same(both(x), add(z, (*both.sparse)(z))));
}

TEST_CASE("attention gates lie in (0,1) with the documented shapes") {
  nn::ParameterSet<float> set;
  nn::ParamFactory<float> f(set, 3);
  const cam::CamConfig k = config(8);
  const cam::SpatialAttention<float> sa(f, "m", k);
  const cam::ChannelAttention<float> ca(f, "m", k);
  const Tensor u = rand_image({2, 8, 5, 7}, 4);
  const Tensor a = sa.attention_map(u);
  const Tensor g = ca.gates(u);
  CHECK(a.shape() == Shape{2, 1, 5, 7});
  CHECK(g.shape() == Shape{2, 8, 1, 1});
  for (float v : a.data()) CHECK((v > 0.0f && v < 1.0f));
  for (float v : g.data()) CHECK((v > 0.0f && v < 1.0f));
  CHECK(sa(u).shape() == u.shape());
  CHECK(ca(u).shape() == u.shape());
  CHECK_THROWS_AS((void)sa(rand_image({1, 4, 5, 5}, 5)), ShapeError);
}

TEST_CASE("dense module is residual in its input") {
  nn::ParameterSet<float> set;
  nn::ParamFactory<float> f(set, 4);
  const cam::DenseModule<float> dm(f, "dm", config(8));
  // With the fuse conv zeroed the module reduces to the identity.
  for (float& v : set.at("dm.fuse.weight").mutable_data()) v = 0.0f;
  const Tensor x = rand_image({1, 8, 4, 4}, 6);
  CHECK(same(dm(x), x));
}

TEST_CASE("cam config validation") {
  cam::CamConfig k = config(8);
  k.ca_reduction = 3;
  CHECK_THROWS_AS(k.validate(), std::invalid_argument);
  k = config(10);  // 10 % (3 + 1) != 0
  k.ca_reduction = 2;
  CHECK_THROWS_AS(k.validate(), std::invalid_argument);
  k.enable_sparse = false;
  CHECK_NOTHROW(k.validate());
  k.sa_kernel = 4;
  CHECK_THROWS_AS(k.validate(), std::invalid_argument);
}
