#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scanet/tensor/ops.hpp"
#include "scanet/tensor/random.hpp"
#include "scanet/tensor/serialize.hpp"
#include "scanet/tensor/tensor.hpp"

using namespace scanet;

TEST_CASE("shape basics") {
  const Shape s{2, 3, 4, 5};
  CHECK(s.numel() == 120);
  CHECK(s.plane() == 20);
  CHECK(s.to_string() == "[2,3,4,5]");
  CHECK_THROWS_AS(Tensor::from_data(s, std::vector<float>(7)), ShapeError);
}

TEST_CASE("elementwise values and shape errors") {
  const Tensor a = Tensor::from_data({1, 1, 1, 3}, {1, 2, 3});
  const Tensor b = Tensor::from_data({1, 1, 1, 3}, {4, 5, 6});
  const Tensor c = add(a, b);
  CHECK(c.data()[2] == 9.0f);
  CHECK(mul(a, b).data()[1] == 10.0f);
  CHECK(sub(a, b).data()[0] == -3.0f);
  CHECK(sigmoid(Tensor::scalar(0.0f)).item() == 0.5f);
  CHECK(relu(Tensor::from_data({1, 1, 1, 2}, {-1, 2})).data()[0] == 0.0f);
  CHECK_THROWS_AS(add(a, Tensor::zeros({1, 1, 3, 1})), ShapeError);
  CHECK_THROWS_AS(sqrt(Tensor::scalar(-1.0f)), std::domain_error);
}

TEST_CASE("backward of x*x sums to 2x") {
  Tensor64 x = Tensor64::from_data({1, 1, 2, 2}, {1, -2, 3, 0.5}, true);
  sum(mul(x, x)).backward();
  REQUIRE(x.has_grad());
  for (std::size_t i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(2 * x.data()[i]));
}

TEST_CASE("diamond graph visits shared node once") {
  Tensor64 a = Tensor64::scalar(3.0, true);
  const Tensor64 y = add(mul(a, a), a);  // dy/da = 2a + 1
  y.backward();
  CHECK(a.grad()[0] == 7.0);
}

TEST_CASE("leaf gradients accumulate across backward calls") {
  Tensor64 a = Tensor64::scalar(2.0, true);
  mul_scalar(a, 3.0).backward();
  mul_scalar(a, 3.0).backward();
  CHECK(a.grad()[0] == 6.0);
  a.zero_grad();
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("no-grad guard drops history") {
  Tensor a = Tensor::scalar(1.0f, true);
  {
    NoGradGuard g;
    CHECK_FALSE(mul(a, a).requires_grad());
  }
  CHECK(mul(a, a).requires_grad());
}

TEST_CASE("hypot subgradient is zero at the origin") {
  Tensor64 a = Tensor64::scalar(0.0, true), b = Tensor64::scalar(0.0, true);
  const Tensor64 h = hypot(a, b);
  CHECK(h.item() == 0.0);
  h.backward();
  CHECK(a.grad()[0] == 0.0);
  CHECK(b.grad()[0] == 0.0);
}

TEST_CASE("central difference replicates the border") {
  const Tensor x = Tensor::from_data({1, 1, 1, 4}, {1, 2, 4, 8});
  const Tensor d = central_difference(x, Axis::cols);
  CHECK(d.data()[0] == 1.0f);  // x1 - x0
  CHECK(d.data()[1] == 3.0f);  // x2 - x0
  CHECK(d.data()[2] == 6.0f);
  CHECK(d.data()[3] == 4.0f);  // x3 - x2
}

TEST_CASE("mean of large constant tensor is exact") {
  const Tensor x = Tensor::full({4, 3, 64, 64}, 0.1f);
  CHECK(mean(x).item() == 0.1f);
}

TEST_CASE("piecewise replay pins relu branches") {
  Tensor64 x = Tensor64::from_data({1, 1, 1, 2}, {-1e-9, 1e-9});
  PiecewiseReplay::Session session;
  const Tensor64 first = relu(x);
  session.start_replay();
  x.mutable_data()[0] = 1.0;   // would be active without replay
  x.mutable_data()[1] = -1.0;  // would be inactive
  session.rewind();
  const Tensor64 again = relu(x);
  CHECK(again.data()[0] == 0.0);
  CHECK(again.data()[1] == -1.0);
}

TEST_CASE("tensor serialization round-trips and rejects garbage") {
  const Tensor t = Tensor::from_data({1, 2, 1, 3}, {0.5f, -1.f, 3.25f, 1e-7f, 0.f, 42.f});
  std::stringstream ss;
  write_tensor(ss, t);
  const Tensor back = read_tensor(ss);
  CHECK(back.shape() == t.shape());
  for (std::size_t i = 0; i < 6; ++i) CHECK(back.data()[i] == t.data()[i]);
  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS((void)read_tensor(bad), FormatError);
  std::string bytes = [&] {
    std::stringstream s2;
    write_tensor(s2, t);
    return s2.str();
  }();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 2));
  CHECK_THROWS_AS((void)read_tensor(truncated), FormatError);
}

TEST_CASE("counter-based random draws are pure") {
  CHECK(random::bits(1, 2, 3) == random::bits(1, 2, 3));
  CHECK(random::bits(1, 2, 3) != random::bits(1, 2, 4));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = random::uniform(7, 0, i);
    CHECK((u > 0.0 && u < 1.0));
    CHECK(random::below(7, 0, i, 5) < 5);
  }
  random::Stream s(3, 4);
  const auto first = s.below(100);
  random::Stream t(3, 4);
  CHECK(t.below(100) == first);
}

TEST_CASE("cast and clone copy values without history") {
  Tensor a = Tensor::from_data({1, 1, 1, 2}, {1.5f, -2.f}, true);
  const Tensor64 d = a.cast<double>();
  CHECK(d.data()[1] == -2.0);
  const Tensor c = a.clone();
  CHECK_FALSE(c.requires_grad());
  CHECK(c.data()[0] == 1.5f);
}
