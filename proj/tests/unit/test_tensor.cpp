#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracle.hpp"
#include "shufflenet/error.hpp"
#include "shufflenet/tensor.hpp"

using namespace shufflenet;

namespace {

Tensor iota(Shape s) {
  Tensor t(s);
  std::iota(t.data().begin(), t.data().end(), 0.0f);
  return t;
}

Tensor channel_ids(int c, int hw = 2) {
  Tensor t(Shape{1, c, hw, hw});
  for (int k = 0; k < c; ++k)
    for (float& v : t.plane(0, k)) v = static_cast<float>(k);
  return t;
}

std::vector<int> channel_order(const Tensor& t) {
  std::vector<int> order;
  for (int k = 0; k < t.c(); ++k) order.push_back(static_cast<int>(t.at(0, k, 0, 0)));
  return order;
}

void check_close(const Tensor& got, const Tensor& want, double rel) {
  REQUIRE(got.shape() == want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double g = got.data()[i];
    const double w = want.data()[i];
    REQUIRE(std::abs(g - w) <= rel * std::max(1.0, std::abs(w)));
  }
}

}  // namespace

TEST_CASE("tensor rejects empty dimensions and mismatched buffers") {
  CHECK_THROWS_AS(Tensor(Shape{1, 0, 2, 2}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 2, 2}, std::vector<float>(3)), ShapeError);
  const Tensor t(Shape{2, 3, 4, 5}, 1.5f);
  CHECK(t.size() == 120);
  CHECK(t.at(1, 2, 3, 4) == 1.5f);
}

TEST_CASE("1x1 identity kernel copies the input") {
  std::mt19937_64 rng(1);
  const Tensor x = oracle::random_tensor({1, 3, 5, 4}, rng);
  Weights w;
  w.values = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(conv2d(x, w, ConvSpec::pointwise(3, 3)) == x);
}

TEST_CASE("depthwise 3x3 all-ones kernel counts window coverage") {
  const Tensor x(Shape{1, 2, 4, 4}, 1.0f);
  Weights w;
  w.values.assign(2 * 9, 1.0f);
  const Tensor y = conv2d(x, w, ConvSpec::depthwise(2, 3, 1));
  REQUIRE(y.shape() == Shape{1, 2, 4, 4});
  for (int c = 0; c < 2; ++c) {
    CHECK(y.at(0, c, 0, 0) == 4.0f);
    CHECK(y.at(0, c, 3, 3) == 4.0f);
    CHECK(y.at(0, c, 0, 3) == 4.0f);
    CHECK(y.at(0, c, 0, 1) == 6.0f);
    CHECK(y.at(0, c, 2, 0) == 6.0f);
    CHECK(y.at(0, c, 1, 1) == 9.0f);
    CHECK(y.at(0, c, 2, 2) == 9.0f);
  }
}

TEST_CASE("grouped strided conv matches the nested-loop oracle") {
  std::mt19937_64 rng(7);
  const ConvSpec spec{8, 8, 3, 3, 2, 1, 2};
  const Tensor x = oracle::random_tensor({1, 8, 6, 6}, rng);
  Weights w;
  w.values = oracle::random_values(spec.weight_count(), rng);
  check_close(conv2d(x, w, spec), oracle::conv(x, w, spec, false), 1e-5);
}

TEST_CASE("conv epilogue applies bias, scale/shift, then relu") {
  std::mt19937_64 rng(9);
  const ConvSpec spec{4, 6, 3, 3, 1, 1, 2};
  const Tensor x = oracle::random_tensor({2, 4, 5, 5}, rng);
  Weights w;
  w.values = oracle::random_values(spec.weight_count(), rng);
  w.bias = oracle::random_values(6, rng);
  w.scale_shift = ScaleShift{oracle::random_values(6, rng, 0.5f, 1.5f),
                             oracle::random_values(6, rng)};
  check_close(conv2d(x, w, spec, Activation::Relu), oracle::conv(x, w, spec, true), 1e-5);
}

TEST_CASE("conv rejects inconsistent specs") {
  const Tensor x(Shape{1, 6, 4, 4});
  Weights w;
  w.values.assign(100, 0.0f);
  CHECK_THROWS_AS(conv2d(x, w, ConvSpec::pointwise(6, 4, 4)), ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, ConvSpec::pointwise(5, 4)), ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, ConvSpec{6, 6, 7, 7, 1, 0, 1}), ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, ConvSpec::pointwise(6, 6)), ShapeError);  // too many weights
}

TEST_CASE("channel shuffle interleaves groups") {
  CHECK(channel_order(channel_shuffle(channel_ids(4), 2)) == std::vector<int>{0, 2, 1, 3});
  CHECK(channel_order(channel_shuffle(channel_ids(6), 3)) ==
        std::vector<int>{0, 2, 4, 1, 3, 5});
  const Tensor x = iota({2, 12, 3, 3});
  CHECK(channel_shuffle(x, 1) == x);
  CHECK(channel_shuffle(x, 12) == x);
  CHECK_THROWS_AS(channel_shuffle(x, 5), ShapeError);
  CHECK_THROWS_AS(channel_shuffle(x, 0), ShapeError);
}

TEST_CASE("channel shuffle inverse and oracle laws") {
  std::mt19937_64 rng(3);
  for (int c = 2; c <= 24; ++c) {
    const Tensor x = oracle::random_tensor({1, c, 2, 3}, rng);
    for (int g = 1; g <= c; ++g) {
      if (c % g) continue;
      const Tensor y = channel_shuffle(x, g);
      CHECK(y == oracle::shuffle(x, g));
      CHECK(channel_shuffle(y, c / g) == x);
    }
  }
}

TEST_CASE("channel split partitions and concat restores") {
  const Tensor x = iota({1, 116, 2, 2});
  const auto [a, b] = channel_split(x, 58);
  CHECK(a.c() == 58);
  CHECK(b.c() == 58);
  CHECK(concat_channels(a, b) == x);

  const auto [p, q] = channel_split(iota({1, 2, 3, 3}), 1);
  CHECK(p.c() == 1);
  CHECK(q.c() == 1);
  CHECK(q.at(0, 0, 0, 0) == 9.0f);

  const auto [u, v] = channel_split(x, 10);
  CHECK(u.c() == 106);
  CHECK(v.at(0, 0, 0, 0) == x.at(0, 106, 0, 0));

  CHECK_THROWS_AS(channel_split(x, 0), ShapeError);
  CHECK_THROWS_AS(channel_split(x, 116), ShapeError);
}

TEST_CASE("concat shapes") {
  const Tensor a(Shape{1, 58, 28, 28}, 1.0f);
  const Tensor b(Shape{1, 58, 28, 28}, 2.0f);
  const Tensor y = concat_channels(a, b);
  CHECK(y.shape() == Shape{1, 116, 28, 28});
  CHECK(y.at(0, 57, 27, 27) == 1.0f);
  CHECK(y.at(0, 58, 0, 0) == 2.0f);
  CHECK_THROWS_AS(concat_channels(a, Tensor(Shape{1, 58, 14, 14})), ShapeError);
  CHECK_THROWS_AS(concat_channels(a, Tensor(Shape{2, 58, 28, 28})), ShapeError);
}

TEST_CASE("element-wise operators") {
  const Tensor x(Shape{1, 3, 1, 1}, std::vector<float>{-1, 0, 2});
  CHECK(relu(x).data()[0] == 0.0f);
  CHECK(relu(x).data()[1] == 0.0f);
  CHECK(relu(x).data()[2] == 2.0f);
  CHECK(add_tensors(x, Tensor(x.shape())) == x);
  CHECK(add_tensors(x, x).data()[2] == 4.0f);
  CHECK_THROWS_AS(add_tensors(x, Tensor(Shape{1, 2, 1, 1})), ShapeError);

  const std::vector<float> ones(3, 1.0f), zeros(3, 0.0f);
  CHECK(apply_scale_shift(x, ones, zeros) == x);
  const std::vector<float> scale{2, 3, 4}, shift{1, 1, 1};
  CHECK(apply_scale_shift(x, scale, shift).data()[2] == 9.0f);
  CHECK_THROWS_AS(apply_scale_shift(x, std::vector<float>(2), zeros), ShapeError);

  CHECK(sigmoid(Tensor(Shape{1, 1, 1, 1})).data()[0] == doctest::Approx(0.5));

  const Tensor gate(Shape{1, 3, 1, 1}, std::vector<float>{0.5f, 2.0f, 0.0f});
  const Tensor y = multiply_channels(Tensor(Shape{1, 3, 2, 2}, 4.0f), gate);
  CHECK(y.at(0, 0, 1, 1) == 2.0f);
  CHECK(y.at(0, 1, 0, 0) == 8.0f);
  CHECK(y.at(0, 2, 0, 1) == 0.0f);
  CHECK_THROWS_AS(multiply_channels(y, Tensor(Shape{1, 3, 2, 2})), ShapeError);
}

TEST_CASE("pooling") {
  const Tensor x = iota({1, 2, 56, 56});
  const Tensor y = maxpool(x, 3, 2, 1);
  CHECK(y.shape() == Shape{1, 2, 28, 28});
  CHECK(y.at(0, 0, 0, 0) == x.at(0, 0, 1, 1));
  CHECK(y.at(0, 1, 27, 27) == x.at(0, 1, 55, 55));

  // Negative inputs: padding must not win the max.
  const Tensor neg(Shape{1, 1, 2, 2}, -5.0f);
  CHECK(maxpool(neg, 3, 2, 1).data()[0] == -5.0f);

  const Tensor ones(Shape{1, 1, 4, 4}, 1.0f);
  const Tensor a = avg_pool(ones, 3, 2, 1);
  CHECK(a.shape() == Shape{1, 1, 2, 2});
  CHECK(a.at(0, 0, 0, 0) == doctest::Approx(4.0 / 9.0));
  CHECK(a.at(0, 0, 1, 1) == doctest::Approx(1.0));

  const Tensor g = global_avg_pool(Tensor(Shape{2, 3, 7, 7}, 3.0f));
  CHECK(g.shape() == Shape{2, 3, 1, 1});
  for (float v : g.data()) CHECK(v == doctest::Approx(3.0));

  CHECK_THROWS_AS(maxpool(Tensor(Shape{1, 1, 2, 2}), 5, 1, 0), ShapeError);
}

TEST_CASE("fully connected") {
  const Tensor x(Shape{1, 3, 1, 1}, std::vector<float>{1, 2, 3});
  Weights eye;
  eye.values = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(fully_connected(x, eye) == x);

  Weights w;
  w.values = {1, 1, 1, 0, 0, 2};
  w.bias = std::vector<float>{0.5f, -1.0f};
  const Tensor y = fully_connected(x, w);
  CHECK(y.shape() == Shape{1, 2, 1, 1});
  CHECK(y.data()[0] == doctest::Approx(6.5));
  CHECK(y.data()[1] == doctest::Approx(5.0));
  CHECK_THROWS_AS(fully_connected(Tensor(Shape{1, 3, 2, 2}), eye), ShapeError);
}
