// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "afdc/gradcheck.hpp"
#include "afdc/ops.hpp"
#include "afdc/rng.hpp"
#include "doctest.h"

using namespace afdc;

namespace {
template <typename S>
void randomize(Tensor<S>& t, RngStream& rng) {
  for (Index i = 0; i < t.size(); ++i)
    t.array()[i] = static_cast<S>(rng.normal());
}
}  // namespace

TEST_CASE("resize_nearest replication and identity") {
  const auto in = Tensor<double>::from_values({1, 1, 1, 2}, {3.0, 8.0});
  SUBCASE("1x2 -> 1x4 replicates each pixel") {
    const auto out = resize_nearest(in, 1, 4);
    CHECK(out.at(0, 0, 0, 0) == 3.0);
    CHECK(out.at(0, 0, 0, 1) == 3.0);
    CHECK(out.at(0, 0, 0, 2) == 8.0);
    CHECK(out.at(0, 0, 0, 3) == 8.0);
  }
  SUBCASE("same size is the identity") {
    const auto out = resize_nearest(in, 1, 2);
    CHECK((out.array() == in.array()).all());
  }
  SUBCASE("downscale to 1x1 floors to the top-left element") {
    const auto sq =
        Tensor<double>::from_values({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    const auto out = resize_nearest(sq, 1, 1);
    CHECK(out.at(0, 0, 0, 0) == 1.0);
  }
  CHECK_THROWS_AS(resize_nearest(in, 0, 4), Error);
}

TEST_CASE("resize_bilinear half-pixel sampling") {
  SUBCASE("[0,1] -> width 4 gives 0, 0.25, 0.75, 1") {
    const auto in = Tensor<double>::from_values({1, 1, 1, 2}, {0.0, 1.0});
    const auto out = resize_bilinear(in, 1, 4);
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.at(0, 0, 0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(out.at(0, 0, 0, 2) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(out.at(0, 0, 0, 3) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant images stay exactly constant") {
    Tensor<float> in(1, 2, 3, 5);
    in.array().setConstant(0.37f);
    for (Index oh : {1, 2, 7})
      for (Index ow : {1, 4, 9}) {
        const auto out = resize_bilinear(in, oh, ow);
        CHECK((out.array() == 0.37f).all());
      }
  }
  SUBCASE("identity size reproduces the input") {
    RngStream rng(2);
    Tensor<double> in(1, 1, 5, 7);
    randomize(in, rng);
    const auto out = resize_bilinear(in, 5, 7);
    CHECK((out.array() - in.array()).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("adaptive_avg_pool windows and means") {
  const auto in = Tensor<double>::from_values(
      {1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  SUBCASE("g=1 is the global average") {
    const auto out = adaptive_avg_pool(in, PoolSpec{1});
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(5.0).epsilon(1e-15));
  }
  SUBCASE("g == input size is the identity") {
    const auto out = adaptive_avg_pool(in, PoolSpec{3});
    CHECK((out.array() == in.array()).all());
  }
  SUBCASE("constant input maps to constant output") {
    Tensor<double> c(2, 3, 5, 5);
    c.array().setConstant(4.0);
    const auto out = adaptive_avg_pool(c, PoolSpec{2});
    CHECK((out.array() == 4.0).all());
  }
  SUBCASE("grid larger than input is rejected") {
    CHECK_THROWS_AS(adaptive_avg_pool(in, PoolSpec{4}), Error);
  }
  SUBCASE("g=1 preserves the global mean to 1e-12") {
    RngStream rng(4);
    Tensor<double> x(1, 2, 6, 10);
    randomize(x, rng);
    const auto out = adaptive_avg_pool(x, PoolSpec{1});
    for (Index c = 0; c < 2; ++c) {
      double mean = 0;
      for (Index y = 0; y < 6; ++y)
        for (Index xx = 0; xx < 10; ++xx) mean += x.at(0, c, y, xx);
      mean /= 60.0;
      CHECK(std::abs(out.at(0, c, 0, 0) - mean) <= 1e-12);
    }
  }
}

TEST_CASE("adaptive pool backward distributes shares") {
  RngStream rng(5);
  Tensor<double> in(1, 1, 5, 7);
  randomize(in, rng);
  Tensor<double> gout(1, 1, 2, 2);
  randomize(gout, rng);
  const auto gin = adaptive_avg_pool_backward(gout, in.dims());
  auto loss = [&] {
    return (adaptive_avg_pool(in, PoolSpec{2}).array() * gout.array()).sum();
  };
  const auto rep = grad_check(
      loss, {in.data(), static_cast<std::size_t>(in.size())},
      {gin.data(), static_cast<std::size_t>(gin.size())}, 1e-6);
  CHECK_MESSAGE(rep.max_rel_err < 1e-6, rep.to_string());
}

TEST_CASE("linear, relu, softmax basics") {
  SUBCASE("identity weights reproduce the input") {
    const auto in = Tensor<double>::from_values({2, 3, 1, 1},
                                                {1, 2, 3, 4, 5, 6});
    Tensor<double>::Array w = Tensor<double>::Array::Zero(9);
    w[0] = w[4] = w[8] = 1.0;
    const auto out = linear(in, w, Tensor<double>::Array::Zero(3));
    CHECK((out.array() == in.array()).all());
  }
  SUBCASE("relu clamps negatives") {
    const auto in = Tensor<double>::from_values({1, 2, 1, 1}, {-1.0, 2.0});
    const auto out = relu(in);
    CHECK(out.at(0, 0, 0, 0) == 0.0);
    CHECK(out.at(0, 1, 0, 0) == 2.0);
  }
  SUBCASE("softmax of zeros is uniform over the 10 bins") {
    Tensor<double> z(1, 10, 1, 1);
    const auto p = softmax(z);
    for (Index c = 0; c < 10; ++c)
      CHECK(p.at(0, c, 0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("softmax rows sum to 1 and are nonnegative") {
    RngStream rng(6);
    Tensor<double> z(4, 10, 1, 1);
    randomize(z, rng);
    const auto p = softmax(z);
    for (Index n = 0; n < 4; ++n) {
      double sum = 0;
      for (Index c = 0; c < 10; ++c) {
        CHECK(p.at(n, c, 0, 0) >= 0.0);
        sum += p.at(n, c, 0, 0);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("linear shape mismatch throws") {
    Tensor<double> in(1, 3, 1, 1);
    CHECK_THROWS_AS(
        linear(in, Tensor<double>::Array::Zero(5),
               Tensor<double>::Array::Zero(2)),
        Error);
  }
}

TEST_CASE("linear backward matches finite differences") {
  RngStream rng(7);
  Tensor<double> in(2, 6, 1, 1);
  randomize(in, rng);
  Tensor<double>::Array w(4 * 6), b(4);
  for (Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
  for (Index i = 0; i < b.size(); ++i) b[i] = rng.normal();
  Tensor<double> cot(2, 4, 1, 1);
  randomize(cot, rng);
  auto loss = [&] { return (linear(in, w, b).array() * cot.array()).sum(); };
  const auto grads = linear_backward(in, w, cot);
  auto check = [&](std::span<double> x, std::span<const double> g) {
    const auto rep = grad_check(loss, x, g, 1e-6);
    CHECK_MESSAGE(rep.max_rel_err < 1e-6, rep.to_string());
  };
  check({in.data(), static_cast<std::size_t>(in.size())},
        {grads.input.data(), static_cast<std::size_t>(in.size())});
  check({w.data(), static_cast<std::size_t>(w.size())},
        {grads.weights.data(), static_cast<std::size_t>(w.size())});
  check({b.data(), static_cast<std::size_t>(b.size())},
        {grads.bias.data(), static_cast<std::size_t>(b.size())});
}

TEST_CASE("grad_check flags a wrong gradient") {
  // The checker itself must be able to fail: feed it a corrupted gradient.
  std::array<double, 3> x{0.3, -0.7, 1.1};
  auto loss = [&] { return x[0] * x[0] + 2.0 * x[1] + std::sin(x[2]); };
  std::array<double, 3> good{2.0 * x[0], 2.0, std::cos(x[2])};
  auto rep = grad_check(loss, x, good, 1e-6);
  CHECK(rep.max_rel_err < 1e-8);
  std::array<double, 3> bad = good;
  bad[1] += 0.5;
  rep = grad_check(loss, x, bad, 1e-6);
  CHECK(rep.max_rel_err > 0.1);
  CHECK(rep.worst_index == 1);
}

TEST_CASE("grad_check stays finite at a degenerate zero input") {
  std::array<double, 4> x{0, 0, 0, 0};
  auto loss = [&] { return x[0] * x[1] + x[2] * x[3]; };
  const std::array<double, 4> g{0, 0, 0, 0};
  const auto rep = grad_check(loss, x, g, 1e-5);
  CHECK(std::isfinite(rep.max_rel_err));
  CHECK(std::isfinite(rep.max_abs_err));
  CHECK(rep.max_rel_err < 1e-6);
}
