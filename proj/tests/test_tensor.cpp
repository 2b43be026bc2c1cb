// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>

#include "afdc/rng.hpp"
#include "afdc/tensor.hpp"
#include "doctest.h"

using namespace afdc;

namespace {
std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("tensor construction and indexing") {
  Tensor<double> t(2, 3, 4, 5);
  CHECK(t.size() == 2 * 3 * 4 * 5);
  CHECK(t.array().abs().maxCoeff() == 0.0);
  t.at(1, 2, 3, 4) = 7.5;
  CHECK(t.at(1, 2, 3, 4) == 7.5);
  // row-major NCHW: last axis is contiguous
  t.at(0, 0, 0, 1) = 1.0;
  CHECK(t.data()[1] == 1.0);

  CHECK_THROWS_AS(Tensor<double>(0, 1, 1, 1), Error);
}

TEST_CASE("tensor grad slot is optional and same-shape") {
  Tensor<float> t(1, 2, 2, 2);
  CHECK(!t.has_grad());
  t.grad().setConstant(3.0f);
  CHECK(t.has_grad());
  CHECK(t.grad().size() == t.size());
  t.zero_grad();
  CHECK(t.grad().abs().maxCoeff() == 0.0f);
}

TEST_CASE("AFDT round trip is bit-exact") {
  RngStream rng(42);
  SUBCASE("f64") {
    Tensor<double> t(2, 1, 3, 4);
    for (Index i = 0; i < t.size(); ++i) t.array()[i] = rng.normal();
    const std::string path = temp_path("afdt_test_f64.afdt");
    tensor_io::save(t, path);
    const Tensor<double> back = tensor_io::load<double>(path);
    CHECK(back.dims() == t.dims());
    CHECK((back.array() == t.array()).all());
    std::remove(path.c_str());
  }
  SUBCASE("f32") {
    Tensor<float> t(1, 3, 5, 2);
    for (Index i = 0; i < t.size(); ++i)
      t.array()[i] = static_cast<float>(rng.normal());
    const std::string path = temp_path("afdt_test_f32.afdt");
    tensor_io::save(t, path);
    const Tensor<float> back = tensor_io::load<float>(path);
    CHECK((back.array() == t.array()).all());
    // load_as converts; the f32 payload is preserved exactly in the widening
    const Tensor<double> wide = tensor_io::load_as<double>(path);
    for (Index i = 0; i < t.size(); ++i)
      CHECK(wide.array()[i] == static_cast<double>(t.array()[i]));
    std::remove(path.c_str());
  }
}

TEST_CASE("AFDT rejects wrong precision and garbage") {
  Tensor<float> t(1, 1, 1, 1);
  const std::string path = temp_path("afdt_test_flag.afdt");
  tensor_io::save(t, path);
  CHECK_THROWS_AS(tensor_io::load<double>(path), Error);
  std::remove(path.c_str());

  const std::string bad = temp_path("afdt_test_bad.afdt");
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOPE and some more bytes";
  }
  CHECK_THROWS_AS(tensor_io::load<float>(bad), Error);
  std::remove(bad.c_str());
}

TEST_CASE("AFDT truncated payload is detected") {
  Tensor<float> t(1, 1, 2, 2);
  const std::string path = temp_path("afdt_test_trunc.afdt");
  tensor_io::save(t, path);
  std::filesystem::resize_file(path, 9 + 2 * sizeof(float));
  CHECK_THROWS_AS(tensor_io::load<float>(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("rng streams are deterministic and purpose-separated") {
  RngStream a = RngStream::derive(7, rng_purpose::kShuffle);
  RngStream b = RngStream::derive(7, rng_purpose::kShuffle);
  RngStream c = RngStream::derive(7, rng_purpose::kWarpSize);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal &= va == b.next_u64();
    any_diff |= va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);

  RngStream u(123);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}
