// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_util.hpp"
#include "vtg/kernels.hpp"

using namespace vtg;
namespace kern = vtg::kern;

namespace {
bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}
}  // namespace

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t m = 1 + static_cast<int64_t>(rng.below(40));
    const int64_t k = 1 + static_cast<int64_t>(rng.below(40));
    const int64_t n = 1 + static_cast<int64_t>(rng.below(40));
    Tensor a = test::random_tensor({m, k}, rng);
    Tensor b = test::random_tensor({k, n}, rng);
    Tensor bt = test::random_tensor({n, k}, rng);
    Tensor at = test::random_tensor({k, m}, rng);
    CHECK(bit_equal(kern::matmul(a, b), kern::serial::matmul(a, b)));
    CHECK(bit_equal(kern::matmul_nt(a, bt), kern::serial::matmul_nt(a, bt)));
    CHECK(bit_equal(kern::matmul_tn(at, b), kern::serial::matmul_tn(at, b)));
  }
}

TEST_CASE("conv1d agrees with serial and produces ceil-halved lengths") {
  Rng rng(12);
  for (int stride : {1, 2}) {
    for (int64_t T : {1, 2, 5, 8, 17}) {
      const int64_t cin = 3, cout = 4;
      Tensor x = test::random_tensor({T, cin}, rng);
      Tensor w = test::random_tensor({cout, cin * 3}, rng);
      Tensor b = test::random_tensor({cout}, rng);
      Tensor y = kern::conv1d(x, w, b, stride);
      CHECK(bit_equal(y, kern::serial::conv1d(x, w, b, stride)));
      CHECK(y.rows() == (stride == 1 ? T : (T + 1) / 2));

      Tensor gy = test::random_tensor({y.rows(), cout}, rng);
      CHECK(bit_equal(kern::conv1d_grad_input(gy, w, stride, T),
                      kern::serial::conv1d_grad_input(gy, w, stride, T)));
      CHECK(bit_equal(kern::conv1d_grad_weight(gy, x, stride),
                      kern::serial::conv1d_grad_weight(gy, x, stride)));
    }
  }
}

TEST_CASE("masked softmax rows: sums, zeros, shift invariance") {
  Rng rng(13);
  Tensor x = test::random_tensor({6, 9}, rng, 3.0);
  Tensor mask({9});
  for (int64_t j = 0; j < 6; ++j) mask.at(j) = 1.0;  // last 3 masked
  Tensor y = kern::softmax_masked_rows(x, mask);
  CHECK(bit_equal(y, kern::serial::softmax_masked_rows(x, mask)));
  for (int64_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < 9; ++j) {
      if (j >= 6) CHECK(y.at(i, j) == 0.0);
      CHECK(y.at(i, j) >= 0.0);
      s += y.at(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }

  // softmax(x + c) == softmax(x) up to fp noise
  Tensor xs = x;
  for (double& v : xs.data) v += 7.25;
  Tensor ys = kern::softmax_masked_rows(xs, mask);
  for (int64_t i = 0; i < 6; ++i)
    for (int64_t j = 0; j < 9; ++j)
      CHECK(ys.at(i, j) == doctest::Approx(y.at(i, j)).epsilon(1e-12));
}

TEST_CASE("layer norm rows: normalization and affine params") {
  Rng rng(14);
  Tensor x = test::random_tensor({4, 8}, rng, 2.0);
  Tensor gamma = Tensor::full({8}, 1.0);
  Tensor beta = Tensor({8});
  Tensor y = kern::layer_norm_rows(x, gamma, beta, 1e-5);
  CHECK(bit_equal(y, kern::serial::layer_norm_rows(x, gamma, beta, 1e-5)));
  for (int64_t i = 0; i < 4; ++i) {
    double mu = 0.0, var = 0.0;
    for (int64_t j = 0; j < 8; ++j) mu += y.at(i, j);
    mu /= 8.0;
    for (int64_t j = 0; j < 8; ++j) var += (y.at(i, j) - mu) * (y.at(i, j) - mu);
    var /= 8.0;
    CHECK(mu == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}
