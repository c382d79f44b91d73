// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vtg/autodiff.hpp"

using namespace vtg;

namespace {

// random projection to turn any output into a scalar functional
Var project(Graph& g, Var out, Rng& rng) {
  Tensor r(out->value().shape);
  for (double& v : r.data) v = rng.uniform(-1.0, 1.0);
  return sum(mul(out, g.constant(r)));
}

double op_grad_err(const std::function<Var(Graph&, const std::vector<Var>&)>& fwd,
                   std::vector<Tensor> inputs, uint64_t seed) {
  test::GradCheck gc;
  std::vector<Tensor> store = std::move(inputs);
  for (Tensor& t : store) gc.inputs.push_back(&t);
  gc.build = [&fwd, seed](Graph& g, Tape&, const std::vector<Var>& leaves) {
    Rng rng(seed);
    return project(g, fwd(g, leaves), rng);
  };
  return gc.max_rel_err();
}

}  // namespace

TEST_CASE("gradients of elementwise and structural ops") {
  Rng rng(21);
  const double tol = 1e-6;
  auto T = [&](std::vector<int64_t> s) { return test::random_tensor(std::move(s), rng); };

  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return add(v[0], v[1]); },
                    {T({3, 4}), T({3, 4})}, 1) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return mul(v[0], v[1]); },
                    {T({3, 4}), T({3, 4})}, 2) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return matmul(v[0], v[1]); },
                    {T({3, 4}), T({4, 5})}, 3) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return matmul_nt(v[0], v[1]); },
                    {T({3, 4}), T({5, 4})}, 4) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return matmul_tn(v[0], v[1]); },
                    {T({4, 3}), T({4, 5})}, 5) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return gelu(v[0]); },
                    {T({4, 4})}, 6) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return sigmoid(v[0]); },
                    {T({4, 4})}, 7) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return softplus(v[0]); },
                    {T({4, 4})}, 8) < tol);
  CHECK(op_grad_err([](Graph&, const std::vector<Var>& v) { return outer(v[0], v[1]); },
                    {T({5}), T({3})}, 9) < tol);
  CHECK(op_grad_err(
            [](Graph&, const std::vector<Var>& v) { return mul_rowvec(v[0], v[1]); },
            {T({3, 4}), T({4})}, 10) < tol);
  CHECK(op_grad_err(
            [](Graph&, const std::vector<Var>& v) { return mul_colvec(v[0], v[1]); },
            {T({3, 4}), T({3})}, 11) < tol);
  CHECK(op_grad_err(
            [](Graph&, const std::vector<Var>& v) {
              return concat_cols({slice_cols(v[0], 0, 2), slice_cols(v[0], 2, 4)});
            },
            {T({3, 4})}, 12) < tol);
  CHECK(op_grad_err(
            [](Graph&, const std::vector<Var>& v) { return gather_rows(v[0], {2, 0, 2}); },
            {T({3, 4})}, 13) < tol);
}

TEST_CASE("gradients of softmax, layer norm, conv1d, logsumexp") {
  Rng rng(22);
  const double tol = 1e-6;
  auto T = [&](std::vector<int64_t> s) { return test::random_tensor(std::move(s), rng); };

  Tensor mask({5});
  for (int64_t j = 0; j < 3; ++j) mask.at(j) = 1.0;
  CHECK(op_grad_err(
            [mask](Graph&, const std::vector<Var>& v) {
              return softmax_masked(v[0], mask);
            },
            {T({4, 5})}, 31) < tol);
  CHECK(op_grad_err(
            [](Graph&, const std::vector<Var>& v) {
              return layer_norm(v[0], v[1], v[2], 1e-5);
            },
            {T({3, 6}), T({6}), T({6})}, 32) < tol);
  for (int stride : {1, 2})
    CHECK(op_grad_err(
              [stride](Graph&, const std::vector<Var>& v) {
                return conv1d(v[0], v[1], v[2], stride);
              },
              {T({7, 3}), T({2, 9}), T({2})}, 33) < tol);
  CHECK(op_grad_err(
            [mask](Graph&, const std::vector<Var>& v) {
              return logsumexp_masked(v[0], mask);
            },
            {T({5})}, 34) < tol);
}

TEST_CASE("masked softmax puts exact zeros on masked columns") {
  Graph g;
  Tensor mask = Tensor::vec({1, 0, 1, 0});
  Var logits = g.constant(Tensor::mat(2, 4, {5, 100, -3, 100, 0.5, 7, 0.5, 7}));
  Var y = softmax_masked(logits, mask);
  CHECK(y->value().at(0, 1) == 0.0);
  CHECK(y->value().at(0, 3) == 0.0);
  CHECK(y->value().at(1, 0) == doctest::Approx(0.5));
  CHECK(y->value().at(1, 2) == doctest::Approx(0.5));
}

TEST_CASE("backward accumulates through shared subexpressions") {
  // f(x) = sum(x*x + x*x) -> df/dx = 4x
  Tensor x = Tensor::vec({1.5, -2.0, 0.25});
  Graph g;
  Var xv = g.leaf(&x);
  Var sq = mul(xv, xv);
  Var root = sum(add(sq, sq));
  g.backward(root);
  for (int64_t i = 0; i < 3; ++i)
    CHECK(xv->grad.at(i) == doctest::Approx(4.0 * x.at(i)).epsilon(1e-12));
}

TEST_CASE("graph reuses one leaf per external tensor via Tape") {
  ParamStore ps;
  Param* w = ps.add("w", Tensor::vec({2.0, 3.0}));
  Graph g;
  Tape t(g, ps.size());
  Var a = t(w);
  Var b = t(w);
  CHECK(a == b);
  Var root = sum(mul(a, b));  // w0^2 + w1^2
  g.backward(root);
  std::vector<Tensor> accum(1);
  t.fold_grads(accum);
  CHECK(accum[0].at(0) == doctest::Approx(4.0));
  CHECK(accum[0].at(1) == doctest::Approx(6.0));
}
