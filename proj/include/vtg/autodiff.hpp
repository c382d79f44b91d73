// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "vtg/tensor.hpp"

namespace vtg {

class Graph;

/// One value in a reverse-mode tape. Values are either owned or borrowed
/// (parameter leaves point at externally owned storage so a fresh graph per
/// sample never copies the parameter set).
struct Node {
  Graph* graph = nullptr;
  Tensor owned;
  const Tensor* ext = nullptr;
  Tensor grad;  // allocated on first accumulation
  bool needs_grad = false;
  std::function<void(Node&)> back;  // pulls this->grad into parents

  const Tensor& value() const { return ext ? *ext : owned; }
  Tensor& ensure_grad() {
    if (grad.data.empty()) grad = Tensor(value().shape);
    return grad;
  }
  bool has_grad() const { return !grad.data.empty(); }
};

using Var = Node*;

/// Arena of nodes created in topological order; backward() is a single
/// reverse sweep. One Graph per sample per step; cleared wholesale.
class Graph {
 public:
  Var leaf(const Tensor* external) {
    Node& n = nodes_.emplace_back();
    n.graph = this;
    n.ext = external;
    n.needs_grad = true;
    return &n;
  }

  Var constant(Tensor v) {
    Node& n = nodes_.emplace_back();
    n.graph = this;
    n.owned = std::move(v);
    n.needs_grad = false;
    return &n;
  }

  Var make(Tensor v, bool needs_grad, std::function<void(Node&)> back) {
    Node& n = nodes_.emplace_back();
    n.graph = this;
    n.owned = std::move(v);
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    return &n;
  }

  /// Seeds d(root)/d(root) = 1 and sweeps the tape. root must be scalar.
  void backward(Var root);

  size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
};

inline bool any_grad(std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (v->needs_grad) return true;
  return false;
}

// ---- elementwise / structural ops ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, Var s);       // s: [1], broadcast add
Var mul_scalar(Var a, Var s);       // s: [1], broadcast multiply
Var add_rowvec(Var m, Var v);       // [r,c] + [c] per row
Var mul_rowvec(Var m, Var v);       // [r,c] * [c] per row
Var mul_colvec(Var m, Var v);       // [r,c] * [r] per column
Var outer(Var a, Var b);            // [m] x [n] -> [m,n]

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var matmul_tn(Var a, Var b);

Var slice_rows(Var a, int64_t r0, int64_t r1);
Var slice_cols(Var a, int64_t c0, int64_t c1);
Var gather_rows(Var a, std::vector<int64_t> idx);  // duplicates allowed
Var slice_vec(Var v, int64_t a, int64_t b);        // 1-D slice
Var gather_vec(Var v, std::vector<int64_t> idx);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var flatten(Var a);                          // any shape -> [numel]
Var reshape_rows(Var a, int64_t r, int64_t c);  // same numel
Var concat_vec(const std::vector<Var>& scalars_or_vecs);  // 1-D concat

Var gelu(Var a);      // exact erf form
Var sigmoid(Var a);
Var softplus(Var a);
Var relu(Var a);
Var log_of(Var a);
Var exp_of(Var a);
Var sqrt_of(Var a);
Var pow_const(Var a, double p);
Var abs_of(Var a);

Var sum(Var a);            // -> [1]
Var mean(Var a);           // -> [1]
Var dot(Var a, Var b);     // [n].[n] -> [1]
Var row_sums(Var a);       // [m,n] -> [m]
Var col_sums(Var a);       // [m,n] -> [n]

/// Softmax per row over columns where mask != 0 (exact zeros elsewhere).
/// mask is captured by value; pass an empty tensor for no masking.
Var softmax_masked(Var logits, Tensor mask);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var conv1d(Var x, Var w, Var b, int stride);

/// log(sum_j exp(x_j)) over a 1-D vector restricted to mask != 0, computed
/// with a detached max shift. Exact gradient.
Var logsumexp_masked(Var x, const Tensor& mask);

}  // namespace vtg
