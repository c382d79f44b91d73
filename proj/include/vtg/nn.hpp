// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <string>
#include <vector>

#include "vtg/autodiff.hpp"
#include "vtg/rng.hpp"
#include "vtg/tensor.hpp"

namespace vtg {

/// Named trainable tensor plus its optimizer moments.
struct Param {
  size_t id = 0;
  std::string name;
  Tensor value;
  Tensor adam_m, adam_v;
};

/// Owns every parameter of a model. Pointers stay valid for the store's
/// lifetime. Iteration order (= id order) is the checkpoint order.
class ParamStore {
 public:
  Param* add(const std::string& name, Tensor init);
  Param* find(const std::string& name);
  size_t size() const { return params_.size(); }
  Param& at(size_t id) { return params_[id]; }
  const Param& at(size_t id) const { return params_[id]; }

 private:
  std::deque<Param> params_;
};

/// Binds parameters into one sample's graph, memoized so each parameter has
/// exactly one leaf. After backward, fold the leaf gradients out in id order.
struct Tape {
  Graph& g;
  std::vector<Var> bound;

  Tape(Graph& graph, size_t n_params) : g(graph), bound(n_params, nullptr) {}

  Var operator()(Param* p) {
    Var& v = bound[p->id];
    if (!v) v = g.leaf(&p->value);
    return v;
  }

  /// accum[id] += leaf grad (for every bound leaf that received gradient).
  void fold_grads(std::vector<Tensor>& accum) const;
};

// Deterministic initializers; the stream is derived from (seed, name) so
// adding parameters elsewhere never shifts existing inits.
Tensor xavier_init(int64_t out_dim, int64_t in_dim, uint64_t seed, const std::string& name);
Tensor uniform_init(std::vector<int64_t> shape, double amp, uint64_t seed,
                    const std::string& name);

struct Linear {
  Param* w = nullptr;  // [out, in]
  Param* b = nullptr;  // [out], optional

  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int64_t in, int64_t out, uint64_t seed,
         bool bias = true);
  Var operator()(Tape& t, Var x) const;  // [m,in] -> [m,out]
};

struct LayerNorm {
  Param* gamma = nullptr;
  Param* beta = nullptr;
  double eps = 1e-5;

  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, int64_t dim);
  Var operator()(Tape& t, Var x) const;
};

/// Two-layer GELU MLP; optionally residual (output layer zero-initializable
/// to make the block an exact identity).
struct Mlp {
  Linear fc1, fc2;
  bool residual = false;

  Mlp() = default;
  Mlp(ParamStore& ps, const std::string& name, int64_t dim, int64_t hidden, int64_t out,
      uint64_t seed, bool residual = false);
  Var operator()(Tape& t, Var x) const;
};

struct MultiheadAttention {
  Linear q, k, v, o;
  int heads = 1;

  MultiheadAttention() = default;
  MultiheadAttention(ParamStore& ps, const std::string& name, int64_t dim, int heads,
                     uint64_t seed);

  /// key_mask: [Tk] 0/1 (empty = all live). If attn_out is non-null it
  /// receives the per-head attention matrices [Tq, Tk].
  Var operator()(Tape& t, Var query, Var keyval, const Tensor& key_mask,
                 std::vector<Var>* attn_out = nullptr) const;
};

enum class NormMode { kPostNorm, kPreNorm };

/// Standard transformer encoder layer. Post-norm is the production setting;
/// pre-norm exists so residual wiring can be pinned exactly in tests (zeroed
/// output projections make the layer an identity).
struct TransformerLayer {
  MultiheadAttention attn;
  Mlp mlp;
  LayerNorm ln1, ln2;
  NormMode norm = NormMode::kPostNorm;

  TransformerLayer() = default;
  TransformerLayer(ParamStore& ps, const std::string& name, int64_t dim, int heads,
                   int64_t mlp_hidden, uint64_t seed, NormMode norm = NormMode::kPostNorm);
  Var operator()(Tape& t, Var x, const Tensor& key_mask) const;
};

/// Learned absolute positional table; returns the first `len` rows.
struct PositionTable {
  Param* table = nullptr;  // [max_len, dim]

  PositionTable() = default;
  PositionTable(ParamStore& ps, const std::string& name, int64_t max_len, int64_t dim,
                uint64_t seed, double init_amp = 0.02);
  Var rows(Tape& t, int64_t len) const;
};

}  // namespace vtg
