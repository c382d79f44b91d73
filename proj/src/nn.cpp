// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace vtg {

Param* ParamStore::add(const std::string& name, Tensor init) {
  for (const Param& p : params_)
    if (p.name == name) throw std::logic_error("duplicate parameter: " + name);
  Param& p = params_.emplace_back();
  p.id = params_.size() - 1;
  p.name = name;
  p.value = std::move(init);
  p.adam_m = Tensor(p.value.shape);
  p.adam_v = Tensor(p.value.shape);
  return &p;
}

Param* ParamStore::find(const std::string& name) {
  for (Param& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void Tape::fold_grads(std::vector<Tensor>& accum) const {
  for (size_t id = 0; id < bound.size(); ++id) {
    Var v = bound[id];
    if (!v || !v->has_grad()) continue;
    if (accum[id].data.empty()) accum[id] = Tensor(v->value().shape);
    for (size_t i = 0; i < accum[id].data.size(); ++i)
      accum[id].data[i] += v->grad.data[i];
  }
}

Tensor xavier_init(int64_t out_dim, int64_t in_dim, uint64_t seed, const std::string& name) {
  Rng rng(hash_combine(seed, hash_str(name)));
  const double a = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  Tensor t({out_dim, in_dim});
  for (double& v : t.data) v = rng.uniform(-a, a);
  return t;
}

Tensor uniform_init(std::vector<int64_t> shape, double amp, uint64_t seed,
                    const std::string& name) {
  Rng rng(hash_combine(seed, hash_str(name)));
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-amp, amp);
  return t;
}

Linear::Linear(ParamStore& ps, const std::string& name, int64_t in, int64_t out,
               uint64_t seed, bool bias) {
  w = ps.add(name + ".w", xavier_init(out, in, seed, name + ".w"));
  if (bias) b = ps.add(name + ".b", Tensor({out}));
}

Var Linear::operator()(Tape& t, Var x) const {
  Var y = matmul_nt(x, t(w));
  if (b) y = add_rowvec(y, t(b));
  return y;
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, int64_t dim) {
  gamma = ps.add(name + ".g", Tensor::full({dim}, 1.0));
  beta = ps.add(name + ".b", Tensor({dim}));
}

Var LayerNorm::operator()(Tape& t, Var x) const {
  return layer_norm(x, t(gamma), t(beta), eps);
}

Mlp::Mlp(ParamStore& ps, const std::string& name, int64_t dim, int64_t hidden, int64_t out,
         uint64_t seed, bool res)
    : fc1(ps, name + ".fc1", dim, hidden, seed),
      fc2(ps, name + ".fc2", hidden, out, seed),
      residual(res) {
  if (residual) check_shape(dim == out, "residual mlp dims");
}

Var Mlp::operator()(Tape& t, Var x) const {
  Var y = fc2(t, gelu(fc1(t, x)));
  return residual ? add(x, y) : y;
}

MultiheadAttention::MultiheadAttention(ParamStore& ps, const std::string& name, int64_t dim,
                                       int h, uint64_t seed)
    : q(ps, name + ".q", dim, dim, seed),
      k(ps, name + ".k", dim, dim, seed),
      v(ps, name + ".v", dim, dim, seed),
      o(ps, name + ".o", dim, dim, seed),
      heads(h) {
  check_shape(dim % h == 0, "attention heads must divide dim");
}

Var MultiheadAttention::operator()(Tape& t, Var query, Var keyval, const Tensor& key_mask,
                                   std::vector<Var>* attn_out) const {
  const int64_t d = query->value().cols();
  const int64_t dh = d / heads;
  Var Q = q(t, query);
  Var K = k(t, keyval);
  Var V = v(t, keyval);
  std::vector<Var> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(Q, h * dh, (h + 1) * dh);
    Var kh = slice_cols(K, h * dh, (h + 1) * dh);
    Var vh = slice_cols(V, h * dh, (h + 1) * dh);
    Var scores = scale(matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    Var attn = softmax_masked(scores, key_mask);
    if (attn_out) attn_out->push_back(attn);
    outs.push_back(matmul(attn, vh));
  }
  return o(t, concat_cols(outs));
}

TransformerLayer::TransformerLayer(ParamStore& ps, const std::string& name, int64_t dim,
                                   int heads, int64_t mlp_hidden, uint64_t seed, NormMode nm)
    : attn(ps, name + ".attn", dim, heads, seed),
      mlp(ps, name + ".mlp", dim, mlp_hidden, dim, seed),
      ln1(ps, name + ".ln1", dim),
      ln2(ps, name + ".ln2", dim),
      norm(nm) {}

Var TransformerLayer::operator()(Tape& t, Var x, const Tensor& key_mask) const {
  if (norm == NormMode::kPostNorm) {
    x = ln1(t, add(x, attn(t, x, x, key_mask)));
    x = ln2(t, add(x, mlp(t, x)));
  } else {
    x = add(x, attn(t, ln1(t, x), ln1(t, x), key_mask));
    x = add(x, mlp(t, ln2(t, x)));
  }
  return x;
}

PositionTable::PositionTable(ParamStore& ps, const std::string& name, int64_t max_len,
                             int64_t dim, uint64_t seed, double init_amp) {
  table = ps.add(name, uniform_init({max_len, dim}, init_amp, seed, name));
}

Var PositionTable::rows(Tape& t, int64_t len) const {
  check_shape(len <= table->value.rows(), "position table too short");
  return slice_rows(t(table), 0, len);
}

}  // namespace vtg
