// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/sentence_path.hpp"

#include <cmath>

namespace vtg::sent {

SentencePath::SentencePath(ParamStore& ps, const Config& cfg, uint64_t seed) : cfg_(cfg) {
  check_shape(cfg.l_d >= 0, "sentence path: l_d must be >= 0");
  if (cfg.l_d > 0)
    dummies_ = ps.add("sent.dummies",
                      uniform_init({cfg.l_d, cfg.d}, 0.02, seed, "sent.dummies"));
  for (int i = 0; i < cfg.d_enc_layers; ++i)
    d_enc_.emplace_back(ps, "sent.denc" + std::to_string(i), cfg.d, cfg.heads,
                        cfg.mlp_hidden, seed, cfg.norm);
  for (int i = 0; i < cfg.aca_layers; ++i) {
    const std::string nm = "sent.aca" + std::to_string(i);
    AcaLayer l;
    l.q = Linear(ps, nm + ".q", cfg.d, cfg.d, seed);
    l.k = Linear(ps, nm + ".k", cfg.d, cfg.d, seed);
    l.v = Linear(ps, nm + ".v", cfg.d, cfg.d, seed);
    l.o = Linear(ps, nm + ".o", cfg.d, cfg.d, seed);
    l.ln = LayerNorm(ps, nm + ".ln", cfg.d);
    aca_.push_back(l);
  }
  for (int i = 0; i < cfg.s_enc_layers; ++i)
    s_enc_.emplace_back(ps, "sent.senc" + std::to_string(i), cfg.d, cfg.heads,
                        cfg.mlp_hidden, seed, cfg.norm);
  pos_aca_ = PositionTable(ps, "sent.pos_aca", cfg.max_t, cfg.d, seed);
  pos_tmp_ = PositionTable(ps, "sent.pos_tmp", cfg.max_t, cfg.d, seed);
}

Var SentencePath::encode_dummies(Tape& t, Var eos) const {
  check_shape(eos->value().rows() == 1 && eos->value().cols() == cfg_.d,
              "encode_dummies eos");
  if (cfg_.l_d == 0) return eos;  // degenerate single-key configuration
  Var seq = concat_rows({t(dummies_), eos});
  for (const auto& layer : d_enc_) seq = layer(t, seq, Tensor{});
  // keep the contextualized dummies, re-append the original eos
  return concat_rows({slice_rows(seq, 0, cfg_.l_d), eos});
}

SentencePath::AcaOut SentencePath::cross_attention(Tape& t, Var clips, Var keys,
                                                   int layer) const {
  const AcaLayer& l = aca_.at(static_cast<size_t>(layer));
  const int64_t d = cfg_.d;
  const int64_t dh = d / cfg_.heads;
  const int64_t n_keys = keys->value().rows();  // l_d + 1, sentence key last
  Var Q = l.q(t, clips);
  Var K = l.k(t, keys);
  Var V = l.v(t, keys);
  std::vector<Var> outs, alphas;
  AcaOut out;
  for (int h = 0; h < cfg_.heads; ++h) {
    Var qh = slice_cols(Q, h * dh, (h + 1) * dh);
    Var kh = slice_cols(K, h * dh, (h + 1) * dh);
    Var vh = slice_cols(V, h * dh, (h + 1) * dh);
    Var attn = softmax_masked(
        scale(matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh))), Tensor{});
    out.head_attn.push_back(attn);
    Var alpha_h = flatten(slice_cols(attn, n_keys - 1, n_keys));  // [T]
    Var u_eos_h = flatten(slice_rows(vh, n_keys - 1, n_keys));    // [dh]
    outs.push_back(outer(alpha_h, u_eos_h));
    alphas.push_back(alpha_h);
  }
  out.pre_residual = l.o(t, concat_cols(outs));
  out.combined = l.ln(t, add(clips, out.pre_residual));
  Var asum = alphas[0];
  for (size_t h = 1; h < alphas.size(); ++h) asum = add(asum, alphas[h]);
  out.alpha = scale(asum, 1.0 / static_cast<double>(cfg_.heads));
  return out;
}

Tensor SentencePath::extended_attention(Tape& t, Var clips, Var keys, int layer) const {
  const AcaLayer& l = aca_.at(static_cast<size_t>(layer));
  const int64_t dh = cfg_.d / cfg_.heads;
  Var Q = l.q(t, clips);
  Var K = l.k(t, keys);
  const int64_t n_clips = clips->value().rows();
  const int64_t n_keys = keys->value().rows();
  Tensor out({n_clips, n_keys});
  for (int h = 0; h < cfg_.heads; ++h) {
    Var qh = slice_cols(Q, h * dh, (h + 1) * dh);
    Var kh = slice_cols(K, h * dh, (h + 1) * dh);
    Var attn = softmax_masked(
        scale(matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh))), Tensor{});
    for (int64_t i = 0; i < n_clips; ++i)
      for (int64_t j = 0; j < n_keys; ++j) out.at(i, j) += attn->value().at(i, j);
  }
  for (double& v : out.data) v /= static_cast<double>(cfg_.heads);
  return out;
}

Var SentencePath::temporal_encode(Tape& t, Var x, const Tensor& clip_mask) const {
  Var h = add(x, pos_tmp_.rows(t, x->value().rows()));
  for (const auto& layer : s_enc_) h = layer(t, h, clip_mask);
  if (clip_mask.numel() > 0) h = mul_colvec(h, h->graph->constant(clip_mask));
  return h;
}

SentencePath::Out SentencePath::forward(Tape& t, Var clips, const Tensor& clip_mask,
                                        Var global_text) const {
  Var keys = encode_dummies(t, global_text);
  Var x = add(clips, pos_aca_.rows(t, clips->value().rows()));
  Var alpha = nullptr;
  for (int i = 0; i < cfg_.aca_layers; ++i) {
    AcaOut a = cross_attention(t, x, keys, i);
    x = a.combined;
    alpha = a.alpha;
  }
  Out out;
  out.keys = keys;
  out.alpha = alpha;
  out.v_s = temporal_encode(t, x, clip_mask);
  return out;
}

}  // namespace vtg::sent
