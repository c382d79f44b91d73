// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/phrase_path.hpp"

#include <cmath>
#include <stdexcept>

namespace vtg::phrase {

PhrasePath::PhrasePath(ParamStore& ps, const Config& cfg, uint64_t seed) : cfg_(cfg) {
  check_shape(cfg.n_phrases >= 1, "phrase path: need n_phrases >= 1");
  for (int64_t n = 0; n < cfg.n_phrases; ++n)
    guide_proj_.emplace_back(ps, "phr.guide" + std::to_string(n), cfg.d, cfg.d, seed,
                             /*bias=*/false);
  phi_ = Mlp(ps, "phr.phi", 2 * cfg.d, cfg.d, cfg.d, seed);
  // word positions start at a usable scale: phrase composition is supposed to
  // group neighboring words, so the position signal must survive against the
  // unit-norm word content from step one
  word_pos_ = PositionTable(ps, "phr.pos_word", cfg.max_l, cfg.d, seed, 1.0);
  clip_pos_ = PositionTable(ps, "phr.pos_clip", cfg.max_t, cfg.d, seed);
  slot_q_ = Linear(ps, "phr.slot_q", cfg.d, cfg.d, seed, /*bias=*/false);
  slot_k_ = Linear(ps, "phr.slot_k", cfg.d, cfg.d, seed, /*bias=*/false);
  slot_v_ = Linear(ps, "phr.slot_v", cfg.d, cfg.d, seed, /*bias=*/false);
  slot_mlp_ = Mlp(ps, "phr.slot_mlp", cfg.d, cfg.d, cfg.d, seed);
  p_eos_ = ps.add("phr.p_eos", uniform_init({1, cfg.d}, 0.02, seed, "phr.p_eos"));
  recon_ = TransformerLayer(ps, "phr.recon", cfg.d, cfg.heads, cfg.mlp_hidden, seed,
                            cfg.norm);
  f_p_ = Mlp(ps, "phr.f_p", cfg.d, cfg.d, cfg.d, seed, /*residual=*/true);
  f_v_ = Mlp(ps, "phr.f_v", cfg.d, cfg.d, cfg.d, seed, /*residual=*/true);
  f_ctx_ = Mlp(ps, "phr.f_ctx", cfg.d, cfg.d, cfg.d, seed, /*residual=*/true);
  for (int i = 0; i < cfg.p_enc_layers; ++i)
    p_enc_.emplace_back(ps, "phr.penc" + std::to_string(i), cfg.d, cfg.heads,
                        cfg.mlp_hidden, seed, cfg.norm);
  agg_q_ = Linear(ps, "phr.agg_q", cfg.d, cfg.d, seed, /*bias=*/false);
  agg_k_ = Linear(ps, "phr.agg_k", cfg.d, cfg.d, seed, /*bias=*/false);
}

PhrasePath::Generated PhrasePath::generate(Tape& t, Var words, const Tensor& word_mask,
                                           Var eos) const {
  const int64_t n_words = words->value().rows();
  bool any = word_mask.numel() == 0;
  for (int64_t i = 0; i < word_mask.numel(); ++i)
    if (word_mask.at(i) != 0.0) any = true;
  if (!any) throw std::invalid_argument("generate_phrases: all words masked");

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
  Var words_pos = add(words, word_pos_.rows(t, n_words));
  Var prev = t.g.constant(Tensor({1, cfg_.d}));  // zero placeholder for step 1
  std::vector<Var> rows_a, rows_p;
  for (int64_t n = 0; n < cfg_.n_phrases; ++n) {
    Var cond = guide_proj_[static_cast<size_t>(n)](t, eos);
    Var guide = phi_(t, concat_cols({cond, prev}));
    Var logits = scale(matmul_nt(guide, words_pos), inv_sqrt_d);  // [1, L-1]
    Var a = softmax_masked(logits, word_mask);
    Var p = matmul(a, words);  // raw word embeddings as values
    rows_a.push_back(a);
    rows_p.push_back(p);
    prev = p;
  }
  return {concat_rows(rows_p), concat_rows(rows_a)};
}

PhrasePath::Refined PhrasePath::refine(Tape& t, Var phrases, Var words,
                                       const Tensor& word_mask) const {
  const int64_t n_words = words->value().rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
  Var k = slot_k_(t, words);
  Var v = slot_v_(t, words);
  Var slots = phrases;
  Var weights = nullptr;
  for (int iter = 0; iter < cfg_.slot_iters; ++iter) {
    Var q = slot_q_(t, slots);
    Var logits = scale(matmul_nt(q, k), inv_sqrt_d);  // [N, L-1]
    // softmax across the slot axis, one column per word
    Tensor col_max({n_words});
    for (int64_t j = 0; j < n_words; ++j) {
      double mx = -HUGE_VAL;
      for (int64_t n = 0; n < cfg_.n_phrases; ++n)
        mx = std::max(mx, logits->value().at(n, j));
      col_max.at(j) = -mx;
    }
    Var e = exp_of(add_rowvec(logits, t.g.constant(col_max)));
    Var attn = mul_rowvec(e, pow_const(col_sums(e), -1.0));
    if (word_mask.numel() > 0) attn = mul_rowvec(attn, t.g.constant(word_mask));
    // per-slot renormalization over words
    weights = mul_colvec(attn, pow_const(row_sums(attn), -1.0));
    Var update = matmul(weights, v);
    slots = add(slots, slot_mlp_(t, update));
  }
  return {slots, weights};
}

PhrasePath::Reconstructed PhrasePath::reconstruct_global(Tape& t, Var phrases) const {
  Var seq = concat_rows({phrases, t(p_eos_)});
  seq = recon_(t, seq, Tensor{});
  return {slice_rows(seq, 0, cfg_.n_phrases),
          slice_rows(seq, cfg_.n_phrases, cfg_.n_phrases + 1)};
}

std::vector<Var> PhrasePath::clip_context(Tape& t, Var phrases, Var clips,
                                          const Tensor& clip_mask) const {
  const int64_t n_clips = clips->value().rows();
  Var fp = f_p_(t, phrases);
  Var fv = f_v_(t, clips);
  Var pos = clip_pos_.rows(t, n_clips);
  std::vector<Var> ctx;
  for (int64_t n = 0; n < cfg_.n_phrases; ++n) {
    Var pn = flatten(slice_rows(fp, n, n + 1));
    Var c = f_ctx_(t, mul_rowvec(fv, pn));
    c = add(c, pos);
    for (const auto& layer : p_enc_) c = layer(t, c, clip_mask);
    if (clip_mask.numel() > 0) c = mul_colvec(c, t.g.constant(clip_mask));
    ctx.push_back(c);
  }
  return ctx;
}

PhrasePath::Aggregated PhrasePath::aggregate(Tape& t, const std::vector<Var>& context,
                                             Var phrases, Var p_eos) const {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
  Var q = agg_q_(t, p_eos);    // [1, d]
  Var k = agg_k_(t, phrases);  // [N, d]
  Var logits = scale(matmul_nt(q, k), inv_sqrt_d);  // [1, N]
  Var w = softmax_masked(logits, Tensor{});
  Var v_p = nullptr;
  for (int64_t n = 0; n < cfg_.n_phrases; ++n) {
    Var term = mul_scalar(context[static_cast<size_t>(n)], flatten(slice_cols(w, n, n + 1)));
    v_p = v_p ? add(v_p, term) : term;
  }
  return {v_p, flatten(w)};
}

PhrasePath::Out PhrasePath::forward(Tape& t, Var words, const Tensor& word_mask, Var eos,
                                    Var clips, const Tensor& clip_mask) const {
  Generated gen = generate(t, words, word_mask, eos);
  Refined ref = refine(t, gen.phrases, words, word_mask);
  Reconstructed rec = reconstruct_global(t, ref.phrases);
  std::vector<Var> ctx = clip_context(t, rec.phrases, clips, clip_mask);
  Aggregated agg = aggregate(t, ctx, rec.phrases, rec.p_eos);
  Out out;
  out.v_p = agg.v_p;
  out.attn = gen.attn;
  out.slot_weights = ref.slot_weights;
  out.phrases = rec.phrases;
  out.p_eos = rec.p_eos;
  out.weights = agg.weights;
  return out;
}

}  // namespace vtg::phrase
