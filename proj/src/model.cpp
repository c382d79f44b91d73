// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/model.hpp"

#include <cmath>

#include "vtg/errors.hpp"

namespace vtg {

TokenCondition token_condition_from_string(const std::string& s) {
  if (s == "full") return TokenCondition::kFull;
  if (s == "word_only") return TokenCondition::kWordOnly;
  if (s == "eos_only") return TokenCondition::kEosOnly;
  throw ConfigError("token_condition: unknown mode '" + s +
                    "' (expected full|word_only|eos_only)");
}

std::string token_condition_to_string(TokenCondition c) {
  switch (c) {
    case TokenCondition::kFull: return "full";
    case TokenCondition::kWordOnly: return "word_only";
    case TokenCondition::kEosOnly: return "eos_only";
  }
  return "full";
}

sent::Config sentence_config_of(const ModelConfig& m) {
  sent::Config c;
  c.d = m.d;
  c.l_d = m.l_d;
  c.heads = m.heads;
  c.d_enc_layers = m.layers.d_enc;
  c.aca_layers = m.layers.aca;
  c.s_enc_layers = m.layers.s_enc;
  c.mlp_hidden = m.d * m.mlp_ratio;
  c.max_t = m.max_t;
  return c;
}

phrase::Config phrase_config_of(const ModelConfig& m) {
  phrase::Config c;
  c.d = m.d;
  c.n_phrases = m.n_phrases;
  c.heads = m.heads;
  c.slot_iters = m.layers.p_sa;
  c.p_enc_layers = m.layers.p_enc;
  c.mlp_hidden = m.d * m.mlp_ratio;
  c.max_t = m.max_t;
  c.max_l = m.max_l;
  return c;
}

head::Config head_config_of(const ModelConfig& m) {
  head::Config c;
  c.d = m.d;
  c.num_levels = m.pyramid_levels;
  c.fusion = head::fusion_from_string(m.fusion);
  c.offset_range_base = m.offset_range_base;
  return c;
}

DualPathModel::DualPathModel(const ModelConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      sent_(params_, sentence_config_of(cfg), seed),
      phr_(params_, phrase_config_of(cfg), seed),
      head_(params_, head_config_of(cfg), seed) {}

namespace {

/// Mean of the unmasked word embeddings as a [1,d] graph node.
Var mean_of_words(Tape& t, Var words, const Tensor& word_mask) {
  const int64_t n = words->value().rows();
  double cnt = 0.0;
  for (int64_t i = 0; i < n; ++i)
    if (word_mask.numel() == 0 || word_mask.at(i) != 0.0) cnt += 1.0;
  check_shape(cnt > 0.0, "mean_of_words: no unmasked words");
  Tensor w({1, n});
  for (int64_t i = 0; i < n; ++i)
    if (word_mask.numel() == 0 || word_mask.at(i) != 0.0) w.at(0, i) = 1.0 / cnt;
  return matmul(t.g.constant(w), words);
}

}  // namespace

DualPathModel::Forward DualPathModel::forward(Tape& t, const data::PaddedSample& s,
                                              TokenCondition cond) const {
  const int64_t T = s.clips.rows();
  if (T > cfg_.max_t)
    throw ConfigError("sample has T=" + std::to_string(T) +
                      " clips; raise model.max_t (currently " +
                      std::to_string(cfg_.max_t) + ")");
  if (s.words.rows() > cfg_.max_l)
    throw ConfigError("sample has more words than model.max_l");

  Graph& g = t.g;
  Var clips = g.constant(s.clips);
  Var words = g.constant(s.words);
  Var eos = g.constant(Tensor({1, s.eos.numel()}, s.eos.data));
  Tensor word_mask = s.word_mask;

  // token-condition surgeries
  Var sent_global = eos;
  if (cond == TokenCondition::kWordOnly) sent_global = mean_of_words(t, words, word_mask);
  Var phr_words = words;
  Tensor phr_mask = word_mask;
  if (cond == TokenCondition::kEosOnly) {
    phr_words = eos;  // single pseudo-word
    phr_mask = Tensor::full({1}, 1.0);
  }

  Forward out;
  sent::SentencePath::Out so = sent_.forward(t, clips, s.clip_mask, sent_global);
  out.v_s = so.v_s;
  out.alpha = so.alpha;

  phrase::PhrasePath::Out po = phr_.forward(t, phr_words, phr_mask, eos, clips, s.clip_mask);
  out.v_p = po.v_p;
  out.attn = po.attn;
  out.slot_w = po.slot_weights;
  out.p_eos = po.p_eos;
  out.phrase_weights = po.weights;

  out.fused = head_.fuse(t, out.v_s, out.v_p);
  out.pyramid = head_.build_pyramid(t, out.fused, s.clip_mask);
  out.raw = head_.predict_moments(t, out.pyramid);

  Var global_vec = add(out.p_eos, head_.project_global(t, eos));
  out.saliency = head_.predict_saliency(t, out.fused, global_vec);
  return out;
}

Tensor DualPathModel::diagnostic_attention(const data::PaddedSample& s) const {
  Graph g;
  Tape t(g, params_.size());
  Var clips = g.constant(s.clips);
  Var eos = g.constant(Tensor({1, s.eos.numel()}, s.eos.data));
  Var keys = sent_.encode_dummies(t, eos);
  const sent::Config& sc = sent_.config();

  Var x = add(clips, sent_.position_table_aca().rows(t, s.clips.rows()));
  for (int i = 0; i + 1 < sc.aca_layers; ++i)
    x = sent_.cross_attention(t, x, keys, i).combined;

  // final layer, keys extended with the unmasked words: [dummies; words; eos]
  std::vector<int64_t> live_words;
  for (int64_t i = 0; i < s.words.rows(); ++i)
    if (s.word_mask.numel() == 0 || s.word_mask.at(i) != 0.0) live_words.push_back(i);
  Var words = gather_rows(g.constant(s.words), live_words);
  Var ext;
  if (sc.l_d > 0)
    ext = concat_rows({slice_rows(keys, 0, sc.l_d), words, eos});
  else
    ext = concat_rows({words, eos});
  Tensor attn = sent_.extended_attention(t, x, ext, sc.aca_layers - 1);

  // rows: words then eos, columns: valid clips
  const int64_t nw = static_cast<int64_t>(live_words.size());
  Tensor out({nw + 1, s.t_valid});
  for (int64_t r = 0; r < nw + 1; ++r) {
    const int64_t key_idx = sc.l_d + r;
    for (int64_t c = 0; c < s.t_valid; ++c) out.at(r, c) = attn.at(c, key_idx);
  }
  return out;
}

}  // namespace vtg
