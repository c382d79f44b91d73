// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vtg/nn.hpp"

namespace vtg::sent {

struct Config {
  int64_t d = 256;
  int64_t l_d = 3;  // learnable dummy tokens
  int heads = 8;
  int d_enc_layers = 2;
  int aca_layers = 3;
  int s_enc_layers = 2;
  int64_t mlp_hidden = 1024;
  int64_t max_t = 512;
  NormMode norm = NormMode::kPostNorm;
};

/// Sentence-level branch: a bank of dummy tokens contextualized against the
/// sentence token, cross attention where clips read only the sentence key
/// (dummies soak up off-topic attention), then temporal self attention.
class SentencePath {
 public:
  SentencePath(ParamStore& ps, const Config& cfg, uint64_t seed);

  /// [D; eos] -> dummy encoder -> keys [l_d+1, d]; the last row is the
  /// untouched eos embedding. eos: [1, d].
  Var encode_dummies(Tape& t, Var eos) const;

  struct AcaOut {
    Var combined;      // [T,d], residual + layer norm
    Var pre_residual;  // [T,d], alpha-scaled sentence values only
    Var alpha;         // [T], head-mean attention mass on the sentence key
    std::vector<Var> head_attn;  // per head [T, l_d+1]
  };
  /// One cross-attention layer of the stack (layer < cfg.aca_layers).
  AcaOut cross_attention(Tape& t, Var clips, Var keys, int layer) const;

  /// Temporal self-attention stack; masked rows are zeroed on output.
  Var temporal_encode(Tape& t, Var x, const Tensor& clip_mask) const;

  struct Out {
    Var v_s;    // [T,d]
    Var alpha;  // [T] from the final cross-attention layer
    Var keys;   // [l_d+1, d]
  };
  /// global_text: [1,d]; the eos embedding, or its substitute under the
  /// word_only diagnostic condition.
  Out forward(Tape& t, Var clips, const Tensor& clip_mask, Var global_text) const;

  /// Head-mean softmax attention of one cross-attention layer against an
  /// arbitrary key sequence (used by the diagnostic word+eos attention map).
  Tensor extended_attention(Tape& t, Var clips, Var keys, int layer) const;

  const Config& config() const { return cfg_; }
  Param* dummies() const { return dummies_; }
  PositionTable& position_table_aca() { return pos_aca_; }
  const PositionTable& position_table_aca() const { return pos_aca_; }
  PositionTable& position_table_temporal() { return pos_tmp_; }

 private:
  Config cfg_;
  Param* dummies_ = nullptr;  // [l_d, d]
  std::vector<TransformerLayer> d_enc_;
  struct AcaLayer {
    Linear q, k, v, o;
    LayerNorm ln;
  };
  std::vector<AcaLayer> aca_;
  std::vector<TransformerLayer> s_enc_;
  PositionTable pos_aca_, pos_tmp_;
};

}  // namespace vtg::sent
