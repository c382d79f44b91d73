// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vtg/nn.hpp"

namespace vtg::phrase {

struct Config {
  int64_t d = 256;
  int64_t n_phrases = 4;
  int heads = 8;
  int slot_iters = 2;    // refinement iterations, parameters shared
  int p_enc_layers = 2;  // temporal self-attention per phrase stream
  int64_t mlp_hidden = 1024;
  int64_t max_t = 512;
  int64_t max_l = 64;
  NormMode norm = NormMode::kPostNorm;
};

/// Phrase-level branch: word tokens are softly clustered into a fixed number
/// of phrase embeddings (recurrent generation guided by the sentence token),
/// refined with slot attention, re-summarized through a learnable global
/// token, then matched against clips via Hadamard context embeddings.
class PhrasePath {
 public:
  PhrasePath(ParamStore& ps, const Config& cfg, uint64_t seed);

  struct Generated {
    Var phrases;  // [N, d]
    Var attn;     // [N, L-1]: rows are distributions over unmasked words
  };
  /// words: [L-1, d] raw embeddings; eos: [1, d]. Attention logits use
  /// position-embedded words; the aggregated values are the raw embeddings.
  Generated generate(Tape& t, Var words, const Tensor& word_mask, Var eos) const;

  struct Refined {
    Var phrases;       // [N, d]
    Var slot_weights;  // [N, L-1] final-iteration per-slot weights
  };
  /// Slot refinement: softmax across slots per word, then per-slot
  /// renormalization over words; residual MLP update. Iterations share
  /// parameters.
  Refined refine(Tape& t, Var phrases, Var words, const Tensor& word_mask) const;

  struct Reconstructed {
    Var phrases;  // [N, d]
    Var p_eos;    // [1, d]
  };
  /// Joint self-attention over [P; P_eos] (no positional encoding).
  Reconstructed reconstruct_global(Tape& t, Var phrases) const;

  /// Per-phrase clip context: f_ctx(f_p(p_n) ⊙ f_v(v_t)) followed by the
  /// temporal encoder stack. Returns N matrices [T, d].
  std::vector<Var> clip_context(Tape& t, Var phrases, Var clips,
                                const Tensor& clip_mask) const;

  struct Aggregated {
    Var v_p;      // [T, d]
    Var weights;  // [N], softmax over phrases, shared across clips
  };
  Aggregated aggregate(Tape& t, const std::vector<Var>& context, Var phrases,
                       Var p_eos) const;

  struct Out {
    Var v_p;
    Var attn;          // generation attention (the DQA input)
    Var slot_weights;  // refinement diagnostics
    Var phrases;       // post-reconstruction phrase set
    Var p_eos;         // updated global token
    Var weights;       // aggregation weights
  };
  Out forward(Tape& t, Var words, const Tensor& word_mask, Var eos, Var clips,
              const Tensor& clip_mask) const;

  const Config& config() const { return cfg_; }
  Param* global_token() const { return p_eos_; }
  PositionTable& word_positions() { return word_pos_; }
  PositionTable& clip_positions() { return clip_pos_; }
  Mlp& f_p() { return f_p_; }
  Mlp& f_v() { return f_v_; }
  Mlp& f_ctx() { return f_ctx_; }
  Mlp& slot_mlp() { return slot_mlp_; }
  std::vector<TransformerLayer>& temporal_layers() { return p_enc_; }
  TransformerLayer& recon_layer() { return recon_; }

 private:
  Config cfg_;
  std::vector<Linear> guide_proj_;  // per-step W_q^(n), no bias
  Mlp phi_;                         // [proj eos ; prev phrase] -> guide
  PositionTable word_pos_, clip_pos_;
  Linear slot_q_, slot_k_, slot_v_;
  Mlp slot_mlp_;
  Param* p_eos_ = nullptr;  // learnable global token init
  TransformerLayer recon_;
  Mlp f_p_, f_v_, f_ctx_;  // residual MLPs
  std::vector<TransformerLayer> p_enc_;
  Linear agg_q_, agg_k_;
};

}  // namespace vtg::phrase
