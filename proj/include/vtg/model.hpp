// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "vtg/config.hpp"
#include "vtg/data_io.hpp"
#include "vtg/grounding_head.hpp"
#include "vtg/phrase_path.hpp"
#include "vtg/sentence_path.hpp"

namespace vtg {

/// Text-token ablation conditions. word_only swaps the sentence path's
/// conditioning vector for the mean of the word embeddings; eos_only feeds
/// the phrase path a single pseudo-word (the eos embedding). full touches
/// nothing.
enum class TokenCondition { kFull, kWordOnly, kEosOnly };

TokenCondition token_condition_from_string(const std::string& s);
std::string token_condition_to_string(TokenCondition c);

/// The dual-path grounding model: sentence path and phrase path fused into a
/// shared representation feeding the moment pyramid and the saliency head.
class DualPathModel {
 public:
  DualPathModel(const ModelConfig& cfg, uint64_t seed);

  struct Forward {
    Var v_s = nullptr;       // [T,d]
    Var alpha = nullptr;     // [T]
    Var v_p = nullptr;       // [T,d]
    Var attn = nullptr;      // [N, L-1] generation attention
    Var slot_w = nullptr;    // [N, L-1]
    Var p_eos = nullptr;     // [1,d] updated global token
    Var phrase_weights = nullptr;  // [N]
    Var fused = nullptr;     // [T,d]
    Var saliency = nullptr;  // [T]
    head::Pyramid pyramid;
    head::RawMomentPredictions raw;
  };

  Forward forward(Tape& t, const data::PaddedSample& s,
                  TokenCondition cond = TokenCondition::kFull) const;

  /// Head-mean attention of the final cross-attention layer with the key set
  /// extended by the word tokens: rows are the unmasked words followed by
  /// eos, columns the valid clips. Diagnostic only; the production paths
  /// never expose a joint word+eos attention map.
  Tensor diagnostic_attention(const data::PaddedSample& s) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  sent::SentencePath& sentence_path() { return sent_; }
  phrase::PhrasePath& phrase_path() { return phr_; }
  head::GroundingHead& grounding_head() { return head_; }

 private:
  ModelConfig cfg_;
  ParamStore params_;
  sent::SentencePath sent_;
  phrase::PhrasePath phr_;
  head::GroundingHead head_;
};

sent::Config sentence_config_of(const ModelConfig& m);
phrase::Config phrase_config_of(const ModelConfig& m);
head::Config head_config_of(const ModelConfig& m);

}  // namespace vtg
