// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "vtg/grounding_head.hpp"
#include "vtg/nn.hpp"

namespace vtg::loss {

struct LossWeights {
  double lambda_mr = 5.0;
  double lambda_hd = 1.0;
  double lambda_phrase = 1.0;
  double lambda_attn = 1.0;
  double r_dqa = 0.3;
  double tau = 0.07;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double rank_margin = 0.2;
  int rank_pair_cap = 64;

  void validate() const;
};

struct LossBreakdown {
  double cls = 0, reg = 0;
  double hd_rank_s = 0, hd_contrast_s = 0;
  double hd_rank_alpha = 0, hd_contrast_alpha = 0;
  double dqa = 0, eos_recon = 0;
  double total = 0;
  bool hd_degenerate = false;

  static double combine(const LossBreakdown& b, const LossWeights& w) {
    return w.lambda_mr * (b.cls + b.reg) +
           w.lambda_hd * (b.hd_rank_s + b.hd_contrast_s +
                          w.lambda_attn * (b.hd_rank_alpha + b.hd_contrast_alpha)) +
           w.lambda_phrase * (b.dqa + b.eos_recon);
  }
};

struct PositionTarget {
  bool positive = false;
  int gt_index = -1;
  double left = 0.0, right = 0.0;  // base-clip units
};

using MatchAssignment = std::vector<PositionTarget>;

/// Moment length range handled by a (1-based) pyramid level, in base-clip
/// units: level 1 gets (0, base], level ℓ gets (base·2^(ℓ-2), base·2^(ℓ-1)],
/// and the top level is unbounded above.
std::pair<double, double> level_length_range(int level, int num_levels, double base);

/// A position is positive iff its center lies inside a ground-truth moment
/// whose length falls in its level's range; ties go to the shortest
/// containing moment. Regression targets are exact center-to-edge distances.
MatchAssignment assign_targets(const std::vector<head::PyramidPosition>& positions,
                               const std::vector<std::pair<double, double>>& gt_moments,
                               int64_t t_valid, int num_levels, double range_base);

struct MomentLossOut {
  Var cls = nullptr;
  Var reg = nullptr;
};
/// cls: sigmoid focal loss averaged over valid positions. reg: mean L1 over
/// positive positions in level-stride units (0 when no positives).
MomentLossOut moment_loss(Tape& t, const head::RawMomentPredictions& raw,
                          const MatchAssignment& assign, const LossWeights& w);

struct HighlightLossOut {
  Var rank = nullptr;
  Var contrast = nullptr;
  bool degenerate = false;  // all labels equal; both terms forced to 0
};
/// scores: [T] (padded); labels per valid clip. Pairs are (label>=3,
/// label<=1) in index order, capped; contrast is InfoNCE with max-label
/// clips as positives over all valid clips.
HighlightLossOut highlight_loss(Tape& t, Var scores, const std::vector<int>& labels,
                                int64_t t_valid, const LossWeights& w);

/// (1/B) Σ ‖A_i A_iᵀ − r·I‖_F².
Var dqa_loss(Tape& t, const std::vector<Var>& attn_per_sample, double r);
/// Single-sample Frobenius term (batch loss = mean of these).
Var dqa_term(Tape& t, Var attn, double r);

/// InfoNCE over cosine similarity with in-batch negatives. eos_batch holds
/// the (constant) target embeddings of every sample in the batch.
Var eos_recon_loss(Tape& t, const std::vector<Var>& p_eos_batch,
                   const std::vector<Tensor>& eos_batch, double tau);
/// Term for one sample against the whole batch of targets.
Var eos_recon_term(Tape& t, Var p_eos, const std::vector<Tensor>& eos_batch, size_t idx,
                   double tau);

LossBreakdown total_loss(const LossBreakdown& parts, const LossWeights& w);

}  // namespace vtg::loss
