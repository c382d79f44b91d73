// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vtg/errors.hpp"

namespace vtg::loss {

void LossWeights::validate() const {
  if (lambda_mr <= 0 || lambda_hd <= 0 || lambda_phrase <= 0 || lambda_attn <= 0)
    throw ConfigError("loss: lambda weights must be positive");
  if (r_dqa <= 0) throw ConfigError("loss.r_dqa must be positive");
  if (tau <= 0) throw ConfigError("loss.tau must be positive");
  if (focal_alpha <= 0 || focal_alpha >= 1) throw ConfigError("loss.focal_alpha in (0,1)");
  if (focal_gamma <= 0) throw ConfigError("loss.focal_gamma must be positive");
  if (rank_margin <= 0) throw ConfigError("loss.rank_margin must be positive");
}

std::pair<double, double> level_length_range(int level, int num_levels, double base) {
  const double lo = level == 1 ? 0.0 : base * std::pow(2.0, level - 2);
  const double hi = level == num_levels ? std::numeric_limits<double>::infinity()
                                        : base * std::pow(2.0, level - 1);
  return {lo, hi};
}

MatchAssignment assign_targets(const std::vector<head::PyramidPosition>& positions,
                               const std::vector<std::pair<double, double>>& gt_moments,
                               int64_t t_valid, int num_levels, double range_base) {
  const double tv = static_cast<double>(t_valid);
  MatchAssignment out(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    const head::PyramidPosition& p = positions[i];
    if (!p.valid) continue;
    const auto [lo, hi] = level_length_range(p.level, num_levels, range_base);
    int best = -1;
    double best_len = std::numeric_limits<double>::infinity();
    for (size_t g = 0; g < gt_moments.size(); ++g) {
      const double s = gt_moments[g].first * tv;
      const double e = gt_moments[g].second * tv;
      const double len = e - s;
      if (p.center < s || p.center >= e) continue;
      if (!(len > lo && len <= hi)) continue;
      if (len < best_len) {
        best_len = len;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      out[i].positive = true;
      out[i].gt_index = best;
      out[i].left = p.center - gt_moments[static_cast<size_t>(best)].first * tv;
      out[i].right = gt_moments[static_cast<size_t>(best)].second * tv - p.center;
    }
  }
  return out;
}

MomentLossOut moment_loss(Tape& t, const head::RawMomentPredictions& raw,
                          const MatchAssignment& assign, const LossWeights& w) {
  const int64_t P = raw.cls_logits->value().numel();
  check_shape(static_cast<int64_t>(assign.size()) == P, "moment_loss assignment size");
  Tensor y({P}), valid({P});
  int64_t n_valid = 0;
  std::vector<int64_t> pos_idx;
  for (int64_t i = 0; i < P; ++i) {
    const bool v = raw.positions[static_cast<size_t>(i)].valid;
    valid.at(i) = v ? 1.0 : 0.0;
    n_valid += v ? 1 : 0;
    if (v && assign[static_cast<size_t>(i)].positive) {
      y.at(i) = 1.0;
      pos_idx.push_back(i);
    }
  }
  check_shape(n_valid > 0, "moment_loss: no valid positions");

  Graph& g = t.g;
  Var x = raw.cls_logits;
  Var p = sigmoid(x);
  Var one = g.constant(Tensor::full({P}, 1.0));
  Var yv = g.constant(y);
  Var pos_part = mul(pow_const(sub(one, p), w.focal_gamma), softplus(neg(x)));
  Var neg_part = mul(pow_const(p, w.focal_gamma), softplus(x));
  Var terms = add(scale(mul(yv, pos_part), w.focal_alpha),
                  scale(mul(sub(one, yv), neg_part), 1.0 - w.focal_alpha));
  MomentLossOut out;
  out.cls = scale(sum(mul(terms, g.constant(valid))), 1.0 / static_cast<double>(n_valid));

  if (pos_idx.empty()) {
    out.reg = g.constant(Tensor({1}));
    return out;
  }
  Tensor tgt({static_cast<int64_t>(pos_idx.size()), 2});
  for (size_t r = 0; r < pos_idx.size(); ++r) {
    const auto& a = assign[static_cast<size_t>(pos_idx[r])];
    const double stride = raw.positions[static_cast<size_t>(pos_idx[r])].stride;
    tgt.at(static_cast<int64_t>(r), 0) = a.left / stride;
    tgt.at(static_cast<int64_t>(r), 1) = a.right / stride;
  }
  Var pred = gather_rows(raw.offsets_norm, pos_idx);
  out.reg = mean(abs_of(sub(pred, g.constant(tgt))));
  return out;
}

HighlightLossOut highlight_loss(Tape& t, Var scores, const std::vector<int>& labels,
                                int64_t t_valid, const LossWeights& w) {
  check_shape(static_cast<int64_t>(labels.size()) >= t_valid, "highlight labels length");
  for (int64_t i = 0; i < t_valid; ++i)
    if (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] > 4)
      throw std::invalid_argument("highlight_loss: labels must lie in [0,4]");
  Graph& g = t.g;
  HighlightLossOut out;
  int lab_min = 5, lab_max = -1;
  for (int64_t i = 0; i < t_valid; ++i) {
    lab_min = std::min(lab_min, labels[static_cast<size_t>(i)]);
    lab_max = std::max(lab_max, labels[static_cast<size_t>(i)]);
  }
  if (lab_min == lab_max) {
    out.rank = g.constant(Tensor({1}));
    out.contrast = g.constant(Tensor({1}));
    out.degenerate = true;
    return out;
  }

  // ranking pairs: (label>=3, label<=1), index order, capped
  std::vector<int64_t> hi_idx, lo_idx;
  for (int64_t h = 0; h < t_valid && static_cast<int>(hi_idx.size()) < w.rank_pair_cap; ++h) {
    if (labels[static_cast<size_t>(h)] < 3) continue;
    for (int64_t l = 0; l < t_valid && static_cast<int>(hi_idx.size()) < w.rank_pair_cap; ++l) {
      if (labels[static_cast<size_t>(l)] > 1) continue;
      hi_idx.push_back(h);
      lo_idx.push_back(l);
    }
  }
  if (hi_idx.empty()) {
    out.rank = g.constant(Tensor({1}));
  } else {
    Var xh = gather_vec(scores, hi_idx);
    Var xl = gather_vec(scores, lo_idx);
    Var margin = g.constant(Tensor::full({static_cast<int64_t>(hi_idx.size())}, w.rank_margin));
    out.rank = mean(relu(add(sub(xl, xh), margin)));
  }

  // InfoNCE: positives are the max-label clips, denominator over valid clips
  std::vector<int64_t> pos_idx;
  for (int64_t i = 0; i < t_valid; ++i)
    if (labels[static_cast<size_t>(i)] == lab_max) pos_idx.push_back(i);
  Var s_valid = slice_vec(scores, 0, t_valid);
  Var scaled = scale(s_valid, 1.0 / w.tau);
  Var lse = logsumexp_masked(scaled, Tensor{});
  Var pos_mean = mean(gather_vec(scaled, pos_idx));
  out.contrast = sub(lse, pos_mean);
  return out;
}

Var dqa_term(Tape& t, Var attn, double r) {
  const int64_t n = attn->value().rows();
  Tensor ri({n, n});
  for (int64_t i = 0; i < n; ++i) ri.at(i, i) = r;
  Var d = sub(matmul_nt(attn, attn), t.g.constant(ri));
  return sum(mul(d, d));
}

Var dqa_loss(Tape& t, const std::vector<Var>& attn_per_sample, double r) {
  check_shape(!attn_per_sample.empty(), "dqa_loss: empty batch");
  Var total = nullptr;
  for (Var a : attn_per_sample) {
    Var term = dqa_term(t, a, r);
    total = total ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(attn_per_sample.size()));
}

namespace {
double tensor_norm(const Tensor& v) {
  double s = 0.0;
  for (double x : v.data) s += x * x;
  return std::sqrt(s);
}
}  // namespace

Var eos_recon_term(Tape& t, Var p_eos, const std::vector<Tensor>& eos_batch, size_t idx,
                   double tau) {
  Graph& g = t.g;
  Var pf = flatten(p_eos);
  const double pn = tensor_norm(pf->value());
  if (pn < 1e-12)
    throw std::invalid_argument("eos_recon: zero-norm reconstructed token");
  Var inv_pn = pow_const(sqrt_of(dot(pf, pf)), -1.0);
  std::vector<Var> sims;
  for (const Tensor& e : eos_batch) {
    const double en = tensor_norm(e);
    if (en < 1e-12) throw std::invalid_argument("eos_recon: zero-norm target embedding");
    Var c = mul(dot(pf, g.constant(e)), inv_pn);
    sims.push_back(scale(c, 1.0 / (en * tau)));
  }
  Var sv = concat_vec(sims);
  return sub(logsumexp_masked(sv, Tensor{}), slice_vec(sv, static_cast<int64_t>(idx),
                                                       static_cast<int64_t>(idx) + 1));
}

Var eos_recon_loss(Tape& t, const std::vector<Var>& p_eos_batch,
                   const std::vector<Tensor>& eos_batch, double tau) {
  check_shape(!p_eos_batch.empty() && p_eos_batch.size() == eos_batch.size(),
              "eos_recon batch sizes");
  Var total = nullptr;
  for (size_t i = 0; i < p_eos_batch.size(); ++i) {
    Var term = eos_recon_term(t, p_eos_batch[i], eos_batch, i, tau);
    total = total ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(p_eos_batch.size()));
}

LossBreakdown total_loss(const LossBreakdown& parts, const LossWeights& w) {
  LossBreakdown out = parts;
  out.total = LossBreakdown::combine(parts, w);
  return out;
}

}  // namespace vtg::loss
