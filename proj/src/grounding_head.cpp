// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/grounding_head.hpp"

#include <algorithm>
#include <cmath>

#include "vtg/errors.hpp"

namespace vtg::head {

Fusion fusion_from_string(const std::string& s) {
  if (s == "add") return Fusion::kAdd;
  if (s == "hadamard") return Fusion::kHadamard;
  if (s == "gate") return Fusion::kGate;
  if (s == "concat_mlp") return Fusion::kConcatMlp;
  throw ConfigError("model.fusion: unknown strategy '" + s +
                    "' (expected add|hadamard|gate|concat_mlp)");
}

std::string fusion_to_string(Fusion f) {
  switch (f) {
    case Fusion::kAdd: return "add";
    case Fusion::kHadamard: return "hadamard";
    case Fusion::kGate: return "gate";
    case Fusion::kConcatMlp: return "concat_mlp";
  }
  return "add";
}

GroundingHead::GroundingHead(ParamStore& ps, const Config& cfg, uint64_t seed) : cfg_(cfg) {
  check_shape(cfg.num_levels >= 1, "grounding head: num_levels >= 1");
  gate_ = Linear(ps, "head.gate", 2 * cfg.d, cfg.d, seed);
  concat_proj_ = Linear(ps, "head.concat", 2 * cfg.d, cfg.d, seed);
  for (int i = 0; i < cfg.num_levels; ++i) {
    const std::string nm = "head.pyr" + std::to_string(i);
    Level l;
    l.w = ps.add(nm + ".w", xavier_init(cfg.d, cfg.d * 3, seed, nm + ".w"));
    l.b = ps.add(nm + ".b", Tensor({cfg.d}));
    l.ln = LayerNorm(ps, nm + ".ln", cfg.d);
    pyr_.push_back(l);
  }
  trunk1_w_ = ps.add("head.trunk1.w", xavier_init(cfg.d, cfg.d * 3, seed, "head.trunk1.w"));
  trunk1_b_ = ps.add("head.trunk1.b", Tensor({cfg.d}));
  trunk2_w_ = ps.add("head.trunk2.w", xavier_init(cfg.d, cfg.d * 3, seed, "head.trunk2.w"));
  trunk2_b_ = ps.add("head.trunk2.b", Tensor({cfg.d}));
  cls_ = Linear(ps, "head.cls", cfg.d, 1, seed);
  reg_ = Linear(ps, "head.reg", cfg.d, 2, seed);
  sal_w_ = ps.add("head.sal.w", xavier_init(1, cfg.d, seed, "head.sal.w"));
  sal_b_ = ps.add("head.sal.b", Tensor({1}));
  eos_proj_ = Linear(ps, "head.eos_proj", cfg.d, cfg.d, seed, /*bias=*/false);
}

Var GroundingHead::fuse(Tape& t, Var v_s, Var v_p) const {
  check_shape(v_s->value().same_shape(v_p->value()), "fuse inputs");
  switch (cfg_.fusion) {
    case Fusion::kAdd: return add(v_s, v_p);
    case Fusion::kHadamard: return mul(v_s, v_p);
    case Fusion::kGate: {
      Var g = sigmoid(gate_(t, concat_cols({v_s, v_p})));
      Var ones = t.g.constant(Tensor::full(g->value().shape, 1.0));
      return add(mul(g, v_s), mul(sub(ones, g), v_p));
    }
    case Fusion::kConcatMlp: return concat_proj_(t, concat_cols({v_s, v_p}));
  }
  throw ConfigError("fuse: unreachable strategy");
}

Pyramid GroundingHead::build_pyramid(Tape& t, Var fused, const Tensor& clip_mask) const {
  const int64_t T = fused->value().rows();
  const int64_t min_t = int64_t{1} << (cfg_.num_levels - 1);
  if (T < min_t)
    throw ConfigError("build_pyramid: T=" + std::to_string(T) + " too short for " +
                      std::to_string(cfg_.num_levels) + " levels (minimum T is " +
                      std::to_string(min_t) + ")");
  Pyramid out;
  Var x = fused;
  Tensor mask = clip_mask.numel() ? clip_mask : Tensor::full({T}, 1.0);
  for (int i = 0; i < cfg_.num_levels; ++i) {
    const int stride = i == 0 ? 1 : 2;
    x = mul_colvec(x, t.g.constant(mask));  // padding must not leak into the conv
    x = conv1d(x, t(pyr_[static_cast<size_t>(i)].w), t(pyr_[static_cast<size_t>(i)].b),
               stride);
    x = pyr_[static_cast<size_t>(i)].ln(t, x);
    if (stride == 2) {
      const int64_t n = x->value().rows();
      Tensor next({n});
      for (int64_t j = 0; j < n; ++j) {
        const bool a = mask.at(2 * j) != 0.0;
        const bool b = 2 * j + 1 < mask.numel() && mask.at(2 * j + 1) != 0.0;
        next.at(j) = (a || b) ? 1.0 : 0.0;
      }
      mask = next;
    }
    out.levels.push_back(x);
    out.masks.push_back(mask);
    out.strides.push_back(static_cast<double>(int64_t{1} << i));
  }
  return out;
}

RawMomentPredictions GroundingHead::predict_moments(Tape& t, const Pyramid& pyr) const {
  RawMomentPredictions out;
  std::vector<Var> logit_parts, offset_parts;
  for (size_t li = 0; li < pyr.levels.size(); ++li) {
    Var h = gelu(conv1d(pyr.levels[li], t(trunk1_w_), t(trunk1_b_), 1));
    h = gelu(conv1d(h, t(trunk2_w_), t(trunk2_b_), 1));
    logit_parts.push_back(flatten(cls_(t, h)));
    offset_parts.push_back(softplus(reg_(t, h)));
    const double stride = pyr.strides[li];
    for (int64_t j = 0; j < h->value().rows(); ++j) {
      PyramidPosition p;
      p.level = static_cast<int>(li) + 1;
      p.index = j;
      p.stride = stride;
      p.center = (static_cast<double>(j) + 0.5) * stride;
      p.valid = pyr.masks[li].at(j) != 0.0;
      out.positions.push_back(p);
    }
  }
  out.cls_logits = concat_vec(logit_parts);
  out.offsets_norm = concat_rows(offset_parts);
  return out;
}

Var GroundingHead::predict_saliency(Tape& t, Var fused, Var global_vec) const {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
  Var h = mul_rowvec(fused, flatten(global_vec));
  Var s = scale(matmul_nt(h, t(sal_w_)), inv_sqrt_d);  // [T,1]
  return flatten(add_scalar(s, t(sal_b_)));
}

Var GroundingHead::project_global(Tape& t, Var eos) const { return eos_proj_(t, eos); }

double interval_iou(double s1, double e1, double s2, double e2) {
  if (!(s1 < e1) || !(s2 < e2))
    throw std::invalid_argument("interval_iou: degenerate span");
  const double inter = std::max(0.0, std::min(e1, e2) - std::max(s1, s2));
  if (inter <= 0.0) return 0.0;
  const double uni = (e1 - s1) + (e2 - s2) - inter;
  return inter / uni;
}

std::vector<MomentCandidate> decode_predictions(const Tensor& cls_logits,
                                                const Tensor& offsets_norm,
                                                const std::vector<PyramidPosition>& positions,
                                                int64_t t_valid, double /*clip_seconds*/,
                                                double nms_threshold, int64_t top_k) {
  check_shape(nms_threshold > 0.0 && nms_threshold <= 1.0, "nms_threshold in (0,1]");
  const double tv = static_cast<double>(t_valid);
  std::vector<MomentCandidate> cands;
  for (size_t i = 0; i < positions.size(); ++i) {
    const PyramidPosition& p = positions[i];
    if (!p.valid) continue;
    const double left = offsets_norm.at(static_cast<int64_t>(i), 0) * p.stride;
    const double right = offsets_norm.at(static_cast<int64_t>(i), 1) * p.stride;
    double s = std::clamp(p.center - left, 0.0, tv);
    double e = std::clamp(p.center + right, 0.0, tv);
    if (!(s < e)) continue;
    const double x = cls_logits.at(static_cast<int64_t>(i));
    MomentCandidate c;
    c.start = s / tv;
    c.end = e / tv;
    c.confidence = 1.0 / (1.0 + std::exp(-x));
    cands.push_back(c);
  }
  std::sort(cands.begin(), cands.end(), [](const MomentCandidate& a, const MomentCandidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
  std::vector<MomentCandidate> kept;
  for (const MomentCandidate& c : cands) {
    bool drop = false;
    for (const MomentCandidate& k : kept)
      if (interval_iou(c.start, c.end, k.start, k.end) > nms_threshold) {
        drop = true;
        break;
      }
    if (!drop) kept.push_back(c);
    if (static_cast<int64_t>(kept.size()) >= top_k) break;
  }
  return kept;
}

}  // namespace vtg::head
