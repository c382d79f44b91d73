// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vtg/nn.hpp"

namespace vtg::head {

enum class Fusion { kAdd, kHadamard, kGate, kConcatMlp };

Fusion fusion_from_string(const std::string& s);  // throws ConfigError
std::string fusion_to_string(Fusion f);

struct Config {
  int64_t d = 256;
  int num_levels = 4;
  Fusion fusion = Fusion::kAdd;
  double offset_range_base = 4.0;  // level ℓ handles moment lengths up to base·2^(ℓ-1)
};

struct MomentCandidate {
  double start = 0.0, end = 0.0;  // normalized [0,1] video time
  double confidence = 0.0;
};

/// Flattened multi-scale position bookkeeping.
struct PyramidPosition {
  int level = 0;        // 1-based
  int64_t index = 0;    // within level
  double center = 0.0;  // base-clip units
  double stride = 1.0;
  bool valid = true;
};

struct Pyramid {
  std::vector<Var> levels;      // level ℓ: [ceil(T/2^(ℓ-1)), d]
  std::vector<Tensor> masks;    // 0/1 per level
  std::vector<double> strides;  // 2^(ℓ-1)
};

struct RawMomentPredictions {
  Var cls_logits = nullptr;    // [P]
  Var offsets_norm = nullptr;  // [P, 2] softplus outputs, level-stride units
  std::vector<PyramidPosition> positions;
};

class GroundingHead {
 public:
  GroundingHead(ParamStore& ps, const Config& cfg, uint64_t seed);

  /// F = combine(V_s, V_p) under the configured strategy.
  Var fuse(Tape& t, Var v_s, Var v_p) const;

  /// Stacked stride-2 convolutions; masked inputs are zeroed before each
  /// level so padding never leaks into valid positions.
  Pyramid build_pyramid(Tape& t, Var fused, const Tensor& clip_mask) const;

  RawMomentPredictions predict_moments(Tape& t, const Pyramid& pyr) const;

  /// s_t = w·(f_t ⊙ g)/sqrt(d) + b.
  Var predict_saliency(Tape& t, Var fused, Var global_vec) const;

  /// Projection applied to the eos embedding when assembling the saliency
  /// global vector (the other half is the updated phrase global token).
  Var project_global(Tape& t, Var eos) const;

  const Config& config() const { return cfg_; }
  Linear& gate_linear() { return gate_; }

 private:
  Config cfg_;
  Linear gate_, concat_proj_;
  struct Level {
    Param* w = nullptr;
    Param* b = nullptr;
    LayerNorm ln;
  };
  std::vector<Level> pyr_;
  Param *trunk1_w_ = nullptr, *trunk1_b_ = nullptr;
  Param *trunk2_w_ = nullptr, *trunk2_b_ = nullptr;
  Linear cls_, reg_;
  Param *sal_w_ = nullptr, *sal_b_ = nullptr;
  Linear eos_proj_;
};

/// Interval IoU on normalized spans (0 when disjoint).
double interval_iou(double s1, double e1, double s2, double e2);

/// Sigmoid confidences, clamp to the valid window, drop degenerate spans,
/// normalize by t_valid, greedy NMS (IoU > threshold suppresses), keep top_k.
/// Ties break toward earlier start.
std::vector<MomentCandidate> decode_predictions(const Tensor& cls_logits,
                                                const Tensor& offsets_norm,
                                                const std::vector<PyramidPosition>& positions,
                                                int64_t t_valid, double clip_seconds,
                                                double nms_threshold, int64_t top_k);

}  // namespace vtg::head
