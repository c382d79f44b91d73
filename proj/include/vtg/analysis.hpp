// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vtg/evaluation.hpp"
#include "vtg/model.hpp"
#include "vtg/train.hpp"

namespace vtg::analysis {

/// Pearson correlation coefficient. Throws std::invalid_argument when a
/// vector is constant (undefined correlation) or n < 2.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Fractional ranks, ties averaged.
std::vector<double> average_ranks(const std::vector<double>& x);

/// Rank correlation: the 1 - 6Σd²/(n(n²-1)) form when both vectors are
/// tie-free, otherwise Pearson over average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationReport {
  double mean_pearson = 0.0;
  double mean_spearman = 0.0;
  struct PerSample {
    std::string query_id;
    double pearson = 0.0;
    double spearman = 0.0;
  };
  std::vector<PerSample> per_sample;
  std::string split;
  int64_t skipped = 0;  // samples with <2 clips or unusable rows
};

/// Per sample: the diagnostic word+eos attention map over clips; correlate
/// each word row against the eos row, average over words, then over samples.
CorrelationReport eos_word_attention_correlation(const DualPathModel& model,
                                                 const data::Dataset& ds,
                                                 const std::string& split);

std::string correlation_report_to_json(const CorrelationReport& r);

/// Evaluates under a token-input condition (full reproduces the plain
/// evaluation bit for bit).
eval::MetricReport run_token_condition(const DualPathModel& model, const data::Dataset& ds,
                                       const EvalSettings& es, const ModelConfig& mc,
                                       TokenCondition mode);

struct RunArtifacts {
  std::string run_id;
  std::vector<double> vp_norms, vs_norms;  // per-clip L2 norms
  Tensor phrase_attention;                 // [N, L-1]
  std::vector<double> saliency_scores;
  std::vector<int> saliency_labels;  // may be empty
  std::vector<eval::MomentCandidate> moments;
  std::vector<eval::Span> gt_moments;
};

RunArtifacts collect_artifacts(const DualPathModel& model, const data::Sample& s,
                               const EvalSettings& es, const ModelConfig& mc,
                               const std::string& run_id);

/// Writes the diagnostic figures (phrase/sentence norm curves, phrase-word
/// attention heat map with row sums, saliency timeline, moment timeline).
/// Missing artifacts skip their plot with a warning on stderr.
std::vector<std::string> emit_plots(const RunArtifacts& art, const std::string& out_dir);

}  // namespace vtg::analysis
