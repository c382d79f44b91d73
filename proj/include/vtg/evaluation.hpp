// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtg/grounding_head.hpp"

namespace vtg::eval {

using head::MomentCandidate;
using Span = std::pair<double, double>;

struct MetricReport {
  std::map<double, double> r1_at;      // threshold -> rate
  double map_avg = 0.0;
  std::map<double, double> map_at;     // threshold -> mAP
  double miou = 0.0;
  std::optional<double> hd_map;        // absent without saliency labels
  std::optional<double> hit_at_1;
  int64_t hd_excluded = 0;             // samples with no positive clips
  int64_t n_samples = 0;
};

/// |a∩b| / |a∪b|; 0 for disjoint spans. Throws on degenerate spans.
double temporal_iou(const Span& a, const Span& b);

/// Fraction of samples whose top-1 candidate reaches IoU >= threshold
/// against any ground-truth moment. Samples without predictions miss.
double recall_at_1(const std::vector<std::vector<MomentCandidate>>& preds,
                   const std::vector<std::vector<Span>>& gts, double threshold);

/// Per threshold: rank-greedy one-to-one matching, per-sample AP via
/// precision-envelope interpolation, averaged over samples; map_avg averages
/// the per-threshold values.
std::pair<double, std::map<double, double>> mean_ap(
    const std::vector<std::vector<MomentCandidate>>& preds,
    const std::vector<std::vector<Span>>& gts, const std::vector<double>& thresholds);

/// Mean over samples of the top-1 candidate's best IoU against ground truth.
double mean_iou(const std::vector<std::vector<MomentCandidate>>& preds,
                const std::vector<std::vector<Span>>& gts);

struct HdSampleResult {
  bool included = false;
  double hit = 0.0;
  double ap = 0.0;
};
/// Positives are clips with label >= 3. hit: argmax-score clip is positive;
/// ap: mean precision at each positive of the score-ranked clip list.
HdSampleResult hd_sample_metrics(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

struct HdAggregate {
  std::optional<double> hd_map, hit_at_1;
  int64_t excluded = 0;
};
HdAggregate hd_metrics(const std::vector<std::vector<double>>& scores,
                       const std::vector<std::vector<int>>& labels);

std::vector<double> default_map_thresholds();  // 0.50, 0.55, ..., 0.95

/// Per-sample prediction record; the exact JSONL format the CLI writes and
/// this module re-reads for scoring.
struct PredictionRecord {
  std::string query_id;
  std::vector<MomentCandidate> moments;
  std::vector<double> saliency;  // empty when the model emitted none
};

void write_predictions(const std::string& path, const std::vector<PredictionRecord>& recs);
std::vector<PredictionRecord> read_predictions(const std::string& path);

std::string report_to_json(const MetricReport& r);
MetricReport report_from_json(const std::string& text);

}  // namespace vtg::eval
