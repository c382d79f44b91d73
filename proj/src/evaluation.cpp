// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "vtg/errors.hpp"

namespace vtg::eval {

using nlohmann::json;

double temporal_iou(const Span& a, const Span& b) {
  if (!(a.first < a.second) || !(b.first < b.second))
    throw std::invalid_argument("temporal_iou: degenerate span");
  const double inter = std::max(0.0, std::min(a.second, b.second) - std::max(a.first, b.first));
  if (inter <= 0.0) return 0.0;
  const double uni = (a.second - a.first) + (b.second - b.first) - inter;
  return inter / uni;
}

namespace {

std::vector<MomentCandidate> ranked(const std::vector<MomentCandidate>& in) {
  std::vector<MomentCandidate> out = in;
  std::stable_sort(out.begin(), out.end(),
                   [](const MomentCandidate& a, const MomentCandidate& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     if (a.start != b.start) return a.start < b.start;
                     return a.end < b.end;
                   });
  return out;
}

/// AP for one sample at one threshold: rank-greedy matching (each GT used at
/// most once, best IoU among unmatched, lowest index on ties), then
/// precision-envelope integration over the recall steps.
double sample_ap(const std::vector<MomentCandidate>& preds_in,
                 const std::vector<Span>& gts, double thr) {
  if (gts.empty()) return 0.0;
  const std::vector<MomentCandidate> preds = ranked(preds_in);
  if (preds.empty()) return 0.0;
  std::vector<bool> used(gts.size(), false);
  std::vector<int> tp(preds.size(), 0);
  for (size_t i = 0; i < preds.size(); ++i) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double iou = temporal_iou({preds[i].start, preds[i].end}, gts[g]);
      if (iou >= thr && iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[static_cast<size_t>(best)] = true;
      tp[i] = 1;
    }
  }
  const size_t n = preds.size();
  std::vector<double> prec(n), rec(n);
  int cum = 0;
  for (size_t i = 0; i < n; ++i) {
    cum += tp[i];
    prec[i] = static_cast<double>(cum) / static_cast<double>(i + 1);
    rec[i] = static_cast<double>(cum) / static_cast<double>(gts.size());
  }
  // precision envelope: env[i] = max_{j>=i} prec[j]
  std::vector<double> env(n);
  double run = 0.0;
  for (size_t i = n; i-- > 0;) {
    run = std::max(run, prec[i]);
    env[i] = run;
  }
  double ap = 0.0, prev_rec = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ap += (rec[i] - prev_rec) * env[i];
    prev_rec = rec[i];
  }
  return ap;
}

}  // namespace

double recall_at_1(const std::vector<std::vector<MomentCandidate>>& preds,
                   const std::vector<std::vector<Span>>& gts, double threshold) {
  check_shape(preds.size() == gts.size() && !preds.empty(), "recall_at_1 sizes");
  int64_t hits = 0;
  for (size_t s = 0; s < preds.size(); ++s) {
    if (preds[s].empty()) continue;
    const MomentCandidate top = ranked(preds[s]).front();
    for (const Span& g : gts[s])
      if (temporal_iou({top.start, top.end}, g) >= threshold) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::pair<double, std::map<double, double>> mean_ap(
    const std::vector<std::vector<MomentCandidate>>& preds,
    const std::vector<std::vector<Span>>& gts, const std::vector<double>& thresholds) {
  check_shape(preds.size() == gts.size() && !preds.empty(), "mean_ap sizes");
  std::map<double, double> per_thr;
  for (double thr : thresholds) {
    double acc = 0.0;
    for (size_t s = 0; s < preds.size(); ++s) acc += sample_ap(preds[s], gts[s], thr);
    per_thr[thr] = acc / static_cast<double>(preds.size());
  }
  double avg = 0.0;
  for (double thr : thresholds) avg += per_thr[thr];
  avg /= static_cast<double>(thresholds.size());
  return {avg, per_thr};
}

double mean_iou(const std::vector<std::vector<MomentCandidate>>& preds,
                const std::vector<std::vector<Span>>& gts) {
  check_shape(preds.size() == gts.size() && !preds.empty(), "mean_iou sizes");
  double acc = 0.0;
  for (size_t s = 0; s < preds.size(); ++s) {
    if (preds[s].empty()) continue;
    const MomentCandidate top = ranked(preds[s]).front();
    double best = 0.0;
    for (const Span& g : gts[s])
      best = std::max(best, temporal_iou({top.start, top.end}, g));
    acc += best;
  }
  return acc / static_cast<double>(preds.size());
}

HdSampleResult hd_sample_metrics(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  check_shape(scores.size() == labels.size() && !scores.empty(), "hd metric sizes");
  HdSampleResult r;
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  int64_t n_pos = 0;
  for (int lab : labels) n_pos += lab >= 3 ? 1 : 0;
  if (n_pos == 0) return r;  // excluded
  r.included = true;
  r.hit = labels[order[0]] >= 3 ? 1.0 : 0.0;
  double ap = 0.0;
  int64_t cum = 0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] >= 3) {
      ++cum;
      ap += static_cast<double>(cum) / static_cast<double>(rank + 1);
    }
  }
  r.ap = ap / static_cast<double>(n_pos);
  return r;
}

HdAggregate hd_metrics(const std::vector<std::vector<double>>& scores,
                       const std::vector<std::vector<int>>& labels) {
  check_shape(scores.size() == labels.size(), "hd_metrics sizes");
  HdAggregate agg;
  double map_acc = 0.0, hit_acc = 0.0;
  int64_t included = 0;
  for (size_t s = 0; s < scores.size(); ++s) {
    const HdSampleResult r = hd_sample_metrics(scores[s], labels[s]);
    if (!r.included) {
      ++agg.excluded;
      continue;
    }
    ++included;
    map_acc += r.ap;
    hit_acc += r.hit;
  }
  if (included > 0) {
    agg.hd_map = map_acc / static_cast<double>(included);
    agg.hit_at_1 = hit_acc / static_cast<double>(included);
  }
  return agg;
}

std::vector<double> default_map_thresholds() {
  std::vector<double> t;
  for (int k = 50; k <= 95; k += 5) t.push_back(static_cast<double>(k) / 100.0);
  return t;
}

void write_predictions(const std::string& path, const std::vector<PredictionRecord>& recs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write predictions: " + path);
  for (const PredictionRecord& r : recs) {
    json m = json::array();
    for (const MomentCandidate& c : r.moments)
      m.push_back({c.start, c.end, c.confidence});
    json j = {{"query_id", r.query_id}, {"moments", m}};
    if (!r.saliency.empty()) j["saliency"] = r.saliency;
    out << j.dump() << "\n";
  }
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read predictions: " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    PredictionRecord r;
    r.query_id = j.at("query_id").get<std::string>();
    for (const auto& m : j.at("moments")) {
      MomentCandidate c;
      c.start = m.at(0).get<double>();
      c.end = m.at(1).get<double>();
      c.confidence = m.at(2).get<double>();
      r.moments.push_back(c);
    }
    if (j.contains("saliency"))
      for (const auto& s : j.at("saliency")) r.saliency.push_back(s.get<double>());
    out.push_back(std::move(r));
  }
  return out;
}

std::string report_to_json(const MetricReport& r) {
  json j;
  json r1 = json::object();
  for (auto [k, v] : r.r1_at) r1[std::to_string(k)] = v;
  json mp = json::object();
  for (auto [k, v] : r.map_at) mp[std::to_string(k)] = v;
  j["r1_at"] = r1;
  j["map_avg"] = r.map_avg;
  j["map_at"] = mp;
  j["miou"] = r.miou;
  if (r.hd_map) j["hd_map"] = *r.hd_map;
  if (r.hit_at_1) j["hit_at_1"] = *r.hit_at_1;
  j["hd_excluded"] = r.hd_excluded;
  j["n_samples"] = r.n_samples;
  return j.dump(2);
}

MetricReport report_from_json(const std::string& text) {
  json j = json::parse(text);
  MetricReport r;
  for (auto& [k, v] : j.at("r1_at").items()) r.r1_at[std::stod(k)] = v.get<double>();
  for (auto& [k, v] : j.at("map_at").items()) r.map_at[std::stod(k)] = v.get<double>();
  r.map_avg = j.at("map_avg").get<double>();
  r.miou = j.at("miou").get<double>();
  if (j.contains("hd_map")) r.hd_map = j.at("hd_map").get<double>();
  if (j.contains("hit_at_1")) r.hit_at_1 = j.at("hit_at_1").get<double>();
  r.hd_excluded = j.at("hd_excluded").get<int64_t>();
  r.n_samples = j.at("n_samples").get<int64_t>();
  return r;
}

}  // namespace vtg::eval
