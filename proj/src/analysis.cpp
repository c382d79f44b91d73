// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "vtg/png.hpp"

namespace vtg::analysis {

namespace fs = std::filesystem;
using nlohmann::json;

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two vectors of equal length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: correlation undefined for a constant vector");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {
bool has_ties(const std::vector<double>& x) {
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}
}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman: need two vectors of equal length >= 2");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  if (!has_ties(x) && !has_ties(y)) {
    const double n = static_cast<double>(x.size());
    double d2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
  }
  return pearson(rx, ry);  // average-rank fallback under ties
}

CorrelationReport eos_word_attention_correlation(const DualPathModel& model,
                                                 const data::Dataset& ds,
                                                 const std::string& split) {
  CorrelationReport rep;
  rep.split = split;
  const size_t n = ds.size();
  std::vector<CorrelationReport::PerSample> per(n);
  std::vector<int> ok(n, 0);

#pragma omp parallel for schedule(static)
  for (int64_t si = 0; si < static_cast<int64_t>(n); ++si) {
    const data::Sample& s = ds.sample(static_cast<size_t>(si));
    const int64_t min_t = int64_t{1} << (model.config().pyramid_levels - 1);
    data::PaddedSample ps = data::pad_sample(
        s, std::max(min_t, s.video.clips.rows()), s.query.words.rows());
    if (ps.t_valid < 2) continue;
    Tensor a = model.diagnostic_attention(ps);
    const int64_t rows = a.rows();  // words then eos
    std::vector<double> eos_row(static_cast<size_t>(ps.t_valid));
    for (int64_t c = 0; c < ps.t_valid; ++c)
      eos_row[static_cast<size_t>(c)] = a.at(rows - 1, c);
    const double e0 = eos_row[0];
    bool eos_const = true;
    for (double v : eos_row) eos_const = eos_const && v == e0;
    if (eos_const) continue;
    double acc_p = 0, acc_s = 0;
    int64_t used = 0;
    for (int64_t w = 0; w + 1 < rows; ++w) {
      std::vector<double> row(static_cast<size_t>(ps.t_valid));
      for (int64_t c = 0; c < ps.t_valid; ++c) row[static_cast<size_t>(c)] = a.at(w, c);
      const double r0 = row[0];
      bool row_const = true;
      for (double v : row) row_const = row_const && v == r0;
      if (row_const) continue;
      acc_p += pearson(row, eos_row);
      acc_s += spearman(row, eos_row);
      ++used;
    }
    if (used == 0) continue;
    per[static_cast<size_t>(si)] = {s.query_id, acc_p / static_cast<double>(used),
                                    acc_s / static_cast<double>(used)};
    ok[static_cast<size_t>(si)] = 1;
  }

  for (size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++rep.skipped;
      continue;
    }
    rep.per_sample.push_back(per[i]);
  }
  if (!rep.per_sample.empty()) {
    for (const auto& p : rep.per_sample) {
      rep.mean_pearson += p.pearson;
      rep.mean_spearman += p.spearman;
    }
    rep.mean_pearson /= static_cast<double>(rep.per_sample.size());
    rep.mean_spearman /= static_cast<double>(rep.per_sample.size());
  }
  return rep;
}

std::string correlation_report_to_json(const CorrelationReport& r) {
  json per = json::array();
  for (const auto& p : r.per_sample)
    per.push_back({{"query_id", p.query_id}, {"pearson", p.pearson},
                   {"spearman", p.spearman}});
  json j = {{"split", r.split},
            {"mean_pearson", r.mean_pearson},
            {"mean_spearman", r.mean_spearman},
            {"skipped", r.skipped},
            {"per_sample", per}};
  return j.dump(2);
}

eval::MetricReport run_token_condition(const DualPathModel& model, const data::Dataset& ds,
                                       const EvalSettings& es, const ModelConfig& mc,
                                       TokenCondition mode) {
  return train::evaluate(model, ds, es, mc, mode).report;
}

RunArtifacts collect_artifacts(const DualPathModel& model, const data::Sample& s,
                               const EvalSettings& es, const ModelConfig& mc,
                               const std::string& run_id) {
  const int64_t min_t = int64_t{1} << (mc.pyramid_levels - 1);
  data::PaddedSample ps =
      data::pad_sample(s, std::max(min_t, s.video.clips.rows()), s.query.words.rows());
  Graph g;
  Tape tape(g, model.params().size());
  DualPathModel::Forward fwd = model.forward(tape, ps);
  RunArtifacts art;
  art.run_id = run_id;
  for (int64_t t = 0; t < ps.t_valid; ++t) {
    double np = 0, ns = 0;
    for (int64_t j = 0; j < mc.d; ++j) {
      np += fwd.v_p->value().at(t, j) * fwd.v_p->value().at(t, j);
      ns += fwd.v_s->value().at(t, j) * fwd.v_s->value().at(t, j);
    }
    art.vp_norms.push_back(std::sqrt(np));
    art.vs_norms.push_back(std::sqrt(ns));
    art.saliency_scores.push_back(fwd.saliency->value().at(t));
  }
  art.phrase_attention = fwd.attn->value();
  art.saliency_labels = s.gt.saliency_labels;
  art.moments = head::decode_predictions(fwd.raw.cls_logits->value(),
                                         fwd.raw.offsets_norm->value(), fwd.raw.positions,
                                         ps.t_valid, ps.clip_seconds, es.nms_threshold,
                                         es.top_k);
  for (auto [a, b] : s.gt.moments) art.gt_moments.push_back({a, b});
  return art;
}

namespace {

constexpr int kW = 640, kH = 240, kPad = 30;

void axes(Canvas& c) {
  c.line(kPad, kH - kPad, kW - 10, kH - kPad, 0, 0, 0);
  c.line(kPad, 10, kPad, kH - kPad, 0, 0, 0);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void curve_plot(const std::string& path, const std::vector<double>& ys, uint8_t r, uint8_t g,
                uint8_t b) {
  Canvas c(kW, kH);
  axes(c);
  double lo = ys[0], hi = ys[0];
  for (double v : ys) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  const double sx = static_cast<double>(kW - kPad - 20) / std::max<size_t>(1, ys.size() - 1);
  auto px = [&](size_t i) { return kPad + static_cast<int>(sx * static_cast<double>(i)); };
  auto py = [&](double v) {
    return kH - kPad - static_cast<int>((v - lo) / (hi - lo) * (kH - kPad - 20));
  };
  for (size_t i = 0; i + 1 < ys.size(); ++i)
    c.line(px(i), py(ys[i]), px(i + 1), py(ys[i + 1]), r, g, b);
  c.text(2, 2, fmt(hi), 0, 0, 0);
  c.text(2, kH - kPad - 6, fmt(lo), 0, 0, 0);
  c.save_png(path);
}

void heatmap_plot(const std::string& path, const Tensor& a) {
  const int64_t n = a.rows(), w = a.cols();
  const int cell = 18, side = 50;
  Canvas c(kPad + static_cast<int>(w) * cell + side, 20 + static_cast<int>(n) * cell);
  for (int64_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int64_t j = 0; j < w; ++j) {
      const double v = std::clamp(a.at(i, j), 0.0, 1.0);
      const auto heat = static_cast<uint8_t>(255.0 * (1.0 - v));
      c.fill_rect(kPad + static_cast<int>(j) * cell, 10 + static_cast<int>(i) * cell,
                  kPad + static_cast<int>(j + 1) * cell - 2,
                  10 + static_cast<int>(i + 1) * cell - 2, 255, heat, heat);
      row_sum += a.at(i, j);
    }
    c.text(kPad + static_cast<int>(w) * cell + 4, 10 + static_cast<int>(i) * cell + 6,
           fmt(row_sum), 0, 0, 0);
  }
  c.save_png(path);
}

void saliency_plot(const std::string& path, const std::vector<double>& scores,
                   const std::vector<int>& labels) {
  Canvas c(kW, kH);
  axes(c);
  double lo = scores[0], hi = scores[0];
  for (double v : scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  const double sx = static_cast<double>(kW - kPad - 20) /
                    std::max<size_t>(1, scores.size() - 1);
  auto px = [&](size_t i) { return kPad + static_cast<int>(sx * static_cast<double>(i)); };
  auto py = [&](double v) {
    return kH - kPad - static_cast<int>((v - lo) / (hi - lo) * (kH - kPad - 40));
  };
  if (!labels.empty())
    for (size_t i = 0; i < labels.size() && i < scores.size(); ++i) {
      const int hbar = labels[i] * 6;
      c.fill_rect(px(i) - 2, kH - kPad - hbar, px(i) + 2, kH - kPad, 200, 220, 255);
    }
  for (size_t i = 0; i + 1 < scores.size(); ++i)
    c.line(px(i), py(scores[i]), px(i + 1), py(scores[i + 1]), 200, 60, 20);
  c.save_png(path);
}

void moments_plot(const std::string& path, const std::vector<eval::MomentCandidate>& preds,
                  const std::vector<eval::Span>& gts) {
  Canvas c(kW, kH);
  axes(c);
  auto px = [&](double t) { return kPad + static_cast<int>(t * (kW - kPad - 20)); };
  int y = 20;
  for (const eval::Span& gt : gts) {
    c.fill_rect(px(gt.first), y, px(gt.second), y + 10, 80, 170, 80);
    y += 14;
  }
  y += 8;
  const size_t show = std::min<size_t>(preds.size(), 8);
  for (size_t i = 0; i < show; ++i) {
    const auto shade = static_cast<uint8_t>(90 + 18 * i);
    c.fill_rect(px(preds[i].start), y, px(preds[i].end), y + 8, shade, shade, 230);
    c.text(px(preds[i].end) + 4, y + 1, fmt(preds[i].confidence), 0, 0, 0);
    y += 12;
  }
  c.save_png(path);
}

}  // namespace

std::vector<std::string> emit_plots(const RunArtifacts& art, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto out = [&](const std::string& fig) {
    return (fs::path(out_dir) / (art.run_id + "_" + fig + ".png")).string();
  };
  if (!art.vp_norms.empty()) {
    curve_plot(out("phrase_norm"), art.vp_norms, 20, 90, 200);
    written.push_back(out("phrase_norm"));
  } else {
    std::cerr << "emit_plots: missing phrase-path norms, skipping phrase_norm\n";
  }
  if (!art.vs_norms.empty()) {
    curve_plot(out("sentence_norm"), art.vs_norms, 200, 90, 20);
    written.push_back(out("sentence_norm"));
  } else {
    std::cerr << "emit_plots: missing sentence-path norms, skipping sentence_norm\n";
  }
  if (art.phrase_attention.numel() > 0) {
    heatmap_plot(out("phrase_word_attention"), art.phrase_attention);
    written.push_back(out("phrase_word_attention"));
  } else {
    std::cerr << "emit_plots: missing phrase attention, skipping heat map\n";
  }
  if (!art.saliency_scores.empty()) {
    saliency_plot(out("saliency"), art.saliency_scores, art.saliency_labels);
    written.push_back(out("saliency"));
  } else {
    std::cerr << "emit_plots: missing saliency scores, skipping saliency\n";
  }
  if (!art.moments.empty() || !art.gt_moments.empty()) {
    moments_plot(out("moments"), art.moments, art.gt_moments);
    written.push_back(out("moments"));
  } else {
    std::cerr << "emit_plots: no moments to draw, skipping timeline\n";
  }
  return written;
}

}  // namespace vtg::analysis
