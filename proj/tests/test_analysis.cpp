// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "vtg/analysis.hpp"

using namespace vtg;
namespace fs = std::filesystem;

TEST_CASE("pearson: exact endpoints, closed form, constant rejection") {
  CHECK(analysis::pearson({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(analysis::pearson({1, 2, 3}, {-1, -2, -3}) == doctest::Approx(-1.0));
  CHECK(analysis::pearson({1, 2, 3}, {1, 2, 4}) == doctest::Approx(0.98198).epsilon(1e-5));
  CHECK_THROWS_AS(analysis::pearson({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(analysis::pearson({1}, {2}), std::invalid_argument);

  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(6), y(6);
    for (int j = 0; j < 6; ++j) {
      x[static_cast<size_t>(j)] = rng.uniform(-2, 2);
      y[static_cast<size_t>(j)] = rng.uniform(-2, 2);
    }
    const double r = analysis::pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("spearman: reversal, monotone invariance, hand value, tie fallback") {
  CHECK(analysis::spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  // any strictly monotone transform preserves rank correlation exactly
  std::vector<double> x = {0.3, 2.5, 1.1, 4.0};
  std::vector<double> fx;
  for (double v : x) fx.push_back(std::exp(v) + 5.0);
  CHECK(analysis::spearman(x, fx) == doctest::Approx(1.0));
  // 1 - 6*(0+1+1+0)/(4*15) = 0.8
  CHECK(analysis::spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
  // ties: average ranks, pearson fallback stays within [-1,1]
  const double rho = analysis::spearman({1, 1, 2, 3}, {2, 2, 3, 9});
  CHECK(rho == doctest::Approx(1.0));
  CHECK_THROWS_AS(analysis::spearman({2, 2, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("average ranks handle ties by midpoint") {
  std::vector<double> r = analysis::average_ranks({10.0, 20.0, 10.0, 5.0});
  CHECK(r[3] == doctest::Approx(1.0));
  CHECK(r[0] == doctest::Approx(2.5));
  CHECK(r[2] == doctest::Approx(2.5));
  CHECK(r[1] == doctest::Approx(4.0));
}

namespace {

ModelConfig tiny_model_cfg() {
  ModelConfig mc;
  mc.d = 8;
  mc.l_d = 2;
  mc.n_phrases = 2;
  mc.heads = 2;
  mc.layers = {1, 1, 1, 1, 1};
  mc.pyramid_levels = 2;
  mc.mlp_ratio = 2;
  mc.max_t = 32;
  mc.max_l = 16;
  return mc;
}

data::Dataset tiny_dataset(int64_t n = 4) {
  data::SyntheticSpec spec;
  spec.num_samples = n;
  spec.T = 12;
  spec.L = 5;
  spec.d = 8;
  spec.n_latent = 4;
  spec.noise_sigma = 0.05;
  spec.seed = 9;
  return data::synthesize_dataset(spec);
}

}  // namespace

TEST_CASE("correlation report: identical word/eos rows give means of exactly 1") {
  DualPathModel model(tiny_model_cfg(), 17);
  // craft samples whose words all equal the eos embedding: every diagnostic
  // attention row collapses onto the eos row
  data::Dataset ds;
  Rng rng(5);
  for (int i = 0; i < 3; ++i) {
    data::Sample s;
    s.query_id = "q" + std::to_string(i);
    s.video.video_id = "v" + std::to_string(i);
    s.video.clips = test::random_tensor({10, 8}, rng);
    s.query.eos = test::random_tensor({8}, rng);
    s.query.words = Tensor({3, 8});
    for (int64_t w = 0; w < 3; ++w)
      for (int64_t j = 0; j < 8; ++j) s.query.words.at(w, j) = s.query.eos.at(j);
    s.query.mask.assign(3, true);
    s.gt.moments = {{0.2, 0.6}};
    ds.push(s);
  }
  analysis::CorrelationReport rep =
      analysis::eos_word_attention_correlation(model, ds, "val");
  REQUIRE(rep.per_sample.size() == 3);
  CHECK(rep.mean_pearson == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.mean_spearman == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("correlation report: means equal the mean of per-sample entries") {
  DualPathModel model(tiny_model_cfg(), 23);
  data::Dataset ds = tiny_dataset(6);
  analysis::CorrelationReport rep =
      analysis::eos_word_attention_correlation(model, ds, "val");
  REQUIRE(!rep.per_sample.empty());
  double mp = 0, ms = 0;
  for (const auto& p : rep.per_sample) {
    mp += p.pearson;
    ms += p.spearman;
    CHECK(p.pearson >= -1.0);
    CHECK(p.pearson <= 1.0);
    CHECK(p.spearman >= -1.0);
    CHECK(p.spearman <= 1.0);
  }
  mp /= static_cast<double>(rep.per_sample.size());
  ms /= static_cast<double>(rep.per_sample.size());
  CHECK(rep.mean_pearson == mp);  // exactly the same summation
  CHECK(rep.mean_spearman == ms);

  const std::string json = analysis::correlation_report_to_json(rep);
  CHECK(json.find("mean_pearson") != std::string::npos);
  CHECK(json.find("per_sample") != std::string::npos);
}

TEST_CASE("token conditions: full mode reproduces the plain evaluation bit for bit") {
  DualPathModel model(tiny_model_cfg(), 29);
  data::Dataset ds = tiny_dataset(5);
  EvalSettings es;
  es.map_thresholds = eval::default_map_thresholds();
  eval::MetricReport plain =
      train::evaluate(model, ds, es, model.config(), TokenCondition::kFull).report;
  eval::MetricReport full = analysis::run_token_condition(model, ds, es, model.config(),
                                                          TokenCondition::kFull);
  CHECK(plain.map_avg == full.map_avg);
  CHECK(plain.miou == full.miou);
  for (auto [k, v] : plain.r1_at) CHECK(full.r1_at.at(k) == v);
  REQUIRE(plain.hit_at_1.has_value());
  CHECK(*plain.hit_at_1 == *full.hit_at_1);

  // the other modes run and emit well-formed reports
  for (TokenCondition c : {TokenCondition::kWordOnly, TokenCondition::kEosOnly}) {
    eval::MetricReport r = analysis::run_token_condition(model, ds, es, model.config(), c);
    CHECK(r.n_samples == 5);
  }
}

TEST_CASE("emit_plots writes the five diagnostic figures as PNG files") {
  DualPathModel model(tiny_model_cfg(), 31);
  data::Dataset ds = tiny_dataset(2);
  EvalSettings es;
  es.map_thresholds = eval::default_map_thresholds();
  analysis::RunArtifacts art =
      analysis::collect_artifacts(model, ds.sample(0), es, model.config(), "t0");
  const std::string out = (fs::temp_directory_path() / "vtg_test_plots").string();
  fs::remove_all(out);
  std::vector<std::string> files = analysis::emit_plots(art, out);
  CHECK(files.size() == 5);
  for (const std::string& f : files) {
    REQUIRE(fs::exists(f));
    std::ifstream in(f, std::ios::binary);
    unsigned char sig[8];
    in.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[0] == 137);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
  }
  // deterministic names carry the run id and figure tag
  CHECK(files[0].find("t0_phrase_norm.png") != std::string::npos);

  // a zeroed phrase path yields an all-zero norm curve but still plots
  analysis::RunArtifacts zero = art;
  std::fill(zero.vp_norms.begin(), zero.vp_norms.end(), 0.0);
  std::vector<std::string> files2 = analysis::emit_plots(zero, out);
  CHECK(files2.size() == 5);
  // missing artifacts skip their figure
  analysis::RunArtifacts missing = art;
  missing.saliency_scores.clear();
  std::vector<std::string> files3 = analysis::emit_plots(missing, out);
  CHECK(files3.size() == 4);
}
