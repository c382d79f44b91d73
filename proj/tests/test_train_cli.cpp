// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "test_util.hpp"
#include "vtg/analysis.hpp"
#include "vtg/cli.hpp"
#include "vtg/errors.hpp"
#include "vtg/train.hpp"

using namespace vtg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("vtg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig micro_config(uint64_t seed = 3) {
  RunConfig cfg = default_config();
  data::SyntheticSpec spec;
  spec.num_samples = 8;
  spec.T = 16;
  spec.L = 6;
  spec.d = 16;
  spec.n_latent = 4;
  spec.noise_sigma = 0.02;
  spec.seed = 11;
  cfg.data.synthetic = spec;
  cfg.data.val_samples = 4;
  cfg.model.d = 16;
  cfg.model.l_d = 2;
  cfg.model.n_phrases = 2;
  cfg.model.heads = 2;
  cfg.model.layers = {1, 1, 1, 1, 1};
  cfg.model.pyramid_levels = 2;
  cfg.model.mlp_ratio = 2;
  cfg.model.max_t = 32;
  cfg.model.max_l = 16;
  cfg.optim.batch_size = 8;
  cfg.optim.epochs = 2;
  cfg.optim.lr = 1e-3;
  cfg.optim.eval_every = 1;
  cfg.seed = seed;
  return cfg;
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::ifstream in(p);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VTG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("default config serializes to the documented hyperparameter row") {
  RunConfig cfg = default_config();
  json j = json::parse(config_to_json_text(cfg));
  CHECK(j["optim"]["batch_size"] == 64);
  CHECK(j["optim"]["epochs"] == 150);
  CHECK(j["optim"]["lr"] == 1e-4);
  CHECK(j["model"]["l_d"] == 3);
  CHECK(j["model"]["n_phrases"] == 4);
  CHECK(j["model"]["heads"] == 8);
  CHECK(j["model"]["d"] == 256);
  CHECK(j["model"]["layers"]["d_enc"] == 2);
  CHECK(j["model"]["layers"]["aca"] == 3);
  CHECK(j["model"]["layers"]["p_sa"] == 2);
  CHECK(j["model"]["layers"]["p_enc"] == 2);
  CHECK(j["model"]["layers"]["s_enc"] == 2);
  CHECK(j["model"]["fusion"] == "add");
  CHECK(j["model"]["pyramid_levels"] == 4);
  CHECK(j["loss"]["lambda_mr"] == 5.0);
  CHECK(j["loss"]["lambda_hd"] == 1.0);
  CHECK(j["loss"]["lambda_phrase"] == 1.0);
  CHECK(j["loss"]["r_dqa"] == 0.3);
  CHECK(j["eval"]["nms_threshold"] == 0.7);

  // overrides and validation errors
  std::string text = apply_overrides(config_to_json_text(cfg), {"model.heads=7"});
  CHECK_THROWS_AS(config_from_json_text(text), ConfigError);
  text = apply_overrides(config_to_json_text(cfg), {"model.fusion=banana"});
  CHECK_THROWS_AS(config_from_json_text(text), ConfigError);
  text = apply_overrides(config_to_json_text(cfg),
                         {"optim.lr=0.5", "model.fusion=gate"});
  RunConfig cfg2 = config_from_json_text(text);
  CHECK(cfg2.optim.lr == 0.5);
  CHECK(cfg2.model.fusion == "gate");
}

TEST_CASE("padded positions never influence the loss (mask soundness)") {
  RunConfig cfg = micro_config();
  DualPathModel model(cfg.model, cfg.seed);
  data::Dataset ds = data::synthesize_dataset(*cfg.data.synthetic);
  data::Sample shorter = ds.sample(0);
  // truncate to force padding relative to sample 1
  shorter.video.clips = Tensor({10, 16});
  Rng fill(77);
  for (double& v : shorter.video.clips.data) v = fill.uniform(-1, 1);
  shorter.gt.saliency_labels.resize(10);
  shorter.gt.moments = {{0.2, 0.7}};
  data::Sample longer = ds.sample(1);
  data::Batch batch = data::collate({&shorter, &longer}, 2, 8);

  std::vector<Tensor> eos_batch = {batch.items[0].eos, batch.items[1].eos};
  auto loss_of = [&](const data::PaddedSample& s) {
    Graph g;
    Tape t(g, model.params().size());
    return train::sample_loss(t, model, s, eos_batch, 0, cfg.loss,
                              TokenCondition::kFull)
        .total->value()
        .data[0];
  };
  const double base = loss_of(batch.items[0]);

  data::PaddedSample poked = batch.items[0];
  Rng noise(123);
  for (int64_t tt = poked.t_valid; tt < poked.clips.rows(); ++tt)
    for (int64_t j = 0; j < 16; ++j) poked.clips.at(tt, j) = noise.uniform(-50, 50);
  for (int64_t w = poked.l_valid; w < poked.words.rows(); ++w)
    for (int64_t j = 0; j < 16; ++j) poked.words.at(w, j) = noise.uniform(-50, 50);
  const double perturbed = loss_of(poked);
  CHECK(base == perturbed);  // bitwise: padding is fully masked out
}

TEST_CASE("micro training run: monotone step log, checkpoints, determinism") {
  RunConfig cfg = micro_config();
  fs::path out_a = fresh_dir("det_a");
  train::TrainResult ra = train::run_training(cfg, out_a.string(), "", 0, 10);
  CHECK(ra.steps == 2);  // 8 samples / bs 8 * 2 epochs
  CHECK(fs::exists(out_a / "last.ckpt"));
  std::vector<json> log_a = read_jsonl(out_a / "metrics.jsonl");
  int64_t prev = 0;
  for (const json& rec : log_a)
    if (rec["kind"] == "train") {
      CHECK(rec["step"].get<int64_t>() == prev + 1);
      prev = rec["step"].get<int64_t>();
      CHECK(rec.contains("total"));
      CHECK(rec.contains("dqa"));
    }

  // identical seed, identical losses to the last bit
  fs::path out_b = fresh_dir("det_b");
  train::run_training(cfg, out_b.string(), "", 0, 10);
  std::vector<json> log_b = read_jsonl(out_b / "metrics.jsonl");
  REQUIRE(log_a.size() == log_b.size());
  for (size_t i = 0; i < log_a.size(); ++i)
    if (log_a[i]["kind"] == "train")
      CHECK(log_a[i]["total"].get<double>() == log_b[i]["total"].get<double>());

  // a different seed diverges
  RunConfig cfg3 = micro_config(99);
  fs::path out_c = fresh_dir("det_c");
  train::run_training(cfg3, out_c.string(), "", 0, 10);
  std::vector<json> log_c = read_jsonl(out_c / "metrics.jsonl");
  CHECK(log_c[0]["total"].get<double>() != log_a[0]["total"].get<double>());
}

TEST_CASE("checkpoint resume reproduces the uninterrupted trajectory") {
  RunConfig cfg = micro_config();
  cfg.optim.batch_size = 4;  // 2 steps per epoch
  cfg.optim.epochs = 3;      // 6 steps total
  cfg.optim.eval_every = 0;
  fs::path full = fresh_dir("resume_full");
  train::run_training(cfg, full.string(), "", 3, 6);
  REQUIRE(fs::exists(full / "step_000003.ckpt"));
  std::vector<json> log_full = read_jsonl(full / "metrics.jsonl");

  fs::path cont = fresh_dir("resume_cont");
  train::run_training(cfg, cont.string(), (full / "step_000003.ckpt").string(), 0, 6);
  std::vector<json> log_cont = read_jsonl(cont / "metrics.jsonl");

  std::vector<double> tail_full, tail_cont;
  for (const json& r : log_full)
    if (r["kind"] == "train" && r["step"].get<int64_t>() > 3)
      tail_full.push_back(r["total"].get<double>());
  for (const json& r : log_cont)
    if (r["kind"] == "train") tail_cont.push_back(r["total"].get<double>());
  REQUIRE(tail_full.size() == 3);
  REQUIRE(tail_cont.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(tail_full[i] == tail_cont[i]);

  // incompatible model section refuses with CheckpointError
  RunConfig other = cfg;
  other.model.d = 8;
  other.model.heads = 2;
  CHECK_THROWS_AS(
      train::run_training(other, fresh_dir("resume_bad").string(),
                          (full / "step_000003.ckpt").string(), 0, 1),
      CheckpointError);
}

TEST_CASE("memorization harness: training-split evaluation reaches R1@0.5 = 1") {
  RunConfig cfg = micro_config();
  cfg.optim.epochs = 400;  // 1 step per epoch at bs 8
  cfg.optim.lr = 2e-3;
  cfg.optim.eval_every = 0;
  fs::path out = fresh_dir("overfit");
  train::run_training(cfg, out.string(), "", 0, 400);

  train::Checkpoint ck = train::load_checkpoint((out / "last.ckpt").string());
  RunConfig loaded = config_from_json_text(ck.config_json);
  DualPathModel model(loaded.model, loaded.seed);
  train::AdamW opt;
  train::restore_model(model, opt, ck);
  train::DataBundle bundle = train::resolve_datasets(loaded);
  train::EvalOutput ev = train::evaluate(model, bundle.train, loaded.eval, loaded.model,
                                         TokenCondition::kFull);
  CHECK(ev.report.r1_at.at(0.5) == doctest::Approx(1.0));

  // prediction file re-scored by the evaluation module gives the same metrics
  const std::string pred_path = (out / "preds.jsonl").string();
  eval::write_predictions(pred_path, ev.predictions);
  std::vector<eval::PredictionRecord> back = eval::read_predictions(pred_path);
  REQUIRE(back.size() == bundle.train.size());
  std::vector<std::vector<eval::MomentCandidate>> preds;
  std::vector<std::vector<eval::Span>> gts;
  for (size_t i = 0; i < back.size(); ++i) {
    preds.push_back(back[i].moments);
    std::vector<eval::Span> g;
    for (auto [a, b] : bundle.train.sample(i).gt.moments) g.push_back({a, b});
    gts.push_back(g);
  }
  for (auto [thr, val] : ev.report.r1_at)
    CHECK(eval::recall_at_1(preds, gts, thr) == val);
  auto [avg, per] = eval::mean_ap(preds, gts, loaded.eval.map_thresholds);
  CHECK(avg == ev.report.map_avg);
}

TEST_CASE("missing ground-truth saliency: HD metrics absent, MR metrics present") {
  RunConfig cfg = micro_config();
  DualPathModel model(cfg.model, cfg.seed);
  data::Dataset ds = data::synthesize_dataset(*cfg.data.synthetic);
  data::Dataset stripped;
  for (size_t i = 0; i < ds.size(); ++i) {
    data::Sample s = ds.sample(i);
    s.gt.saliency_labels.clear();
    s.gt.highlight_set.clear();
    stripped.push(s);
  }
  train::EvalOutput ev = train::evaluate(model, stripped, cfg.eval, cfg.model,
                                         TokenCondition::kFull);
  CHECK_FALSE(ev.report.hd_map.has_value());
  CHECK_FALSE(ev.report.hit_at_1.has_value());
  CHECK(ev.report.r1_at.count(0.5) == 1);
}

TEST_CASE("ablate sweeps produce one table row per value") {
  RunConfig cfg = micro_config();
  cfg.optim.epochs = 1;
  fs::path out = fresh_dir("ablate");
  const std::string cfg_path = (out / "config.json").string();
  {
    std::ofstream f(cfg_path);
    f << config_to_json_text(cfg);
  }
  const int rc = cli::run_ablate(cfg_path, {}, "fusion", {"add", "hadamard"}, out.string());
  CHECK(rc == 0);
  std::ifstream csv(out / "comparison.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line))
    if (!line.empty()) lines.push_back(line);
  REQUIRE(lines.size() == 3);  // header + 2 rows
  CHECK(lines[0].rfind("axis_value,", 0) == 0);
  CHECK(lines[1].rfind("add,", 0) == 0);
  CHECK(lines[2].rfind("hadamard,", 0) == 0);
}

TEST_CASE("cli: synth/train/eval/analyze round trip with documented exit codes") {
  fs::path work = fresh_dir("cli");
  // synth: archive appears and regenerates byte-identically
  const std::string spec_path = (work / "spec.json").string();
  {
    std::ofstream f(spec_path);
    f << R"({"num_samples":6,"T":16,"L":6,"d":16,"n_latent":4,"noise_sigma":0.02,"seed":5})";
  }
  const std::string arch = (work / "arch").string();
  CHECK(run_cli("synth --spec " + spec_path + " --out " + arch) == 0);
  REQUIRE(fs::exists(fs::path(arch) / "manifest.json"));
  data::Dataset loaded = data::load_feature_archive(arch);
  CHECK(loaded.size() == 6);
  const std::string arch2 = (work / "arch2").string();
  CHECK(run_cli("synth --spec " + spec_path + " --out " + arch2) == 0);
  std::ifstream m1(fs::path(arch) / "manifest.json"), m2(fs::path(arch2) / "manifest.json");
  std::string s1((std::istreambuf_iterator<char>(m1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(m2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);

  // train on the archive
  RunConfig cfg = micro_config();
  cfg.data.synthetic.reset();
  cfg.data.archive_root = arch;
  cfg.data.val_fraction = 0.34;
  cfg.optim.epochs = 1;
  cfg.optim.batch_size = 4;
  const std::string cfg_path = (work / "config.json").string();
  {
    std::ofstream f(cfg_path);
    f << config_to_json_text(cfg);
  }
  const std::string run_dir = (work / "run").string();
  CHECK(run_cli("train --config " + cfg_path + " --out " + run_dir) == 0);
  REQUIRE(fs::exists(fs::path(run_dir) / "last.ckpt"));

  // eval writes predictions + report
  const std::string eval_dir = (work / "eval").string();
  CHECK(run_cli("eval --checkpoint " + run_dir + "/last.ckpt --out " + eval_dir) == 0);
  CHECK(fs::exists(fs::path(eval_dir) / "predictions.jsonl"));
  CHECK(fs::exists(fs::path(eval_dir) / "report.json"));

  // analyze: correlation report and the diagnostic plots
  const std::string ana_dir = (work / "ana").string();
  CHECK(run_cli("analyze --checkpoint " + run_dir + "/last.ckpt --what correlation --out " +
                ana_dir) == 0);
  CHECK(fs::exists(fs::path(ana_dir) / "correlation.json"));
  CHECK(run_cli("analyze --checkpoint " + run_dir + "/last.ckpt --what plots --out " +
                ana_dir) == 0);
  size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(ana_dir))
    if (e.path().extension() == ".png") ++pngs;
  CHECK(pngs >= 5);
  CHECK(run_cli("analyze --checkpoint " + run_dir +
                "/last.ckpt --what token_condition --out " + ana_dir) == 0);
  for (const char* mode : {"full", "word_only", "eos_only"}) {
    const fs::path rep = fs::path(ana_dir) / (std::string("token_condition_") + mode + ".json");
    REQUIRE(fs::exists(rep));
    std::ifstream in(rep);
    json j;
    in >> j;
    CHECK(j["mode"] == mode);
  }

  // exit codes: usage 2, data 3, checkpoint 4
  CHECK(run_cli("analyze --checkpoint " + run_dir + "/last.ckpt --what nonsense --out " +
                ana_dir) == 2);
  CHECK(run_cli("train --config /nonexistent.json --out " + (work / "x").string()) == 2);
  CHECK(run_cli("nonsense") == 2);
  {
    RunConfig bad = cfg;
    bad.data.archive_root = (work / "missing_archive").string();
    const std::string bad_path = (work / "bad.json").string();
    std::ofstream f(bad_path);
    f << config_to_json_text(bad);
    f.close();
    CHECK(run_cli("train --config " + bad_path + " --out " + (work / "y").string()) == 3);
  }
  CHECK(run_cli("eval --checkpoint " + run_dir + "/missing.ckpt --out " + eval_dir) == 4);
  CHECK(run_cli("eval --checkpoint " + run_dir +
                "/last.ckpt --override model.d=32 --out " + eval_dir) == 4);
}
