// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "vtg/analysis.hpp"
#include "vtg/errors.hpp"
#include "vtg/train.hpp"

namespace vtg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig load_with_overrides(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  std::string text;
  if (config_path.empty()) {
    text = config_to_json_text(default_config());
  } else {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  if (!overrides.empty()) text = apply_overrides(text, overrides);
  return config_from_json_text(text);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << "\n";
}

struct LoadedModel {
  RunConfig cfg;
  DualPathModel model;
  train::AdamW opt;
};

LoadedModel load_model(const std::string& checkpoint_path,
                       const std::vector<std::string>& overrides) {
  train::Checkpoint ck = train::load_checkpoint(checkpoint_path);
  std::string text = ck.config_json;
  if (!overrides.empty()) text = apply_overrides(text, overrides);
  RunConfig cfg = config_from_json_text(text);
  train::require_compatible(cfg, ck.config_json);
  LoadedModel lm{cfg, DualPathModel(cfg.model, cfg.seed), {}};
  train::restore_model(lm.model, lm.opt, ck);
  return lm;
}

json report_json(const eval::MetricReport& r) { return json::parse(eval::report_to_json(r)); }

}  // namespace

int run_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir, const std::string& resume_path,
              int64_t save_every_steps, int64_t max_steps) {
  RunConfig cfg = load_with_overrides(config_path, overrides);
  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "config.json").string(), config_to_json_text(cfg));
  train::TrainResult res =
      train::run_training(cfg, out_dir, resume_path, save_every_steps, max_steps);
  write_text((fs::path(out_dir) / "report.json").string(),
             eval::report_to_json(res.final_val));
  std::cout << "trained " << res.steps << " steps; best checkpoint: " << res.best_path
            << "\n";
  std::cout << eval::report_to_json(res.final_val) << "\n";
  return kOk;
}

int run_eval(const std::string& checkpoint_path, const std::vector<std::string>& overrides,
             const std::string& out_dir) {
  LoadedModel lm = load_model(checkpoint_path, overrides);
  fs::create_directories(out_dir);
  train::DataBundle ds = train::resolve_datasets(lm.cfg);
  const TokenCondition cond = token_condition_from_string(lm.cfg.model.token_condition);
  train::EvalOutput ev = train::evaluate(lm.model, ds.val, lm.cfg.eval, lm.cfg.model, cond);
  eval::write_predictions((fs::path(out_dir) / "predictions.jsonl").string(),
                          ev.predictions);
  write_text((fs::path(out_dir) / "report.json").string(), eval::report_to_json(ev.report));
  std::cout << eval::report_to_json(ev.report) << "\n";
  return kOk;
}

int run_synth(const std::string& spec_path, const std::string& out_root) {
  std::ifstream in(spec_path);
  if (!in) throw ConfigError("cannot open synthetic spec: " + spec_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  data::SyntheticSpec spec;
  spec.num_samples = j.value("num_samples", spec.num_samples);
  spec.T = j.value("T", spec.T);
  spec.L = j.value("L", spec.L);
  spec.d = j.value("d", spec.d);
  spec.n_latent = j.value("n_latent", spec.n_latent);
  spec.moment_min_len = j.value("moment_min_len", spec.moment_min_len);
  spec.moment_max_len = j.value("moment_max_len", spec.moment_max_len);
  spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
  spec.seed = j.value("seed", spec.seed);
  spec.validate();
  data::Dataset ds = data::synthesize_dataset(spec);
  data::write_feature_archive(ds, out_root);
  std::cout << "wrote " << ds.size() << " samples under " << out_root << "\n";
  return kOk;
}

int run_ablate(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& axis, const std::vector<std::string>& values,
               const std::string& out_dir) {
  if (axis != "phrase_n" && axis != "fusion" && axis != "token_condition")
    throw ConfigError("ablate: unknown axis '" + axis +
                      "' (expected phrase_n|fusion|token_condition)");
  if (values.empty()) throw ConfigError("ablate: no values given");
  fs::create_directories(out_dir);

  json rows = json::array();
  std::string csv =
      "axis_value,r1_0.50,r1_0.70,map_avg,miou,hd_map,hit_at_1\n";
  for (const std::string& v : values) {
    std::vector<std::string> ovs = overrides;
    if (axis == "phrase_n")
      ovs.push_back("model.n_phrases=" + v);
    else if (axis == "fusion")
      ovs.push_back("model.fusion=" + v);
    else
      ovs.push_back("model.token_condition=" + v);
    RunConfig cfg = load_with_overrides(config_path, ovs);
    const std::string run_dir = (fs::path(out_dir) / (axis + "_" + v)).string();
    train::TrainResult res = train::run_training(cfg, run_dir);
    const eval::MetricReport& r = res.final_val;
    auto get_r1 = [&](double t) { return r.r1_at.count(t) ? r.r1_at.at(t) : 0.0; };
    char line[256];
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", v.c_str(),
                  get_r1(0.5), get_r1(0.7), r.map_avg, r.miou, r.hd_map.value_or(0.0),
                  r.hit_at_1.value_or(0.0));
    csv += line;
    json row = {{"axis", axis}, {"value", v}, {"report", report_json(r)}};
    rows.push_back(row);
  }
  write_text((fs::path(out_dir) / "comparison.csv").string(), csv);
  write_text((fs::path(out_dir) / "comparison.json").string(), rows.dump(2));
  std::cout << csv;
  return kOk;
}

int run_analyze(const std::string& checkpoint_path,
                const std::vector<std::string>& overrides, const std::string& what,
                const std::string& out_dir, int64_t sample_index) {
  if (what != "correlation" && what != "plots" && what != "token_condition")
    throw ConfigError("analyze: unknown target '" + what +
                      "' (expected correlation|plots|token_condition)");
  LoadedModel lm = load_model(checkpoint_path, overrides);
  fs::create_directories(out_dir);
  train::DataBundle ds = train::resolve_datasets(lm.cfg);

  if (what == "correlation") {
    analysis::CorrelationReport rep =
        analysis::eos_word_attention_correlation(lm.model, ds.val, "val");
    write_text((fs::path(out_dir) / "correlation.json").string(),
               analysis::correlation_report_to_json(rep));
    std::cout << "mean pearson " << rep.mean_pearson << ", mean spearman "
              << rep.mean_spearman << " over " << rep.per_sample.size() << " samples\n";
    return kOk;
  }
  if (what == "plots") {
    if (sample_index < 0 || sample_index >= static_cast<int64_t>(ds.val.size()))
      throw ConfigError("analyze: --sample out of range");
    char run_id[32];
    std::snprintf(run_id, sizeof run_id, "run%04lld", static_cast<long long>(sample_index));
    analysis::RunArtifacts art = analysis::collect_artifacts(
        lm.model, ds.val.sample(static_cast<size_t>(sample_index)), lm.cfg.eval,
        lm.cfg.model, run_id);
    std::vector<std::string> files = analysis::emit_plots(art, out_dir);
    for (const std::string& f : files) std::cout << f << "\n";
    return kOk;
  }
  // token_condition: one report per mode, full first
  for (const std::string& mode : {"full", "word_only", "eos_only"}) {
    eval::MetricReport rep = analysis::run_token_condition(
        lm.model, ds.val, lm.cfg.eval, lm.cfg.model, token_condition_from_string(mode));
    json j = json::parse(eval::report_to_json(rep));
    j["mode"] = mode;
    write_text((fs::path(out_dir) / ("token_condition_" + mode + ".json")).string(),
               j.dump(2));
    std::cout << mode << ": r1@0.7=" << (rep.r1_at.count(0.7) ? rep.r1_at.at(0.7) : 0.0)
              << "\n";
  }
  return kOk;
}

int report_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kCheckpointError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vtg::cli
