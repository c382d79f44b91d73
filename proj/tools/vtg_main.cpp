// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: train / eval / synth / ablate / analyze.
#include <CLI11.hpp>

#include <string>
#include <vector>

#include "vtg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dual-path video temporal grounding"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", resume, checkpoint, axis, what = "correlation";
  std::string spec_path, out_root;
  std::vector<std::string> overrides, values;
  std::string seed;
  int64_t save_every = 0, max_steps = 0, sample_index = 0;

  auto add_common = [&](CLI::App* c, bool with_config) {
    if (with_config) c->add_option("--config", config_path, "run config JSON");
    c->add_option("--out", out_dir, "output directory");
    c->add_option("--override", overrides, "dotted-path config override key=value")
        ->take_all();
    c->add_option("--seed", seed, "override the run seed");
  };

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train, true);
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--save-every-steps", save_every, "periodic step checkpoints");
  train->add_option("--max-steps", max_steps, "stop after this many optimizer steps");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_common(eval_cmd, false);

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic feature archive");
  synth->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  synth->add_option("--out", out_root, "archive root directory")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one config axis");
  add_common(ablate, true);
  ablate->add_option("--axis", axis, "phrase_n | fusion | token_condition")->required();
  ablate->add_option("--values", values, "comma- or space-separated values")
      ->required()
      ->delimiter(',');

  CLI::App* analyze = app.add_subcommand("analyze", "diagnostics for a checkpoint");
  analyze->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_common(analyze, false);
  analyze->add_option("--what", what, "correlation | plots | token_condition");
  analyze->add_option("--sample", sample_index, "sample index for plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return vtg::cli::kUsageError;
  }

  if (!seed.empty()) overrides.push_back("seed=" + seed);

  try {
    if (train->parsed())
      return vtg::cli::run_train(config_path, overrides, out_dir, resume, save_every,
                                 max_steps);
    if (eval_cmd->parsed()) return vtg::cli::run_eval(checkpoint, overrides, out_dir);
    if (synth->parsed()) return vtg::cli::run_synth(spec_path, out_root);
    if (ablate->parsed())
      return vtg::cli::run_ablate(config_path, overrides, axis, values, out_dir);
    if (analyze->parsed())
      return vtg::cli::run_analyze(checkpoint, overrides, what, out_dir, sample_index);
  } catch (...) {
    return vtg::cli::report_current_exception();
  }
  return vtg::cli::kUsageError;
}
