// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vtg/data_io.hpp"
#include "vtg/objectives.hpp"

namespace vtg {

struct DataConfig {
  std::string archive_root;      // precomputed feature archive
  std::string val_archive_root;  // optional separate validation archive
  std::optional<data::SyntheticSpec> synthetic;
  int64_t val_samples = 100;   // validation size for synthetic data
  double val_fraction = 0.1;   // archive holdout when no val archive given
};

struct LayerCounts {
  int d_enc = 2;  // dummy encoder depth
  int aca = 3;    // cross-attention layers, sentence path
  int p_sa = 2;   // slot refinement iterations
  int p_enc = 2;  // temporal layers, phrase path
  int s_enc = 2;  // temporal layers, sentence path
};

struct ModelConfig {
  int64_t d = 256;
  int64_t l_d = 3;
  int64_t n_phrases = 4;
  int heads = 8;
  LayerCounts layers;
  int pyramid_levels = 4;
  std::string fusion = "add";
  int mlp_ratio = 4;
  int64_t max_t = 512;
  int64_t max_l = 64;
  std::string token_condition = "full";
  double offset_range_base = 4.0;
};

struct OptimConfig {
  double lr = 1e-4;
  int64_t batch_size = 64;
  int64_t epochs = 150;
  double weight_decay = 1e-4;
  double grad_clip = 1.0;
  int64_t eval_every = 1;      // epochs between validation passes
  int64_t chunk_size = 8;      // deterministic gradient reduction granularity
  std::string lr_schedule = "constant";  // or "step"
  int64_t lr_step_epochs = 0;  // schedule=step: drop every this many epochs
  double lr_step_gamma = 0.5;
};

struct EvalSettings {
  std::vector<double> r1_thresholds{0.5, 0.7};
  std::vector<double> map_thresholds;  // defaults to 0.50..0.95
  double nms_threshold = 0.7;
  int64_t top_k = 10;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  OptimConfig optim;
  loss::LossWeights loss;
  EvalSettings eval;
  uint64_t seed = 1;

  void validate() const;  // throws ConfigError naming the offending field
};

RunConfig default_config();
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);

/// Applies one `dotted.path=value` override onto the JSON form of a config.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

}  // namespace vtg
