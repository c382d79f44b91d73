// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/config.hpp"

#include <fstream>

#include <json.hpp>

#include "vtg/errors.hpp"
#include "vtg/evaluation.hpp"
#include "vtg/grounding_head.hpp"

namespace vtg {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const std::string& path, const T& fallback) {
  const json* cur = &j;
  size_t pos = 0;
  while (pos < path.size()) {
    const size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (!cur->is_object() || !cur->contains(key)) return fallback;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  try {
    return cur->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + path + "' has the wrong type");
  }
}

json synthetic_to_json(const data::SyntheticSpec& s) {
  return {{"num_samples", s.num_samples}, {"T", s.T},
          {"L", s.L},                     {"d", s.d},
          {"n_latent", s.n_latent},       {"moment_min_len", s.moment_min_len},
          {"moment_max_len", s.moment_max_len}, {"noise_sigma", s.noise_sigma},
          {"seed", s.seed}};
}

data::SyntheticSpec synthetic_from_json(const json& j) {
  data::SyntheticSpec s;
  s.num_samples = field<int64_t>(j, "num_samples", s.num_samples);
  s.T = field<int64_t>(j, "T", s.T);
  s.L = field<int64_t>(j, "L", s.L);
  s.d = field<int64_t>(j, "d", s.d);
  s.n_latent = field<int64_t>(j, "n_latent", s.n_latent);
  s.moment_min_len = field<double>(j, "moment_min_len", s.moment_min_len);
  s.moment_max_len = field<double>(j, "moment_max_len", s.moment_max_len);
  s.noise_sigma = field<double>(j, "noise_sigma", s.noise_sigma);
  s.seed = field<uint64_t>(j, "seed", s.seed);
  return s;
}

}  // namespace

void RunConfig::validate() const {
  if (model.d < 1) throw ConfigError("model.d must be positive");
  if (model.heads < 1 || model.d % model.heads != 0)
    throw ConfigError("model.heads must divide model.d");
  if (model.l_d < 0) throw ConfigError("model.l_d must be >= 0");
  if (model.n_phrases < 1) throw ConfigError("model.n_phrases must be >= 1");
  if (model.pyramid_levels < 1) throw ConfigError("model.pyramid_levels must be >= 1");
  if (model.mlp_ratio < 1) throw ConfigError("model.mlp_ratio must be >= 1");
  head::fusion_from_string(model.fusion);
  if (model.token_condition != "full" && model.token_condition != "word_only" &&
      model.token_condition != "eos_only")
    throw ConfigError("model.token_condition must be full|word_only|eos_only");
  if (optim.batch_size < 1) throw ConfigError("optim.batch_size must be >= 1");
  if (optim.epochs < 0) throw ConfigError("optim.epochs must be >= 0");
  if (optim.lr <= 0) throw ConfigError("optim.lr must be positive");
  if (optim.chunk_size < 1) throw ConfigError("optim.chunk_size must be >= 1");
  if (optim.lr_schedule != "constant" && optim.lr_schedule != "step")
    throw ConfigError("optim.lr_schedule must be constant|step");
  loss.validate();
  if (eval.nms_threshold <= 0 || eval.nms_threshold > 1)
    throw ConfigError("eval.nms_threshold must lie in (0,1]");
  if (eval.top_k < 1) throw ConfigError("eval.top_k must be >= 1");
  if (eval.r1_thresholds.empty()) throw ConfigError("eval.r1_thresholds must be non-empty");
  if (data.synthetic) data.synthetic->validate();
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.eval.map_thresholds = eval::default_map_thresholds();
  return cfg;
}

static RunConfig config_from_json(const json& j) {
  RunConfig cfg = default_config();
  cfg.data.archive_root = field<std::string>(j, "data.archive_root", "");
  cfg.data.val_archive_root = field<std::string>(j, "data.val_archive_root", "");
  if (j.contains("data") && j["data"].contains("synthetic") && !j["data"]["synthetic"].is_null())
    cfg.data.synthetic = synthetic_from_json(j["data"]["synthetic"]);
  cfg.data.val_samples = field<int64_t>(j, "data.val_samples", cfg.data.val_samples);
  cfg.data.val_fraction = field<double>(j, "data.val_fraction", cfg.data.val_fraction);

  cfg.model.d = field<int64_t>(j, "model.d", cfg.model.d);
  cfg.model.l_d = field<int64_t>(j, "model.l_d", cfg.model.l_d);
  cfg.model.n_phrases = field<int64_t>(j, "model.n_phrases", cfg.model.n_phrases);
  cfg.model.heads = field<int>(j, "model.heads", cfg.model.heads);
  cfg.model.layers.d_enc = field<int>(j, "model.layers.d_enc", cfg.model.layers.d_enc);
  cfg.model.layers.aca = field<int>(j, "model.layers.aca", cfg.model.layers.aca);
  cfg.model.layers.p_sa = field<int>(j, "model.layers.p_sa", cfg.model.layers.p_sa);
  cfg.model.layers.p_enc = field<int>(j, "model.layers.p_enc", cfg.model.layers.p_enc);
  cfg.model.layers.s_enc = field<int>(j, "model.layers.s_enc", cfg.model.layers.s_enc);
  cfg.model.pyramid_levels = field<int>(j, "model.pyramid_levels", cfg.model.pyramid_levels);
  cfg.model.fusion = field<std::string>(j, "model.fusion", cfg.model.fusion);
  cfg.model.mlp_ratio = field<int>(j, "model.mlp_ratio", cfg.model.mlp_ratio);
  cfg.model.max_t = field<int64_t>(j, "model.max_t", cfg.model.max_t);
  cfg.model.max_l = field<int64_t>(j, "model.max_l", cfg.model.max_l);
  cfg.model.token_condition =
      field<std::string>(j, "model.token_condition", cfg.model.token_condition);
  cfg.model.offset_range_base =
      field<double>(j, "model.offset_range_base", cfg.model.offset_range_base);

  cfg.optim.lr = field<double>(j, "optim.lr", cfg.optim.lr);
  cfg.optim.batch_size = field<int64_t>(j, "optim.batch_size", cfg.optim.batch_size);
  cfg.optim.epochs = field<int64_t>(j, "optim.epochs", cfg.optim.epochs);
  cfg.optim.weight_decay = field<double>(j, "optim.weight_decay", cfg.optim.weight_decay);
  cfg.optim.grad_clip = field<double>(j, "optim.grad_clip", cfg.optim.grad_clip);
  cfg.optim.eval_every = field<int64_t>(j, "optim.eval_every", cfg.optim.eval_every);
  cfg.optim.chunk_size = field<int64_t>(j, "optim.chunk_size", cfg.optim.chunk_size);
  cfg.optim.lr_schedule = field<std::string>(j, "optim.lr_schedule", cfg.optim.lr_schedule);
  cfg.optim.lr_step_epochs = field<int64_t>(j, "optim.lr_step_epochs", cfg.optim.lr_step_epochs);
  cfg.optim.lr_step_gamma = field<double>(j, "optim.lr_step_gamma", cfg.optim.lr_step_gamma);

  cfg.loss.lambda_mr = field<double>(j, "loss.lambda_mr", cfg.loss.lambda_mr);
  cfg.loss.lambda_hd = field<double>(j, "loss.lambda_hd", cfg.loss.lambda_hd);
  cfg.loss.lambda_phrase = field<double>(j, "loss.lambda_phrase", cfg.loss.lambda_phrase);
  cfg.loss.lambda_attn = field<double>(j, "loss.lambda_attn", cfg.loss.lambda_attn);
  cfg.loss.r_dqa = field<double>(j, "loss.r_dqa", cfg.loss.r_dqa);
  cfg.loss.tau = field<double>(j, "loss.tau", cfg.loss.tau);
  cfg.loss.focal_alpha = field<double>(j, "loss.focal_alpha", cfg.loss.focal_alpha);
  cfg.loss.focal_gamma = field<double>(j, "loss.focal_gamma", cfg.loss.focal_gamma);
  cfg.loss.rank_margin = field<double>(j, "loss.rank_margin", cfg.loss.rank_margin);
  cfg.loss.rank_pair_cap = field<int>(j, "loss.rank_pair_cap", cfg.loss.rank_pair_cap);

  cfg.eval.r1_thresholds =
      field<std::vector<double>>(j, "eval.r1_thresholds", cfg.eval.r1_thresholds);
  cfg.eval.map_thresholds =
      field<std::vector<double>>(j, "eval.map_thresholds", cfg.eval.map_thresholds);
  cfg.eval.nms_threshold = field<double>(j, "eval.nms_threshold", cfg.eval.nms_threshold);
  cfg.eval.top_k = field<int64_t>(j, "eval.top_k", cfg.eval.top_k);

  cfg.seed = field<uint64_t>(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

std::string config_to_json_text(const RunConfig& cfg) {
  json j;
  j["data"] = {{"archive_root", cfg.data.archive_root},
               {"val_archive_root", cfg.data.val_archive_root},
               {"val_samples", cfg.data.val_samples},
               {"val_fraction", cfg.data.val_fraction}};
  j["data"]["synthetic"] = cfg.data.synthetic ? synthetic_to_json(*cfg.data.synthetic)
                                              : json(nullptr);
  j["model"] = {{"d", cfg.model.d},
                {"l_d", cfg.model.l_d},
                {"n_phrases", cfg.model.n_phrases},
                {"heads", cfg.model.heads},
                {"layers",
                 {{"d_enc", cfg.model.layers.d_enc},
                  {"aca", cfg.model.layers.aca},
                  {"p_sa", cfg.model.layers.p_sa},
                  {"p_enc", cfg.model.layers.p_enc},
                  {"s_enc", cfg.model.layers.s_enc}}},
                {"pyramid_levels", cfg.model.pyramid_levels},
                {"fusion", cfg.model.fusion},
                {"mlp_ratio", cfg.model.mlp_ratio},
                {"max_t", cfg.model.max_t},
                {"max_l", cfg.model.max_l},
                {"token_condition", cfg.model.token_condition},
                {"offset_range_base", cfg.model.offset_range_base}};
  j["optim"] = {{"lr", cfg.optim.lr},
                {"batch_size", cfg.optim.batch_size},
                {"epochs", cfg.optim.epochs},
                {"weight_decay", cfg.optim.weight_decay},
                {"grad_clip", cfg.optim.grad_clip},
                {"eval_every", cfg.optim.eval_every},
                {"chunk_size", cfg.optim.chunk_size},
                {"lr_schedule", cfg.optim.lr_schedule},
                {"lr_step_epochs", cfg.optim.lr_step_epochs},
                {"lr_step_gamma", cfg.optim.lr_step_gamma}};
  j["loss"] = {{"lambda_mr", cfg.loss.lambda_mr},
               {"lambda_hd", cfg.loss.lambda_hd},
               {"lambda_phrase", cfg.loss.lambda_phrase},
               {"lambda_attn", cfg.loss.lambda_attn},
               {"r_dqa", cfg.loss.r_dqa},
               {"tau", cfg.loss.tau},
               {"focal_alpha", cfg.loss.focal_alpha},
               {"focal_gamma", cfg.loss.focal_gamma},
               {"rank_margin", cfg.loss.rank_margin},
               {"rank_pair_cap", cfg.loss.rank_pair_cap}};
  j["eval"] = {{"r1_thresholds", cfg.eval.r1_thresholds},
               {"map_thresholds", cfg.eval.map_thresholds},
               {"nms_threshold", cfg.eval.nms_threshold},
               {"top_k", cfg.eval.top_k}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
  json j = json::parse(json_text);
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "' must look like key.path=value");
    const std::string path = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // unquoted strings
    }
    json* cur = &j;
    size_t pos = 0;
    for (;;) {
      const size_t dot = path.find('.', pos);
      const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
      if (key.empty()) throw ConfigError("override '" + ov + "' has an empty path segment");
      if (dot == std::string::npos) {
        (*cur)[key] = value;
        break;
      }
      cur = &(*cur)[key];
      pos = dot + 1;
    }
  }
  return j.dump(2);
}

}  // namespace vtg
