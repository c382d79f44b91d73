// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vtg/config.hpp"
#include "vtg/evaluation.hpp"
#include "vtg/model.hpp"

namespace vtg::train {

struct AdamW {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t t = 0;

  /// grads are batch-mean gradients aligned with the store's id order.
  /// Clips by global norm first, then applies decoupled weight decay.
  void step(ParamStore& ps, std::vector<Tensor>& grads, double lr, double weight_decay,
            double grad_clip);
};

struct SampleLossOut {
  Var total = nullptr;
  loss::LossBreakdown values;
};

/// Full per-sample objective; batch_eos carries every eos embedding of the
/// batch (contrastive negatives for the reconstruction term).
SampleLossOut sample_loss(Tape& tape, const DualPathModel& model,
                          const data::PaddedSample& s,
                          const std::vector<Tensor>& batch_eos, size_t idx,
                          const loss::LossWeights& w, TokenCondition cond);

/// One optimizer step over a collated batch. Gradients are reduced in fixed
/// chunk order so results do not depend on the number of OpenMP threads.
loss::LossBreakdown train_step(DualPathModel& model, AdamW& opt, const data::Batch& batch,
                               const RunConfig& cfg, double lr, TokenCondition cond);

struct EvalOutput {
  eval::MetricReport report;
  std::vector<eval::PredictionRecord> predictions;
};
EvalOutput evaluate(const DualPathModel& model, const data::Dataset& ds,
                    const EvalSettings& es, const ModelConfig& mc, TokenCondition cond);

// ---- checkpointing ----
struct Checkpoint {
  std::string config_json;
  int64_t step = 0, epoch = 0, pos = 0;
  int64_t adam_t = 0;
  double best_r1 = -1.0;
  uint64_t shuffle_state = 0;
  std::vector<int64_t> epoch_order;
  std::vector<std::pair<std::string, Tensor>> values, adam_m, adam_v;
};

void save_checkpoint(const std::string& path, const DualPathModel& model, const AdamW& opt,
                     const RunConfig& cfg, int64_t step, int64_t epoch, int64_t pos,
                     double best_r1, uint64_t shuffle_state,
                     const std::vector<int64_t>& epoch_order);
Checkpoint load_checkpoint(const std::string& path);

/// Copies parameters and optimizer moments into a model built from the same
/// model config; any mismatch raises CheckpointError.
void restore_model(DualPathModel& model, AdamW& opt, const Checkpoint& ck);

/// Raises CheckpointError (printing both hashes) when the model sections of
/// the two configs differ.
void require_compatible(const RunConfig& run_cfg, const std::string& ck_config_json);

struct DataBundle {
  data::Dataset train, val;
};
DataBundle resolve_datasets(const RunConfig& cfg);

struct TrainResult {
  eval::MetricReport final_val;
  std::string best_path, last_path;
  int64_t steps = 0;
};
/// save_every_steps > 0 additionally writes step_NNNNNN.ckpt snapshots.
TrainResult run_training(const RunConfig& cfg, const std::string& out_dir,
                         const std::string& resume_path = "",
                         int64_t save_every_steps = 0, int64_t max_steps = 0);

}  // namespace vtg::train
