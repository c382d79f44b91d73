// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "vtg/errors.hpp"
#include "vtg/rng.hpp"

namespace vtg::train {

namespace fs = std::filesystem;
using nlohmann::json;

void AdamW::step(ParamStore& ps, std::vector<Tensor>& grads, double lr, double weight_decay,
                 double grad_clip) {
  check_shape(grads.size() == ps.size(), "optimizer grads size");
  if (grad_clip > 0.0) {
    double sq = 0.0;
    for (const Tensor& g : grads)
      for (double v : g.data) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > grad_clip) {
      const double s = grad_clip / norm;
      for (Tensor& g : grads)
        for (double& v : g.data) v *= s;
    }
  }
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t id = 0; id < ps.size(); ++id) {
    Param& p = ps.at(id);
    Tensor& g = grads[id];
    if (g.data.empty()) g = Tensor(p.value.shape);
    for (size_t i = 0; i < p.value.data.size(); ++i) {
      double& m = p.adam_m.data[i];
      double& v = p.adam_v.data[i];
      const double gv = g.data[i];
      m = beta1 * m + (1.0 - beta1) * gv;
      v = beta2 * v + (1.0 - beta2) * gv * gv;
      const double mh = m / bc1;
      const double vh = v / bc2;
      p.value.data[i] -= lr * (mh / (std::sqrt(vh) + eps) + weight_decay * p.value.data[i]);
    }
  }
}

SampleLossOut sample_loss(Tape& tape, const DualPathModel& model,
                          const data::PaddedSample& s,
                          const std::vector<Tensor>& batch_eos, size_t idx,
                          const loss::LossWeights& w, TokenCondition cond) {
  const ModelConfig& mc = model.config();
  DualPathModel::Forward fwd = model.forward(tape, s, cond);
  Graph& g = tape.g;

  loss::MatchAssignment assign = loss::assign_targets(
      fwd.raw.positions, s.gt.moments, s.t_valid, mc.pyramid_levels, mc.offset_range_base);
  loss::MomentLossOut mr = loss::moment_loss(tape, fwd.raw, assign, w);

  loss::HighlightLossOut hd_s, hd_a;
  if (s.gt.has_saliency()) {
    hd_s = loss::highlight_loss(tape, fwd.saliency, s.gt.saliency_labels, s.t_valid, w);
    hd_a = loss::highlight_loss(tape, fwd.alpha, s.gt.saliency_labels, s.t_valid, w);
  } else {
    hd_s.rank = g.constant(Tensor({1}));
    hd_s.contrast = g.constant(Tensor({1}));
    hd_a = hd_s;
    hd_s.degenerate = hd_a.degenerate = true;
  }

  Var dqa = loss::dqa_term(tape, fwd.attn, w.r_dqa);
  Var eos = loss::eos_recon_term(tape, fwd.p_eos, batch_eos, idx, w.tau);

  Var total = scale(add(mr.cls, mr.reg), w.lambda_mr);
  total = add(total, scale(add(hd_s.rank, hd_s.contrast), w.lambda_hd));
  total = add(total, scale(add(hd_a.rank, hd_a.contrast), w.lambda_hd * w.lambda_attn));
  total = add(total, scale(add(dqa, eos), w.lambda_phrase));

  SampleLossOut out;
  out.total = total;
  out.values.cls = mr.cls->value().data[0];
  out.values.reg = mr.reg->value().data[0];
  out.values.hd_rank_s = hd_s.rank->value().data[0];
  out.values.hd_contrast_s = hd_s.contrast->value().data[0];
  out.values.hd_rank_alpha = hd_a.rank->value().data[0];
  out.values.hd_contrast_alpha = hd_a.contrast->value().data[0];
  out.values.dqa = dqa->value().data[0];
  out.values.eos_recon = eos->value().data[0];
  out.values.hd_degenerate = hd_s.degenerate;
  out.values = loss::total_loss(out.values, w);
  return out;
}

loss::LossBreakdown train_step(DualPathModel& model, AdamW& opt, const data::Batch& batch,
                               const RunConfig& cfg, double lr, TokenCondition cond) {
  const size_t B = batch.items.size();
  check_shape(B > 0, "train_step: empty batch");
  const size_t n_params = model.params().size();
  const size_t chunk = static_cast<size_t>(cfg.optim.chunk_size);
  const size_t n_chunks = (B + chunk - 1) / chunk;

  std::vector<Tensor> batch_eos;
  batch_eos.reserve(B);
  for (const auto& it : batch.items) batch_eos.push_back(it.eos);

  std::vector<std::vector<Tensor>> chunk_grads(n_chunks, std::vector<Tensor>(n_params));
  std::vector<loss::LossBreakdown> per_sample(B);

#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < static_cast<int64_t>(n_chunks); ++c) {
    const size_t lo = static_cast<size_t>(c) * chunk;
    const size_t hi = std::min(B, lo + chunk);
    for (size_t i = lo; i < hi; ++i) {
      Graph g;
      Tape tape(g, n_params);
      SampleLossOut sl =
          sample_loss(tape, model, batch.items[i], batch_eos, i, cfg.loss, cond);
      g.backward(sl.total);
      tape.fold_grads(chunk_grads[static_cast<size_t>(c)]);
      per_sample[i] = sl.values;
    }
  }

  // fixed-order reduction: results are independent of the thread count
  std::vector<Tensor> grads(n_params);
  for (size_t c = 0; c < n_chunks; ++c)
    for (size_t p = 0; p < n_params; ++p) {
      Tensor& src = chunk_grads[c][p];
      if (src.data.empty()) continue;
      if (grads[p].data.empty()) grads[p] = Tensor(src.shape);
      for (size_t k = 0; k < src.data.size(); ++k) grads[p].data[k] += src.data[k];
    }
  const double inv_b = 1.0 / static_cast<double>(B);
  for (Tensor& g : grads)
    for (double& v : g.data) v *= inv_b;

  opt.step(model.params(), grads, lr, cfg.optim.weight_decay, cfg.optim.grad_clip);

  loss::LossBreakdown mean{};
  for (const auto& v : per_sample) {
    mean.cls += v.cls;
    mean.reg += v.reg;
    mean.hd_rank_s += v.hd_rank_s;
    mean.hd_contrast_s += v.hd_contrast_s;
    mean.hd_rank_alpha += v.hd_rank_alpha;
    mean.hd_contrast_alpha += v.hd_contrast_alpha;
    mean.dqa += v.dqa;
    mean.eos_recon += v.eos_recon;
  }
  const double inv = 1.0 / static_cast<double>(B);
  mean.cls *= inv;
  mean.reg *= inv;
  mean.hd_rank_s *= inv;
  mean.hd_contrast_s *= inv;
  mean.hd_rank_alpha *= inv;
  mean.hd_contrast_alpha *= inv;
  mean.dqa *= inv;
  mean.eos_recon *= inv;
  return loss::total_loss(mean, cfg.loss);
}

EvalOutput evaluate(const DualPathModel& model, const data::Dataset& ds,
                    const EvalSettings& es, const ModelConfig& mc, TokenCondition cond) {
  check_shape(ds.size() > 0, "evaluate: empty dataset");
  const int64_t min_t = int64_t{1} << (mc.pyramid_levels - 1);
  const size_t n = ds.size();
  std::vector<std::vector<eval::MomentCandidate>> preds(n);
  std::vector<std::vector<eval::Span>> gts(n);
  std::vector<std::vector<double>> sal_scores(n);
  std::vector<std::vector<int>> sal_labels(n);
  std::vector<eval::PredictionRecord> records(n);

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
    const data::Sample& s = ds.sample(static_cast<size_t>(i));
    data::PaddedSample ps = data::pad_sample(
        s, std::max(min_t, s.video.clips.rows()), s.query.words.rows());
    Graph g;
    Tape tape(g, model.params().size());
    DualPathModel::Forward fwd = model.forward(tape, ps, cond);
    std::vector<eval::MomentCandidate> cands = head::decode_predictions(
        fwd.raw.cls_logits->value(), fwd.raw.offsets_norm->value(), fwd.raw.positions,
        ps.t_valid, ps.clip_seconds, es.nms_threshold, es.top_k);
    preds[static_cast<size_t>(i)] = cands;
    for (auto [a, b] : s.gt.moments) gts[static_cast<size_t>(i)].push_back({a, b});
    eval::PredictionRecord rec;
    rec.query_id = s.query_id;
    rec.moments = cands;
    for (int64_t tc = 0; tc < ps.t_valid; ++tc)
      rec.saliency.push_back(fwd.saliency->value().at(tc));
    records[static_cast<size_t>(i)] = rec;
    if (s.gt.has_saliency()) {
      sal_scores[static_cast<size_t>(i)] = rec.saliency;
      sal_labels[static_cast<size_t>(i)] = s.gt.saliency_labels;
    }
  }

  EvalOutput out;
  out.predictions = std::move(records);
  out.report.n_samples = static_cast<int64_t>(n);
  for (double thr : es.r1_thresholds)
    out.report.r1_at[thr] = eval::recall_at_1(preds, gts, thr);
  auto [avg, per] = eval::mean_ap(preds, gts, es.map_thresholds);
  out.report.map_avg = avg;
  out.report.map_at = per;
  out.report.miou = eval::mean_iou(preds, gts);

  std::vector<std::vector<double>> hs;
  std::vector<std::vector<int>> hl;
  for (size_t i = 0; i < n; ++i)
    if (!sal_labels[i].empty()) {
      hs.push_back(sal_scores[i]);
      hl.push_back(sal_labels[i]);
    }
  if (!hs.empty()) {
    eval::HdAggregate agg = eval::hd_metrics(hs, hl);
    out.report.hd_map = agg.hd_map;
    out.report.hit_at_1 = agg.hit_at_1;
    out.report.hd_excluded = agg.excluded;
  }
  return out;
}

// ---- checkpoint serialization ----

namespace {

void write_u32(std::ofstream& o, uint32_t v) { o.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ofstream& o, uint64_t v) { o.write(reinterpret_cast<char*>(&v), 8); }
uint32_t read_u32(std::ifstream& i) {
  uint32_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t read_u64(std::ifstream& i) {
  uint64_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

constexpr char kMagic[8] = {'V', 'T', 'G', 'C', 'K', 'P', 'T', '1'};

void write_tensor(std::ofstream& o, const std::string& name, const Tensor& t) {
  write_u32(o, static_cast<uint32_t>(name.size()));
  o.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(o, static_cast<uint32_t>(t.shape.size()));
  for (int64_t d : t.shape) write_u64(o, static_cast<uint64_t>(d));
  o.write(reinterpret_cast<const char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * 8));
}

std::pair<std::string, Tensor> read_tensor(std::ifstream& in) {
  const uint32_t nl = read_u32(in);
  std::string name(nl, '\0');
  in.read(name.data(), nl);
  const uint32_t nd = read_u32(in);
  std::vector<int64_t> shape(nd);
  for (uint32_t i = 0; i < nd; ++i) shape[i] = static_cast<int64_t>(read_u64(in));
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * 8));
  if (!in) throw CheckpointError("truncated checkpoint tensor: " + name);
  return {name, std::move(t)};
}

}  // namespace

void save_checkpoint(const std::string& path, const DualPathModel& model, const AdamW& opt,
                     const RunConfig& cfg, int64_t step, int64_t epoch, int64_t pos,
                     double best_r1, uint64_t shuffle_state,
                     const std::vector<int64_t>& epoch_order) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  json h;
  h["config"] = json::parse(config_to_json_text(cfg));
  h["step"] = step;
  h["epoch"] = epoch;
  h["pos"] = pos;
  h["adam_t"] = opt.t;
  h["best_r1"] = best_r1;
  h["shuffle_state"] = std::to_string(shuffle_state);
  h["epoch_order"] = epoch_order;
  const std::string hs = h.dump();
  write_u64(out, hs.size());
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  const ParamStore& ps = model.params();
  write_u64(out, ps.size());
  for (size_t i = 0; i < ps.size(); ++i) write_tensor(out, ps.at(i).name, ps.at(i).value);
  for (size_t i = 0; i < ps.size(); ++i) write_tensor(out, ps.at(i).name, ps.at(i).adam_m);
  for (size_t i = 0; i < ps.size(); ++i) write_tensor(out, ps.at(i).name, ps.at(i).adam_v);
  if (!out) throw DataError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const uint64_t hl = read_u64(in);
  std::string hs(hl, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hl));
  json h = json::parse(hs);
  Checkpoint ck;
  ck.config_json = h.at("config").dump();
  ck.step = h.at("step").get<int64_t>();
  ck.epoch = h.at("epoch").get<int64_t>();
  ck.pos = h.at("pos").get<int64_t>();
  ck.adam_t = h.at("adam_t").get<int64_t>();
  ck.best_r1 = h.at("best_r1").get<double>();
  ck.shuffle_state = std::stoull(h.at("shuffle_state").get<std::string>());
  for (const auto& v : h.at("epoch_order")) ck.epoch_order.push_back(v.get<int64_t>());
  const uint64_t np = read_u64(in);
  for (uint64_t i = 0; i < np; ++i) ck.values.push_back(read_tensor(in));
  for (uint64_t i = 0; i < np; ++i) ck.adam_m.push_back(read_tensor(in));
  for (uint64_t i = 0; i < np; ++i) ck.adam_v.push_back(read_tensor(in));
  return ck;
}

void restore_model(DualPathModel& model, AdamW& opt, const Checkpoint& ck) {
  ParamStore& ps = model.params();
  if (ck.values.size() != ps.size())
    throw CheckpointError("checkpoint holds " + std::to_string(ck.values.size()) +
                          " parameters, model expects " + std::to_string(ps.size()));
  auto copy_into = [&](const std::pair<std::string, Tensor>& kv, Tensor Param::* field) {
    Param* p = ps.find(kv.first);
    if (!p) throw CheckpointError("checkpoint parameter missing in model: " + kv.first);
    if (!(p->*field).same_shape(kv.second))
      throw CheckpointError("checkpoint shape mismatch for " + kv.first);
    (p->*field) = kv.second;
  };
  for (const auto& kv : ck.values) copy_into(kv, &Param::value);
  for (const auto& kv : ck.adam_m) copy_into(kv, &Param::adam_m);
  for (const auto& kv : ck.adam_v) copy_into(kv, &Param::adam_v);
  opt.t = ck.adam_t;
}

void require_compatible(const RunConfig& run_cfg, const std::string& ck_config_json) {
  const json a = json::parse(config_to_json_text(run_cfg)).at("model");
  const json b = json::parse(ck_config_json).at("model");
  if (a != b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "run=%016llx ckpt=%016llx",
                  static_cast<unsigned long long>(hash_str(a.dump())),
                  static_cast<unsigned long long>(hash_str(b.dump())));
    throw CheckpointError(std::string("checkpoint model config is incompatible (") + buf +
                          ")");
  }
}

DataBundle resolve_datasets(const RunConfig& cfg) {
  DataBundle out;
  if (cfg.data.synthetic) {
    out.train = data::synthesize_dataset(*cfg.data.synthetic);
    data::SyntheticSpec vs = *cfg.data.synthetic;
    vs.seed = hash_combine(vs.seed, 0x7a11dULL);
    vs.num_samples = cfg.data.val_samples;
    out.val = data::synthesize_dataset(vs);
    return out;
  }
  if (cfg.data.archive_root.empty())
    throw ConfigError("data: either archive_root or synthetic must be given");
  data::Dataset full = data::load_feature_archive(cfg.data.archive_root);
  if (!cfg.data.val_archive_root.empty()) {
    out.train = std::move(full);
    out.val = data::load_feature_archive(cfg.data.val_archive_root);
    return out;
  }
  const size_t n = full.size();
  const size_t n_val = std::max<size_t>(1, static_cast<size_t>(
                           std::llround(cfg.data.val_fraction * static_cast<double>(n))));
  for (size_t i = 0; i < n; ++i) {
    if (i + n_val >= n)
      out.val.push(full.sample(i));
    else
      out.train.push(full.sample(i));
  }
  return out;
}

TrainResult run_training(const RunConfig& cfg, const std::string& out_dir,
                         const std::string& resume_path, int64_t save_every_steps,
                         int64_t max_steps) {
  cfg.validate();
  fs::create_directories(out_dir);
  DataBundle data_sets = resolve_datasets(cfg);
  check_shape(data_sets.train.size() > 0, "training set is empty");

  DualPathModel model(cfg.model, cfg.seed);
  AdamW opt;
  const TokenCondition cond = token_condition_from_string(cfg.model.token_condition);

  int64_t step = 0, epoch = 0, pos = 0;
  double best_r1 = -1.0;
  Rng shuffle_rng(hash_combine(cfg.seed, 0x0badc0deULL));
  std::vector<int64_t> order;

  const bool resuming = !resume_path.empty();
  if (resuming) {
    Checkpoint ck = load_checkpoint(resume_path);
    require_compatible(cfg, ck.config_json);
    restore_model(model, opt, ck);
    step = ck.step;
    epoch = ck.epoch;
    pos = ck.pos;
    best_r1 = ck.best_r1;
    shuffle_rng.set_state(ck.shuffle_state);
    order = ck.epoch_order;
  }

  std::ofstream log((fs::path(out_dir) / "metrics.jsonl").string(),
                    resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot write metric log under " + out_dir);

  const std::string last_path = (fs::path(out_dir) / "last.ckpt").string();
  const std::string best_path = (fs::path(out_dir) / "best.ckpt").string();
  const int64_t min_t = int64_t{1} << (cfg.model.pyramid_levels - 1);
  const int64_t n_train = static_cast<int64_t>(data_sets.train.size());

  auto lr_at = [&](int64_t ep) {
    if (cfg.optim.lr_schedule == "step" && cfg.optim.lr_step_epochs > 0)
      return cfg.optim.lr *
             std::pow(cfg.optim.lr_step_gamma,
                      static_cast<double>(ep / cfg.optim.lr_step_epochs));
    return cfg.optim.lr;
  };

  auto run_validation = [&](int64_t at_epoch) {
    EvalOutput ev = evaluate(model, data_sets.val, cfg.eval, cfg.model, cond);
    json rec = {{"kind", "val"},
                {"epoch", at_epoch},
                {"step", step},
                {"r1", json::object()},
                {"map_avg", ev.report.map_avg},
                {"miou", ev.report.miou}};
    for (auto [k, v] : ev.report.r1_at) rec["r1"][std::to_string(k)] = v;
    if (ev.report.hit_at_1) rec["hit_at_1"] = *ev.report.hit_at_1;
    if (ev.report.hd_map) rec["hd_map"] = *ev.report.hd_map;
    log << rec.dump() << "\n";
    log.flush();
    const double r1_07 = ev.report.r1_at.count(0.7) ? ev.report.r1_at.at(0.7)
                                                    : ev.report.r1_at.begin()->second;
    if (r1_07 > best_r1) {
      best_r1 = r1_07;
      save_checkpoint(best_path, model, opt, cfg, step, epoch, pos, best_r1,
                      shuffle_rng.state(), order);
    }
    return ev;
  };

  bool stop = false;
  for (; epoch < cfg.optim.epochs && !stop; ++epoch) {
    if (pos == 0) {
      order.resize(static_cast<size_t>(n_train));
      for (int64_t i = 0; i < n_train; ++i) order[static_cast<size_t>(i)] = i;
      for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    while (pos < n_train) {
      const int64_t take = std::min<int64_t>(cfg.optim.batch_size, n_train - pos);
      std::vector<const data::Sample*> items;
      items.reserve(static_cast<size_t>(take));
      for (int64_t k = 0; k < take; ++k)
        items.push_back(&data_sets.train.sample(
            static_cast<size_t>(order[static_cast<size_t>(pos + k)])));
      data::Batch batch = data::collate(items, min_t, 0);
      const double lr = lr_at(epoch);
      loss::LossBreakdown lb = train_step(model, opt, batch, cfg, lr, cond);
      pos += take;
      ++step;
      json rec = {{"kind", "train"},   {"step", step},
                  {"epoch", epoch},    {"total", lb.total},
                  {"cls", lb.cls},     {"reg", lb.reg},
                  {"hd_rank_s", lb.hd_rank_s}, {"hd_contrast_s", lb.hd_contrast_s},
                  {"hd_rank_alpha", lb.hd_rank_alpha},
                  {"hd_contrast_alpha", lb.hd_contrast_alpha},
                  {"dqa", lb.dqa},     {"eos_recon", lb.eos_recon},
                  {"lr", lr}};
      log << rec.dump() << "\n";
      if (save_every_steps > 0 && step % save_every_steps == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%06lld.ckpt", static_cast<long long>(step));
        save_checkpoint((fs::path(out_dir) / name).string(), model, opt, cfg, step, epoch,
                        pos, best_r1, shuffle_rng.state(), order);
      }
      if (max_steps > 0 && step >= max_steps) {
        stop = true;
        break;
      }
    }
    if (!stop) pos = 0;
    log.flush();
    if (!stop && cfg.optim.eval_every > 0 &&
        ((epoch + 1) % cfg.optim.eval_every == 0 || epoch + 1 == cfg.optim.epochs))
      run_validation(epoch);
  }

  save_checkpoint(last_path, model, opt, cfg, step, epoch, pos, best_r1,
                  shuffle_rng.state(), order);
  TrainResult res;
  res.best_path = fs::exists(best_path) ? best_path : last_path;
  res.last_path = last_path;
  res.steps = step;
  EvalOutput fin = evaluate(model, data_sets.val, cfg.eval, cfg.model, cond);
  res.final_val = fin.report;
  return res;
}

}  // namespace vtg::train
