// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "vtg/errors.hpp"
#include "vtg/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts need byte swaps");

namespace vtg::data {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticSpec::validate() const {
  if (num_samples < 1 || T < 1 || L < 2 || d < 1)
    throw DataError("synthetic spec: num_samples/T/L/d out of range");
  if (n_latent < 2 || d < n_latent)
    throw DataError("synthetic spec: need 2 <= n_latent <= d");
  if (!(0.0 < moment_min_len && moment_min_len <= moment_max_len && moment_max_len <= 1.0))
    throw DataError("synthetic spec: need 0 < moment_min_len <= moment_max_len <= 1");
  if (noise_sigma < 0.0) throw DataError("synthetic spec: noise_sigma must be >= 0");
}

std::vector<double> read_f32_file(const std::string& path, int64_t expected_count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open tensor file: " + path);
  const auto bytes = static_cast<int64_t>(in.tellg());
  if (bytes != expected_count * 4)
    throw DataError("shape mismatch in " + path + ": expected " +
                    std::to_string(expected_count * 4) + " bytes, found " +
                    std::to_string(bytes));
  in.seekg(0);
  std::vector<float> raw(static_cast<size_t>(expected_count));
  in.read(reinterpret_cast<char*>(raw.data()), bytes);
  if (!in) throw DataError("short read on tensor file: " + path);
  std::vector<double> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<double>(raw[i]);
    if (!std::isfinite(out[i]))
      throw DataError("non-finite value in tensor file: " + path);
  }
  return out;
}

void write_f32_file(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write tensor file: " + path);
  std::vector<float> raw(t.data.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<float>(t.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * 4));
  if (!out) throw DataError("short write on tensor file: " + path);
}

namespace {

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

struct VideoEntry {
  std::string id, file;
  int64_t T = 0, d = 0;
  double clip_seconds = 0.0;
};

}  // namespace

Dataset load_feature_archive(const std::string& root) {
  const fs::path manifest_path = fs::path(root) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("missing manifest: " + manifest_path.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  std::map<std::string, VideoEntry> videos;
  std::map<std::string, Tensor> video_clips;
  int64_t dim = -1;
  for (const auto& v : m.at("videos")) {
    VideoEntry e;
    e.id = v.at("video_id").get<std::string>();
    e.file = v.at("feature_file").get<std::string>();
    e.T = v.at("num_clips").get<int64_t>();
    e.d = v.at("dim").get<int64_t>();
    e.clip_seconds = v.at("clip_seconds").get<double>();
    if (e.T < 1 || e.d < 1 || e.clip_seconds <= 0.0)
      throw DataError("bad video entry in manifest: " + e.id);
    if (dim >= 0 && e.d != dim)
      throw DataError("inconsistent feature dim across archive at video " + e.id);
    dim = e.d;
    const std::string p = (fs::path(root) / e.file).string();
    Tensor clips({e.T, e.d}, read_f32_file(p, e.T * e.d));
    videos[e.id] = e;
    video_clips[e.id] = std::move(clips);
  }

  Dataset ds;
  for (const auto& q : m.at("queries")) {
    Sample s;
    s.query_id = q.at("query_id").get<std::string>();
    const std::string vid = q.at("video_id").get<std::string>();
    auto it = videos.find(vid);
    if (it == videos.end())
      throw DataError("query " + s.query_id + " references unknown video " + vid);
    const VideoEntry& ve = it->second;
    const int64_t L = q.at("num_tokens").get<int64_t>();
    const int64_t qd = q.at("dim").get<int64_t>();
    if (L < 2) throw DataError("query " + s.query_id + " needs at least 2 tokens");
    if (qd != ve.d)
      throw DataError("query " + s.query_id + " dim differs from video dim");
    const std::string tp = (fs::path(root) / q.at("token_file").get<std::string>()).string();
    std::vector<double> tok = read_f32_file(tp, L * qd);
    // token files store the L-1 word embeddings first, sentence token last
    s.query.words = Tensor({L - 1, qd},
                           std::vector<double>(tok.begin(), tok.begin() + (L - 1) * qd));
    s.query.eos = Tensor({qd}, std::vector<double>(tok.end() - qd, tok.end()));
    s.query.mask.assign(static_cast<size_t>(L - 1), true);

    s.video.video_id = ve.id;
    s.video.clip_seconds = ve.clip_seconds;
    s.video.clips = video_clips.at(ve.id);

    const double span_sec = static_cast<double>(ve.T) * ve.clip_seconds;
    for (const auto& mm : q.at("moments")) {
      const double a = mm.at(0).get<double>(), b = mm.at(1).get<double>();
      if (!(0.0 <= a && a < b && b <= span_sec + 1e-9))
        throw DataError("query " + s.query_id + " has moment outside [0, T*clip_seconds]");
      s.gt.moments.emplace_back(a / span_sec, b / span_sec);
    }
    if (q.contains("saliency")) {
      for (const auto& x : q.at("saliency")) {
        const int lab = x.get<int>();
        if (lab < 0 || lab > 4)
          throw DataError("query " + s.query_id + " saliency label outside [0,4]");
        s.gt.saliency_labels.push_back(lab);
      }
      if (static_cast<int64_t>(s.gt.saliency_labels.size()) != ve.T)
        throw DataError("query " + s.query_id + " saliency length differs from num_clips");
      const int mx = *std::max_element(s.gt.saliency_labels.begin(),
                                       s.gt.saliency_labels.end());
      for (int64_t t = 0; t < ve.T; ++t)
        if (s.gt.saliency_labels[static_cast<size_t>(t)] == mx)
          s.gt.highlight_set.push_back(t);
    }
    ds.push(std::move(s));
  }
  return ds;
}

void write_feature_archive(const Dataset& ds, const std::string& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  json videos = json::array();
  json queries = json::array();
  std::set<std::string> written;
  for (size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds.sample(i);
    const int64_t T = s.video.clips.rows(), d = s.video.clips.cols();
    if (!written.count(s.video.video_id)) {
      written.insert(s.video.video_id);
      const std::string file = s.video.video_id + ".f32";
      write_f32_file((fs::path(root) / file).string(), s.video.clips);
      videos.push_back({{"video_id", s.video.video_id},
                        {"feature_file", file},
                        {"num_clips", T},
                        {"dim", d},
                        {"clip_seconds", s.video.clip_seconds}});
    }
    const int64_t Lm1 = s.query.words.rows();
    Tensor tok({Lm1 + 1, d});
    std::copy(s.query.words.data.begin(), s.query.words.data.end(), tok.data.begin());
    std::copy(s.query.eos.data.begin(), s.query.eos.data.end(),
              tok.data.begin() + static_cast<size_t>(Lm1 * d));
    const std::string tfile = s.query_id + ".f32";
    write_f32_file((fs::path(root) / tfile).string(), tok);

    const double span_sec = static_cast<double>(T) * s.video.clip_seconds;
    json moments = json::array();
    for (auto [a, b] : s.gt.moments) moments.push_back({a * span_sec, b * span_sec});
    json q = {{"query_id", s.query_id}, {"video_id", s.video.video_id},
              {"token_file", tfile},    {"num_tokens", Lm1 + 1},
              {"dim", d},               {"moments", moments}};
    if (s.gt.has_saliency()) q["saliency"] = s.gt.saliency_labels;
    queries.push_back(q);
  }
  json m = {{"videos", videos}, {"queries", queries}};
  std::ofstream out(fs::path(root) / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write manifest under " + root);
  out << m.dump(2) << "\n";
}

Dataset synthesize_dataset(const SyntheticSpec& spec) {
  spec.validate();

  // Orthonormal latent directions via Gram-Schmidt on a Gaussian matrix.
  Rng dir_rng(hash_combine(spec.seed, 0xd17ec7105ULL));
  std::vector<Tensor> dirs;
  for (int64_t i = 0; i < spec.n_latent; ++i) {
    Tensor u({spec.d});
    for (;;) {
      for (double& v : u.data) v = dir_rng.normal();
      for (const Tensor& p : dirs) {
        double pr = 0.0;
        for (int64_t j = 0; j < spec.d; ++j) pr += u.at(j) * p.at(j);
        for (int64_t j = 0; j < spec.d; ++j) u.at(j) -= pr * p.at(j);
      }
      double nrm = 0.0;
      for (double v : u.data) nrm += v * v;
      if (nrm > 1e-8) {
        nrm = std::sqrt(nrm);
        for (double& v : u.data) v /= nrm;
        break;
      }
    }
    dirs.push_back(u);
  }

  const double cue_gain = 1.0;
  Dataset ds;
  for (int64_t si = 0; si < spec.num_samples; ++si) {
    Rng rng(hash_combine(spec.seed, 0x5a3f0000ULL + static_cast<uint64_t>(si)));
    Sample s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "q%05lld", static_cast<long long>(si));
    s.query_id = buf;
    std::snprintf(buf, sizeof buf, "v%05lld", static_cast<long long>(si));
    s.video.video_id = buf;
    s.video.clip_seconds = 2.0;

    const int64_t n_words = spec.L - 1;
    const int64_t k_max = std::min<int64_t>({3, spec.n_latent - 1, n_words});
    const int64_t k = 1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(k_max)));

    // true cue directions: a distinct subset of size k
    std::vector<int64_t> pool(static_cast<size_t>(spec.n_latent));
    for (int64_t i = 0; i < spec.n_latent; ++i) pool[static_cast<size_t>(i)] = i;
    for (size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[rng.below(i)]);
    std::vector<int64_t> true_dirs(pool.begin(), pool.begin() + k);
    std::vector<int64_t> rest(pool.begin() + k, pool.end());

    // words: true directions lead, distractor directions fill the tail
    s.query.words = Tensor({n_words, spec.d});
    s.query.mask.assign(static_cast<size_t>(n_words), true);
    for (int64_t wi = 0; wi < n_words; ++wi) {
      const int64_t di = wi < k ? true_dirs[static_cast<size_t>(wi)]
                                : rest[rng.below(rest.size())];
      for (int64_t j = 0; j < spec.d; ++j)
        s.query.words.at(wi, j) = quantize(dirs[static_cast<size_t>(di)].at(j));
    }

    // [EOS]: normalized mean of all words — a flat summary that cannot
    // separate leading cue words from distractors.
    s.query.eos = Tensor({spec.d});
    for (int64_t wi = 0; wi < n_words; ++wi)
      for (int64_t j = 0; j < spec.d; ++j) s.query.eos.at(j) += s.query.words.at(wi, j);
    double en = 0.0;
    for (double v : s.query.eos.data) en += v * v;
    en = std::sqrt(std::max(en, 1e-12));
    for (double& v : s.query.eos.data) v = quantize(v / en);

    // planted moment
    const int64_t len_lo = std::max<int64_t>(1, static_cast<int64_t>(
                               std::llround(spec.moment_min_len * static_cast<double>(spec.T))));
    const int64_t len_hi = std::max<int64_t>(len_lo, static_cast<int64_t>(
                               std::llround(spec.moment_max_len * static_cast<double>(spec.T))));
    const int64_t len = std::min<int64_t>(spec.T,
        len_lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(len_hi - len_lo + 1))));
    const int64_t start = static_cast<int64_t>(rng.below(static_cast<uint64_t>(spec.T - len + 1)));
    const int64_t end = start + len;

    // video features: noise everywhere, the cue added inside the moment
    s.video.clips = Tensor({spec.T, spec.d});
    for (double& v : s.video.clips.data) v = spec.noise_sigma * rng.normal();
    const double amp = cue_gain / std::sqrt(static_cast<double>(k));
    for (int64_t t = start; t < end; ++t)
      for (int64_t di : true_dirs)
        for (int64_t j = 0; j < spec.d; ++j)
          s.video.clips.at(t, j) += amp * dirs[static_cast<size_t>(di)].at(j);
    for (double& v : s.video.clips.data) v = quantize(v);

    s.gt.moments.emplace_back(static_cast<double>(start) / static_cast<double>(spec.T),
                              static_cast<double>(end) / static_cast<double>(spec.T));

    // triangular saliency profile peaking at the moment center
    const double center = static_cast<double>(start) + static_cast<double>(len) / 2.0;
    const double w = static_cast<double>(len) / 2.0 + 2.0;
    s.gt.saliency_labels.resize(static_cast<size_t>(spec.T));
    for (int64_t t = 0; t < spec.T; ++t) {
      const double dist = std::fabs(static_cast<double>(t) + 0.5 - center);
      const double val = 4.0 * std::max(0.0, 1.0 - dist / w);
      s.gt.saliency_labels[static_cast<size_t>(t)] = static_cast<int>(std::lround(val));
    }
    const int mx = *std::max_element(s.gt.saliency_labels.begin(), s.gt.saliency_labels.end());
    for (int64_t t = 0; t < spec.T; ++t)
      if (s.gt.saliency_labels[static_cast<size_t>(t)] == mx) s.gt.highlight_set.push_back(t);

    ds.push(std::move(s));
  }
  return ds;
}

PaddedSample pad_sample(const Sample& s, int64_t pad_T, int64_t pad_L) {
  const int64_t T = s.video.clips.rows(), d = s.video.clips.cols();
  const int64_t W = s.query.words.rows();
  check_shape(pad_T >= T && pad_L >= W, "pad target smaller than sample");
  PaddedSample p;
  p.query_id = s.query_id;
  p.gt = s.gt;
  p.t_valid = T;
  p.l_valid = W;
  p.clip_seconds = s.video.clip_seconds;
  p.clips = Tensor({pad_T, d});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < d; ++j) p.clips.at(t, j) = s.video.clips.at(t, j);
  p.clip_mask = Tensor({pad_T});
  for (int64_t t = 0; t < T; ++t) p.clip_mask.at(t) = 1.0;
  p.words = Tensor({pad_L, d});
  p.word_mask = Tensor({pad_L});
  for (int64_t i = 0; i < W; ++i) {
    if (s.query.mask[static_cast<size_t>(i)]) p.word_mask.at(i) = 1.0;
    for (int64_t j = 0; j < d; ++j) p.words.at(i, j) = s.query.words.at(i, j);
  }
  p.eos = s.query.eos;
  return p;
}

Batch collate(const std::vector<const Sample*>& samples, int64_t pad_to_T, int64_t pad_to_L) {
  if (samples.empty()) throw DataError("collate: empty batch");
  const int64_t d = samples[0]->video.clips.cols();
  int64_t max_T = pad_to_T, max_L = pad_to_L;
  for (const Sample* s : samples) {
    if (s->video.clips.cols() != d || s->query.words.cols() != d)
      throw DataError("collate: mixed feature dims in batch");
    max_T = std::max(max_T, s->video.clips.rows());
    max_L = std::max(max_L, s->query.words.rows());
  }
  Batch b;
  b.pad_T = max_T;
  b.pad_L = max_L;
  for (const Sample* s : samples) b.items.push_back(pad_sample(*s, max_T, max_L));
  return b;
}

}  // namespace vtg::data
