// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vtg/tensor.hpp"

namespace vtg::data {

struct VideoFeatures {
  Tensor clips;  // [T, d]
  std::string video_id;
  double clip_seconds = 2.0;
};

struct QueryTokens {
  Tensor words;            // [L-1, d]
  Tensor eos;              // [d]
  std::vector<bool> mask;  // L-1 entries, true = real token
};

struct GroundTruthAnnotation {
  std::vector<std::pair<double, double>> moments;  // normalized [0,1] video time
  std::vector<int> saliency_labels;                // per clip in [0,4]; empty if absent
  std::vector<int64_t> highlight_set;              // clips carrying the max label

  bool has_saliency() const { return !saliency_labels.empty(); }
};

struct Sample {
  std::string query_id;
  VideoFeatures video;
  QueryTokens query;
  GroundTruthAnnotation gt;
};

struct SyntheticSpec {
  int64_t num_samples = 500;
  int64_t T = 32;
  int64_t L = 10;
  int64_t d = 32;
  int64_t n_latent = 8;  // orthonormal cue directions
  double moment_min_len = 0.15;
  double moment_max_len = 0.4;
  double noise_sigma = 0.05;
  uint64_t seed = 1;

  void validate() const;
};

class Dataset {
 public:
  size_t size() const { return samples_.size(); }
  const Sample& sample(size_t i) const { return samples_[i]; }
  void push(Sample s) { samples_.push_back(std::move(s)); }

 private:
  std::vector<Sample> samples_;
};

/// Reads `manifest.json` plus the referenced .f32 tensors under root.
/// Validates eagerly: byte counts per file, finiteness, consistent dims.
Dataset load_feature_archive(const std::string& root);

/// Writes manifest.json + raw little-endian float32 row-major tensor files
/// (one per video, one per query). Byte-identical for identical input.
void write_feature_archive(const Dataset& ds, const std::string& root);

/// Deterministic benchmark generator. Each sample plants one moment whose
/// clips carry an additive cue (sum of a few orthonormal latent directions).
/// The query's leading words are exactly those directions; the remaining
/// words are distractor directions from the rest of the latent pool. The
/// [EOS] embedding is the normalized mean of all words, so matching through
/// it carries only a fraction of the exact word-level signal: at moderate
/// noise the word tokens still localize crisply where the sentence summary
/// alone goes blurry. Saliency labels follow a triangular profile peaking at
/// the moment center.
Dataset synthesize_dataset(const SyntheticSpec& spec);

struct PaddedSample {
  Tensor clips;      // [pad_T, d], zero rows past T_valid
  Tensor clip_mask;  // [pad_T] 0/1
  Tensor words;      // [pad_L-1, d]
  Tensor word_mask;  // [pad_L-1] 0/1
  Tensor eos;        // [d]
  int64_t t_valid = 0;
  int64_t l_valid = 0;  // valid word count
  double clip_seconds = 2.0;
  std::string query_id;
  GroundTruthAnnotation gt;
};

struct Batch {
  std::vector<PaddedSample> items;
  int64_t pad_T = 0;
  int64_t pad_L = 0;  // word count (L-1)
};

/// Zero-pads clips/words to a common length with explicit masks. Valid
/// entries always form a prefix. pad_to_* of 0 means "max over samples".
Batch collate(const std::vector<const Sample*>& samples, int64_t pad_to_T = 0,
              int64_t pad_to_L = 0);

PaddedSample pad_sample(const Sample& s, int64_t pad_T, int64_t pad_L);

// Raw tensor file helpers (shared with checkpoint code paths).
std::vector<double> read_f32_file(const std::string& path, int64_t expected_count);
void write_f32_file(const std::string& path, const Tensor& t);

}  // namespace vtg::data
