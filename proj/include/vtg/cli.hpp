// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace vtg::cli {

// Exit codes: 0 ok, 2 usage/config, 3 data, 4 incompatible checkpoint.
constexpr int kOk = 0;
constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kCheckpointError = 4;

int run_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir, const std::string& resume_path,
              int64_t save_every_steps, int64_t max_steps);

int run_eval(const std::string& checkpoint_path, const std::vector<std::string>& overrides,
             const std::string& out_dir);

int run_synth(const std::string& spec_path, const std::string& out_root);

int run_ablate(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& axis, const std::vector<std::string>& values,
               const std::string& out_dir);

int run_analyze(const std::string& checkpoint_path,
                const std::vector<std::string>& overrides, const std::string& what,
                const std::string& out_dir, int64_t sample_index);

/// Maps the in-flight exception to a process exit code (call from a catch
/// block). Prints the message to stderr.
int report_current_exception();

}  // namespace vtg::cli
