// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_TOOLS_COMMANDS_HPP_
#define UWBGEM_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <iostream>
#include <optional>

#include "uwbgem/dataset.hpp"
#include "uwbgem/eval.hpp"
#include "uwbgem/gem.hpp"
#include "uwbgem/signal_model.hpp"

namespace uwbgem::cli {

/// Command implementations shared by the binary and the tests. Each one
/// validates its inputs before writing anything, throws uwbgem::Error on
/// failure, and writes outputs atomically, so a failed run leaves no
/// partial artifacts.

struct SynthOptions {
  signal_model::GeneratorConfig generator;
  std::filesystem::path out;
};
void cmd_synth(const SynthOptions& opt, std::ostream& log = std::cout);

struct CorruptOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  dataset::WeakLabelConfig weak;
};
void cmd_corrupt(const CorruptOptions& opt, std::ostream& log = std::cout);

struct TrainOptions {
  std::filesystem::path train_csv;
  std::filesystem::path model_out;
  std::optional<std::filesystem::path> history_out;
  // Also fit the fully supervised feature baseline on the same file.
  std::optional<std::filesystem::path> baseline_out;
  gem::ModelConfig model;
  gem::TrainConfig train;
  double baseline_gamma = 1.0 / (2.0 * baseline::FeatureVector::kCount);
  double baseline_ridge = 1e-3;
  double bin_duration_s = 1e-9;
};
void cmd_train(const TrainOptions& opt, std::ostream& log = std::cout);

struct EvalOptions {
  std::filesystem::path model_path;
  std::optional<std::filesystem::path> baseline_path;
  std::filesystem::path test_csv;
  std::filesystem::path report_dir;
  double bin_duration_s = 1e-9;
  int benchmark_repetitions = 3;  // 0 skips latency measurement
};
void cmd_eval(const EvalOptions& opt, std::ostream& log = std::cout);

struct SweepOptions {
  std::filesystem::path data_csv;
  std::filesystem::path report_dir;
  eval::SweepConfig sweep;
};
void cmd_sweep(const SweepOptions& opt, std::ostream& log = std::cout);

}  // namespace uwbgem::cli

#endif  // UWBGEM_TOOLS_COMMANDS_HPP_
