// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_EVAL_HPP_
#define UWBGEM_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uwbgem/baseline.hpp"
#include "uwbgem/dataset.hpp"
#include "uwbgem/gem.hpp"

namespace uwbgem::eval {

struct ReportRow {
  std::string method;  // "unmitigated", "gem", "baseline"
  std::optional<double> eta_k;
  std::optional<double> eta_e;
  double rmse_m = 0.0;
  double mae_m = 0.0;
  std::optional<double> inference_ms_per_sample;

  /// Stable key, also the CDF file stem: e.g. "gem_ek0.8_ee0.4".
  std::string tag() const;
};

struct CdfPoint {
  double abs_residual_m = 0.0;
  double cdf = 0.0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::map<std::string, std::vector<CdfPoint>> cdfs;  // keyed by row tag
  std::vector<std::string> failures;  // failed sweep cells, not fatal
};

/// Residual ranging error per sample. Unmitigated: the error itself;
/// mitigated: estimate minus truth. Every sample must carry true_err.
std::vector<double> residuals_unmitigated(const dataset::Dataset& test);
std::vector<double> residuals_gem(const gem::GemModel& model,
                                  const dataset::Dataset& test);
std::vector<double> residuals_baseline(const baseline::BaselineModel& model,
                                       const dataset::Dataset& test,
                                       double bin_duration_s);

double rmse(std::span<const double> residuals);
double mae(std::span<const double> residuals);

/// Empirical CDF over |residual|: sorted unique magnitudes with
/// cdf = count(<= magnitude) / n. Nondecreasing, ends at 1.0.
std::vector<CdfPoint> residual_cdf(std::span<const double> residuals);

/// Mean wall-clock latency of mitigate() in milliseconds per sample.
double benchmark_inference(const gem::GemModel& model,
                           const dataset::Dataset& samples, int repetitions);

struct SweepConfig {
  std::vector<double> eta_k_grid{1.0};
  std::vector<double> eta_e_grid{1.0};
  std::vector<std::uint64_t> seeds{1};
  double train_fraction = 0.8;
  std::uint64_t split_seed = 7;
  std::vector<dataset::EnvPollution> env_modes{
      dataset::EnvPollution::delete_label, dataset::EnvPollution::flip,
      dataset::EnvPollution::substitute};
  std::vector<dataset::ErrPollution> err_modes{
      dataset::ErrPollution::delete_label, dataset::ErrPollution::noise,
      dataset::ErrPollution::substitute};
  double err_noise_std_m = 0.3;
  gem::ModelConfig model{};
  gem::TrainConfig train{};
  bool include_baseline = true;
  double baseline_gamma = 1.0 / (2.0 * baseline::FeatureVector::kCount);
  double baseline_ridge = 1e-3;
  double bin_duration_s = 1e-9;
  // 0 skips latency measurement, making the report fully deterministic.
  int benchmark_repetitions = 0;
};

/// For every (eta_k, eta_e, seed): corrupt the train split, train a fresh
/// model, evaluate on the untouched test split. Rows carry per-config
/// means across seeds; CDFs pool residuals across seeds. Unmitigated and
/// (optionally) fully supervised baseline rows are included once. A
/// failing cell is recorded in failures and skipped, never fatal.
EvalReport sweep_supervision(const dataset::Dataset& base,
                             const SweepConfig& config);

/// Writes report.csv (method,eta_k,eta_e,rmse_m,mae_m,time_ms) plus one
/// cdf_<tag>.csv (abs_residual_m,cdf) per row into the directory.
void save_report_csv(const EvalReport& report,
                     const std::filesystem::path& dir);

}  // namespace uwbgem::eval

#endif  // UWBGEM_EVAL_HPP_
