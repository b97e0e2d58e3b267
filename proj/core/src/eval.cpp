// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "uwbgem/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "io_util.hpp"
#include "uwbgem/errors.hpp"
#include "uwbgem/rng.hpp"

namespace uwbgem::eval {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_eta(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double require_true_err(const dataset::Sample& s) {
  if (!s.true_err) {
    throw InvalidArgumentError("residuals: sample id " + std::to_string(s.id) +
                               " has no true_err ground truth");
  }
  return *s.true_err;
}

}  // namespace

std::string ReportRow::tag() const {
  std::string t = method;
  if (eta_k) t += "_ek" + format_eta(*eta_k);
  if (eta_e) t += "_ee" + format_eta(*eta_e);
  return t;
}

std::vector<double> residuals_unmitigated(const dataset::Dataset& test) {
  std::vector<double> out;
  out.reserve(test.size());
  for (const dataset::Sample& s : test.samples) {
    out.push_back(require_true_err(s));
  }
  return out;
}

std::vector<double> residuals_gem(const gem::GemModel& model,
                                  const dataset::Dataset& test) {
  std::vector<double> out;
  out.reserve(test.size());
  for (const dataset::Sample& s : test.samples) {
    const double truth = require_true_err(s);
    out.push_back(gem::predict_error(model, s.cir) - truth);
  }
  return out;
}

std::vector<double> residuals_baseline(const baseline::BaselineModel& model,
                                       const dataset::Dataset& test,
                                       double bin_duration_s) {
  std::vector<double> out;
  out.reserve(test.size());
  for (const dataset::Sample& s : test.samples) {
    const double truth = require_true_err(s);
    const auto fv = baseline::extract_features(s.cir, bin_duration_s);
    out.push_back(baseline::predict_baseline(model, fv) - truth);
  }
  return out;
}

double rmse(std::span<const double> residuals) {
  if (residuals.empty()) {
    throw InvalidArgumentError("rmse: empty input");
  }
  double sq = 0.0;
  for (double r : residuals) sq += r * r;
  return std::sqrt(sq / static_cast<double>(residuals.size()));
}

double mae(std::span<const double> residuals) {
  if (residuals.empty()) {
    throw InvalidArgumentError("mae: empty input");
  }
  double abs_sum = 0.0;
  for (double r : residuals) abs_sum += std::abs(r);
  return abs_sum / static_cast<double>(residuals.size());
}

std::vector<CdfPoint> residual_cdf(std::span<const double> residuals) {
  if (residuals.empty()) {
    throw InvalidArgumentError("residual_cdf: empty input");
  }
  std::vector<double> magnitudes(residuals.size());
  std::transform(residuals.begin(), residuals.end(), magnitudes.begin(),
                 [](double r) { return std::abs(r); });
  std::sort(magnitudes.begin(), magnitudes.end());

  const double n = static_cast<double>(magnitudes.size());
  std::vector<CdfPoint> cdf;
  std::size_t i = 0;
  while (i < magnitudes.size()) {
    std::size_t j = i;
    while (j < magnitudes.size() && magnitudes[j] == magnitudes[i]) ++j;
    cdf.push_back({magnitudes[i], static_cast<double>(j) / n});
    i = j;
  }
  return cdf;
}

double benchmark_inference(const gem::GemModel& model,
                           const dataset::Dataset& samples, int repetitions) {
  if (repetitions < 1) {
    throw InvalidArgumentError("benchmark_inference: repetitions must be >= 1");
  }
  if (samples.empty()) {
    throw InvalidArgumentError("benchmark_inference: no samples");
  }
  double sink = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < repetitions; ++rep) {
    for (const dataset::Sample& s : samples.samples) {
      sink += gem::mitigate(model, s.cir, s.measured_distance_m.value_or(0.0));
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  // Keep the accumulated value observable so the loop cannot be elided.
  if (!std::isfinite(sink)) {
    throw NumericError("benchmark_inference: non-finite outputs");
  }
  const double total_ms =
      std::chrono::duration<double, std::milli>(stop - start).count();
  return total_ms /
         (static_cast<double>(repetitions) * static_cast<double>(samples.size()));
}

EvalReport sweep_supervision(const dataset::Dataset& base,
                             const SweepConfig& config) {
  if (config.eta_k_grid.empty() || config.eta_e_grid.empty() ||
      config.seeds.empty()) {
    throw InvalidArgumentError("sweep: grids and seeds must be non-empty");
  }

  const auto [train_full, test] =
      dataset::split(base, config.train_fraction, config.split_seed);
  if (test.empty()) {
    throw InvalidArgumentError("sweep: empty test split");
  }

  EvalReport report;
  {
    const std::vector<double> res = residuals_unmitigated(test);
    ReportRow row;
    row.method = "unmitigated";
    row.rmse_m = rmse(res);
    row.mae_m = mae(res);
    report.rows.push_back(row);
    report.cdfs[row.tag()] = residual_cdf(res);
  }

  if (config.include_baseline) {
    try {
      const auto model =
          baseline::fit_baseline_on(train_full, config.bin_duration_s,
                                    config.baseline_gamma,
                                    config.baseline_ridge);
      const std::vector<double> res =
          residuals_baseline(model, test, config.bin_duration_s);
      ReportRow row;
      row.method = "baseline";
      row.rmse_m = rmse(res);
      row.mae_m = mae(res);
      report.rows.push_back(row);
      report.cdfs[row.tag()] = residual_cdf(res);
    } catch (const Error& e) {
      report.failures.push_back(std::string("baseline: ") + e.what());
    }
  }

  std::uint64_t cell_id = 0;
  for (double eta_k : config.eta_k_grid) {
    for (double eta_e : config.eta_e_grid) {
      std::vector<double> cell_rmse, cell_mae;
      std::vector<double> pooled;
      std::optional<double> latency_ms;
      for (std::uint64_t seed : config.seeds) {
        try {
          dataset::WeakLabelConfig weak;
          weak.eta_k = eta_k;
          weak.eta_e = eta_e;
          weak.env_modes = config.env_modes;
          weak.err_modes = config.err_modes;
          weak.err_noise_std_m = config.err_noise_std_m;
          weak.seed = derive_seed(seed, 4 * cell_id);
          const dataset::Dataset corrupted =
              dataset::corrupt_labels(train_full, weak);
          auto [normalized, stats] =
              dataset::normalize_cirs(corrupted, config.model.norm_scheme);

          gem::ModelConfig model_cfg = config.model;
          model_cfg.seed = derive_seed(seed, 4 * cell_id + 1);
          gem::GemModel model = gem::make_model(model_cfg);
          model.norm_stats = stats;

          gem::TrainConfig train_cfg = config.train;
          train_cfg.seed = derive_seed(seed, 4 * cell_id + 2);
          auto [trained, history] = gem::train(std::move(model), normalized,
                                               train_cfg);

          const std::vector<double> res = residuals_gem(trained, test);
          cell_rmse.push_back(rmse(res));
          cell_mae.push_back(mae(res));
          pooled.insert(pooled.end(), res.begin(), res.end());
          if (config.benchmark_repetitions > 0 && !latency_ms) {
            latency_ms = benchmark_inference(trained, test,
                                             config.benchmark_repetitions);
          }
        } catch (const Error& e) {
          char tag[96];
          std::snprintf(tag, sizeof(tag), "gem eta_k=%g eta_e=%g seed=%llu: ",
                        eta_k, eta_e,
                        static_cast<unsigned long long>(seed));
          report.failures.push_back(tag + std::string(e.what()));
        }
      }
      if (!cell_rmse.empty()) {
        ReportRow row;
        row.method = "gem";
        row.eta_k = eta_k;
        row.eta_e = eta_e;
        row.rmse_m = std::accumulate(cell_rmse.begin(), cell_rmse.end(), 0.0) /
                     static_cast<double>(cell_rmse.size());
        row.mae_m = std::accumulate(cell_mae.begin(), cell_mae.end(), 0.0) /
                    static_cast<double>(cell_mae.size());
        row.inference_ms_per_sample = latency_ms;
        report.rows.push_back(row);
        report.cdfs[row.tag()] = residual_cdf(pooled);
      }
      ++cell_id;
    }
  }
  return report;
}

void save_report_csv(const EvalReport& report,
                     const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create report directory: " + dir.string());
  }

  std::string out = "method,eta_k,eta_e,rmse_m,mae_m,time_ms\n";
  for (const ReportRow& row : report.rows) {
    out += row.method;
    out += ',';
    if (row.eta_k) out += format_eta(*row.eta_k);
    out += ',';
    if (row.eta_e) out += format_eta(*row.eta_e);
    out += ',';
    out += format_double(row.rmse_m);
    out += ',';
    out += format_double(row.mae_m);
    out += ',';
    if (row.inference_ms_per_sample) {
      out += format_double(*row.inference_ms_per_sample);
    }
    out += '\n';
  }
  detail::write_file_atomic(dir / "report.csv", out);

  for (const auto& [tag, cdf] : report.cdfs) {
    std::string cdf_out = "abs_residual_m,cdf\n";
    for (const CdfPoint& p : cdf) {
      cdf_out += format_double(p.abs_residual_m);
      cdf_out += ',';
      cdf_out += format_double(p.cdf);
      cdf_out += '\n';
    }
    detail::write_file_atomic(dir / ("cdf_" + tag + ".csv"), cdf_out);
  }

  if (!report.failures.empty()) {
    std::string fail_out;
    for (const std::string& f : report.failures) {
      fail_out += f;
      fail_out += '\n';
    }
    detail::write_file_atomic(dir / "failures.txt", fail_out);
  }
}

}  // namespace uwbgem::eval
