// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "commands.hpp"

#include <string>

#include "uwbgem/baseline.hpp"
#include "uwbgem/errors.hpp"

namespace uwbgem::cli {

namespace {

void require_distinct(const std::filesystem::path& in,
                      const std::filesystem::path& out) {
  if (!in.empty() && in == out) {
    throw InvalidArgumentError("input and output paths must differ: " +
                               in.string());
  }
}

void require_exists(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("input file does not exist: " + path.string());
  }
}

}  // namespace

void cmd_synth(const SynthOptions& opt, std::ostream& log) {
  if (opt.out.empty()) {
    throw InvalidArgumentError("synth: --out is required");
  }
  const dataset::Dataset data = signal_model::generate_dataset(opt.generator);
  dataset::save_csv(data, opt.out);

  std::size_t los = 0;
  for (const auto& s : data.samples) los += s.env_label == 0;
  log << "wrote " << data.size() << " samples (" << los << " LOS / "
      << data.size() - los << " NLOS) to " << opt.out.string() << "\n";
}

void cmd_corrupt(const CorruptOptions& opt, std::ostream& log) {
  require_exists(opt.in);
  require_distinct(opt.in, opt.out);
  const dataset::Dataset data = dataset::load_csv(opt.in);
  const dataset::Dataset corrupted = dataset::corrupt_labels(data, opt.weak);
  dataset::save_csv(corrupted, opt.out);

  std::size_t env_clean = 0;
  std::size_t err_clean = 0;
  for (const auto& s : corrupted.samples) {
    env_clean += s.env_quality == dataset::LabelQuality::clean;
    err_clean += s.err_quality == dataset::LabelQuality::clean;
  }
  log << "wrote " << corrupted.size() << " samples (" << env_clean
      << " clean env labels, " << err_clean << " clean err labels) to "
      << opt.out.string() << "\n";
}

void cmd_train(const TrainOptions& opt, std::ostream& log) {
  require_exists(opt.train_csv);
  require_distinct(opt.train_csv, opt.model_out);
  const dataset::Dataset raw = dataset::load_csv(opt.train_csv);

  std::optional<baseline::BaselineModel> fitted_baseline;
  if (opt.baseline_out) {
    fitted_baseline = baseline::fit_baseline_on(
        raw, opt.bin_duration_s, opt.baseline_gamma, opt.baseline_ridge);
  }

  auto [normalized, stats] =
      dataset::normalize_cirs(raw, opt.model.norm_scheme);
  gem::GemModel model = gem::make_model(opt.model);
  model.norm_stats = stats;
  auto [trained, history] = gem::train(std::move(model), normalized, opt.train);

  gem::save_model(trained, opt.model_out);
  if (opt.history_out) {
    gem::save_history_csv(history, *opt.history_out);
  }
  if (opt.baseline_out) {
    baseline::save_baseline(*fitted_baseline, *opt.baseline_out);
  }

  const auto& last = history.epochs.back();
  log << "trained " << opt.train.epochs << " epochs on " << normalized.size()
      << " samples: loss " << last.total_loss << " (l_exp " << last.l_exp
      << ", l_kl " << last.l_kl << "), env acc " << last.env_accuracy << "\n";
  log << "wrote model to " << opt.model_out.string() << "\n";
  if (opt.baseline_out) {
    log << "wrote baseline model to " << opt.baseline_out->string() << "\n";
  }
}

void cmd_eval(const EvalOptions& opt, std::ostream& log) {
  require_exists(opt.model_path);
  require_exists(opt.test_csv);
  const gem::GemModel model = gem::load_model(opt.model_path);
  const dataset::Dataset test = dataset::load_csv(opt.test_csv);
  if (test.empty()) {
    throw InvalidArgumentError("eval: test set is empty");
  }

  eval::EvalReport report;
  {
    const auto res = eval::residuals_unmitigated(test);
    eval::ReportRow row;
    row.method = "unmitigated";
    row.rmse_m = eval::rmse(res);
    row.mae_m = eval::mae(res);
    report.rows.push_back(row);
    report.cdfs[row.tag()] = eval::residual_cdf(res);
  }
  {
    const auto res = eval::residuals_gem(model, test);
    eval::ReportRow row;
    row.method = "gem";
    row.rmse_m = eval::rmse(res);
    row.mae_m = eval::mae(res);
    if (opt.benchmark_repetitions > 0) {
      row.inference_ms_per_sample =
          eval::benchmark_inference(model, test, opt.benchmark_repetitions);
    }
    report.rows.push_back(row);
    report.cdfs[row.tag()] = eval::residual_cdf(res);
  }
  if (opt.baseline_path) {
    require_exists(*opt.baseline_path);
    const auto fitted = baseline::load_baseline(*opt.baseline_path);
    const auto res =
        eval::residuals_baseline(fitted, test, opt.bin_duration_s);
    eval::ReportRow row;
    row.method = "baseline";
    row.rmse_m = eval::rmse(res);
    row.mae_m = eval::mae(res);
    report.rows.push_back(row);
    report.cdfs[row.tag()] = eval::residual_cdf(res);
  }

  eval::save_report_csv(report, opt.report_dir);
  for (const auto& row : report.rows) {
    log << row.method << ": rmse " << row.rmse_m << " m, mae " << row.mae_m
        << " m";
    if (row.inference_ms_per_sample) {
      log << ", " << *row.inference_ms_per_sample << " ms/sample";
    }
    log << "\n";
  }
  log << "wrote report to " << (opt.report_dir / "report.csv").string()
      << "\n";
}

void cmd_sweep(const SweepOptions& opt, std::ostream& log) {
  require_exists(opt.data_csv);
  const dataset::Dataset base = dataset::load_csv(opt.data_csv);
  const eval::EvalReport report = eval::sweep_supervision(base, opt.sweep);
  eval::save_report_csv(report, opt.report_dir);

  for (const auto& row : report.rows) {
    log << row.method;
    if (row.eta_k) log << " eta_k=" << *row.eta_k;
    if (row.eta_e) log << " eta_e=" << *row.eta_e;
    log << ": rmse " << row.rmse_m << " m, mae " << row.mae_m << " m\n";
  }
  for (const auto& failure : report.failures) {
    log << "failed cell: " << failure << "\n";
  }
  log << "wrote report to " << (opt.report_dir / "report.csv").string()
      << "\n";
}

}  // namespace uwbgem::cli
