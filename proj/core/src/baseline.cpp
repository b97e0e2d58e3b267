// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "uwbgem/baseline.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "io_util.hpp"
#include "serde.hpp"
#include "uwbgem/errors.hpp"

namespace uwbgem::baseline {

Eigen::Matrix<double, FeatureVector::kCount, 1> FeatureVector::as_vector()
    const {
  Eigen::Matrix<double, kCount, 1> v;
  v << energy, max_amplitude, rise_time_s, mean_excess_delay_s,
      rms_delay_spread_s, kurtosis;
  return v;
}

FeatureVector extract_features(std::span<const double> cir,
                               double bin_duration_s) {
  if (cir.empty()) {
    throw InvalidArgumentError("extract_features: empty CIR");
  }
  if (!(bin_duration_s > 0.0)) {
    throw InvalidArgumentError("extract_features: bin duration must be > 0");
  }

  const std::size_t n = cir.size();
  double sq_sum = 0.0;
  double peak = 0.0;
  std::size_t peak_bin = 0;
  for (std::size_t b = 0; b < n; ++b) {
    sq_sum += cir[b] * cir[b];
    if (cir[b] > peak) {
      peak = cir[b];
      peak_bin = b;
    }
  }
  if (peak <= 0.0) {
    throw NoSignalError("extract_features: all-zero CIR");
  }

  FeatureVector fv;
  fv.energy = sq_sum * bin_duration_s;
  fv.max_amplitude = peak;

  const double rise_threshold = 0.1 * peak;
  std::size_t first_bin = 0;
  for (std::size_t b = 0; b < n; ++b) {
    if (cir[b] >= rise_threshold) {
      first_bin = b;
      break;
    }
  }
  fv.rise_time_s =
      (static_cast<double>(peak_bin) - static_cast<double>(first_bin)) *
      bin_duration_s;

  // Power-weighted delay moments.
  double med = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double w = cir[b] * cir[b] / sq_sum;
    med += static_cast<double>(b) * bin_duration_s * w;
  }
  double spread_sq = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double w = cir[b] * cir[b] / sq_sum;
    const double dt = static_cast<double>(b) * bin_duration_s - med;
    spread_sq += dt * dt * w;
  }
  fv.mean_excess_delay_s = med;
  fv.rms_delay_spread_s = std::sqrt(std::max(0.0, spread_sq));

  double mean = 0.0;
  for (double v : cir) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : cir) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  fv.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  return fv;
}

BaselineModel fit_baseline(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& err_labels, double gamma,
                           double ridge) {
  const Eigen::Index n = features.rows();
  if (n < 2) {
    throw InvalidArgumentError("fit_baseline: need at least 2 samples");
  }
  if (features.cols() != FeatureVector::kCount) {
    throw InvalidArgumentError("fit_baseline: expected " +
                               std::to_string(FeatureVector::kCount) +
                               " feature columns");
  }
  if (err_labels.size() != n) {
    throw InvalidArgumentError("fit_baseline: label count mismatch");
  }
  if (!(gamma > 0.0) || !(ridge >= 0.0)) {
    throw InvalidArgumentError("fit_baseline: gamma > 0 and ridge >= 0");
  }

  BaselineModel model;
  model.gamma = gamma;
  model.ridge = ridge;
  model.feature_mean = features.colwise().mean();
  Eigen::MatrixXd centered = features.rowwise() - model.feature_mean.transpose();
  model.feature_std =
      (centered.array().square().colwise().sum() / static_cast<double>(n))
          .sqrt();
  for (int j = 0; j < FeatureVector::kCount; ++j) {
    if (model.feature_std(j) < 1e-12) model.feature_std(j) = 1.0;
  }
  model.support = centered.array().rowwise() /
                  model.feature_std.transpose().array();

  Eigen::MatrixXd kernel(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kernel(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 =
          (model.support.row(i) - model.support.row(j)).squaredNorm();
      const double kij = std::exp(-gamma * d2);
      kernel(i, j) = kij;
      kernel(j, i) = kij;
    }
  }
  Eigen::MatrixXd system = kernel;
  system.diagonal().array() += ridge;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("fit_baseline: kernel system not factorizable");
  }
  model.dual_coeffs = ldlt.solve(err_labels);
  // One refinement pass keeps the solve residual at round-off level.
  model.dual_coeffs += ldlt.solve(err_labels - system * model.dual_coeffs);

  const double residual = (system * model.dual_coeffs - err_labels).norm();
  if (!(residual <= 1e-8 * std::max(err_labels.norm(), 1.0))) {
    throw NumericError("fit_baseline: solve residual " +
                       std::to_string(residual) + " beyond tolerance");
  }
  return model;
}

BaselineModel fit_baseline_on(const dataset::Dataset& train,
                              double bin_duration_s, double gamma,
                              double ridge) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(train.size()); ++i) {
    const dataset::Sample& s = train.samples[static_cast<std::size_t>(i)];
    if (s.err_quality != dataset::LabelQuality::clean || !s.err_label) {
      throw InvalidArgumentError(
          "fit_baseline_on: baseline requires fully supervised samples (id " +
          std::to_string(s.id) + ")");
    }
    rows.push_back(i);
  }
  Eigen::MatrixXd features(static_cast<Eigen::Index>(rows.size()),
                           FeatureVector::kCount);
  Eigen::VectorXd labels(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const dataset::Sample& s = train.samples[static_cast<std::size_t>(rows[r])];
    features.row(static_cast<Eigen::Index>(r)) =
        extract_features(s.cir, bin_duration_s).as_vector().transpose();
    labels(static_cast<Eigen::Index>(r)) = *s.err_label;
  }
  return fit_baseline(features, labels, gamma, ridge);
}

double predict_baseline(const BaselineModel& model, const FeatureVector& fv) {
  if (!model.fitted()) {
    throw InvalidStateError("predict_baseline: model not fitted");
  }
  const Eigen::RowVectorXd x =
      ((fv.as_vector() - model.feature_mean).array() /
       model.feature_std.array())
          .transpose();
  double y = 0.0;
  for (Eigen::Index i = 0; i < model.support.rows(); ++i) {
    const double d2 = (model.support.row(i) - x).squaredNorm();
    y += model.dual_coeffs(i) * std::exp(-model.gamma * d2);
  }
  return y;
}

void save_baseline(const BaselineModel& model,
                   const std::filesystem::path& path) {
  if (!model.fitted()) {
    throw InvalidStateError("save_baseline: model not fitted");
  }
  nlohmann::json j = {
      {"type", "baseline_krr"},
      {"gamma", model.gamma},
      {"ridge", model.ridge},
      {"support", detail::matrix_to_json(model.support)},
      {"dual_coeffs", detail::vector_to_json(model.dual_coeffs)},
      {"feature_mean", detail::vector_to_json(model.feature_mean)},
      {"feature_std", detail::vector_to_json(model.feature_std)},
  };
  detail::write_file_atomic(path, j.dump(1) + "\n");
}

BaselineModel load_baseline(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("baseline model " + path.string() + ": " + e.what());
  }
  if (j.value("type", "") != "baseline_krr") {
    throw ParseError("baseline model " + path.string() +
                     ": expected type \"baseline_krr\"");
  }
  BaselineModel model;
  model.gamma = j.at("gamma").get<double>();
  model.ridge = j.at("ridge").get<double>();
  model.support = detail::matrix_from_json(j.at("support"));
  model.dual_coeffs = detail::vector_from_json(j.at("dual_coeffs"));
  model.feature_mean = detail::vector_from_json(j.at("feature_mean"));
  model.feature_std = detail::vector_from_json(j.at("feature_std"));
  if (model.dual_coeffs.size() != model.support.rows()) {
    throw ParseError("baseline model: dual coefficient count mismatch");
  }
  return model;
}

}  // namespace uwbgem::baseline
