// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_BASELINE_HPP_
#define UWBGEM_BASELINE_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <span>

#include "uwbgem/dataset.hpp"

namespace uwbgem::baseline {

/// Handcrafted waveform statistics conventional in the UWB NLOS
/// literature.
struct FeatureVector {
  double energy = 0.0;               // sum cir^2 * bin_duration
  double max_amplitude = 0.0;        // peak magnitude
  double rise_time_s = 0.0;          // first 10%-of-peak crossing to peak
  double mean_excess_delay_s = 0.0;  // energy-weighted mean delay
  double rms_delay_spread_s = 0.0;   // energy-weighted delay std
  double kurtosis = 0.0;             // fourth standardized moment

  static constexpr int kCount = 6;
  Eigen::Matrix<double, kCount, 1> as_vector() const;
};

/// Throws NoSignalError for an all-zero CIR.
FeatureVector extract_features(std::span<const double> cir,
                               double bin_duration_s);

/// Kernel ridge regressor with a Gaussian kernel on standardized
/// features; the fully supervised comparison method.
struct BaselineModel {
  double gamma = 1.0 / (2.0 * FeatureVector::kCount);
  double ridge = 1e-3;
  Eigen::MatrixXd support;      // n x kCount, standardized feature rows
  Eigen::VectorXd dual_coeffs;  // n
  Eigen::Matrix<double, FeatureVector::kCount, 1> feature_mean;
  Eigen::Matrix<double, FeatureVector::kCount, 1> feature_std;

  bool fitted() const { return dual_coeffs.size() > 0; }
};

/// Standardizes the feature rows and solves (K + ridge I) a = y directly.
/// Requires n >= 2 fully supervised rows. Throws NumericError if the
/// system is singular beyond the ridge.
BaselineModel fit_baseline(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& err_labels, double gamma,
                           double ridge);

/// Convenience: extract features from every clean-error-labeled sample
/// and fit. Throws InvalidArgumentError when any passed sample carries a
/// non-clean error label.
BaselineModel fit_baseline_on(const dataset::Dataset& train,
                              double bin_duration_s, double gamma,
                              double ridge);

/// Ranging-error estimate for one feature vector. Throws
/// InvalidStateError on an unfitted model.
double predict_baseline(const BaselineModel& model, const FeatureVector& fv);

void save_baseline(const BaselineModel& model,
                   const std::filesystem::path& path);
BaselineModel load_baseline(const std::filesystem::path& path);

}  // namespace uwbgem::baseline

#endif  // UWBGEM_BASELINE_HPP_
