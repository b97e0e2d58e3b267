// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "test_util.hpp"
#include "uwbgem/baseline.hpp"
#include "uwbgem/dataset.hpp"
#include "uwbgem/errors.hpp"
#include "uwbgem/signal_model.hpp"

using namespace uwbgem;
using baseline::FeatureVector;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd random_features(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Eigen::MatrixXd f(n, FeatureVector::kCount);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < FeatureVector::kCount; ++j) f(i, j) = dist(rng);
  }
  return f;
}

}  // namespace

TEST_SUITE("baseline") {

TEST_CASE("extract_features: hand-derived waveform statistics") {
  SUBCASE("a single spike has zero delay spread and zero rise time") {
    std::vector<double> cir(16, 0.0);
    cir[1] = 1.0;
    const auto fv = baseline::extract_features(cir, 1.0);
    CHECK(fv.rms_delay_spread_s == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(fv.rise_time_s == 0.0);
    CHECK(fv.max_amplitude == 1.0);
    CHECK(fv.mean_excess_delay_s == doctest::Approx(1.0));  // bin 1, 1 s bins
  }
  SUBCASE("two equal bins: mean excess delay is the midpoint") {
    const std::vector<double> cir{1.0, 1.0};
    const auto fv = baseline::extract_features(cir, 1.0);
    CHECK(fv.mean_excess_delay_s == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(fv.energy == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("equal spikes at bins 0 and 2: rms delay spread is one second") {
    const std::vector<double> cir{1.0, 0.0, 1.0};
    const auto fv = baseline::extract_features(cir, 1.0);
    CHECK(fv.mean_excess_delay_s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fv.rms_delay_spread_s == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("rise time spans the first 10%-of-peak crossing to the peak") {
    const std::vector<double> cir{0.0, 0.05, 0.2, 0.5, 1.0, 0.3};
    const auto fv = baseline::extract_features(cir, 1.0);
    CHECK(fv.rise_time_s == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("all-zero CIR carries no signal") {
    const std::vector<double> zeros(8, 0.0);
    CHECK_THROWS_AS(baseline::extract_features(zeros, 1.0), NoSignalError);
  }
}

TEST_CASE("extract_features: scaling behaviour") {
  auto rng = std::mt19937_64{3};
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> cir(64);
  for (double& v : cir) v = dist(rng);
  const double scale = 3.7;
  std::vector<double> scaled = cir;
  for (double& v : scaled) v *= scale;

  const auto a = baseline::extract_features(cir, 1e-9);
  const auto b = baseline::extract_features(scaled, 1e-9);
  CHECK(b.max_amplitude == doctest::Approx(scale * a.max_amplitude));
  CHECK(b.energy == doctest::Approx(scale * scale * a.energy));
  CHECK(b.rise_time_s == a.rise_time_s);
  CHECK(b.mean_excess_delay_s ==
        doctest::Approx(a.mean_excess_delay_s).epsilon(1e-12));
  CHECK(b.rms_delay_spread_s ==
        doctest::Approx(a.rms_delay_spread_s).epsilon(1e-12));
  CHECK(b.kurtosis == doctest::Approx(a.kurtosis).epsilon(1e-12));
}

TEST_CASE("kernel matrix on standardized rows is positive semidefinite") {
  auto rng = std::mt19937_64{5};
  const int n = 24;
  const Eigen::MatrixXd f = random_features(rng, n);
  const Eigen::VectorXd y = Eigen::VectorXd::Random(n);
  const auto model = baseline::fit_baseline(f, y, 1.0 / 12.0, 1e-3);

  Eigen::MatrixXd kernel(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      kernel(i, j) = std::exp(
          -model.gamma *
          (model.support.row(i) - model.support.row(j)).squaredNorm());
    }
  }
  CHECK((kernel - kernel.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);

  // solve residual at round-off level
  Eigen::MatrixXd system = kernel;
  system.diagonal().array() += model.ridge;
  const double residual = (system * model.dual_coeffs - y).norm();
  CHECK(residual <= 1e-8 * std::max(y.norm(), 1.0));
}

TEST_CASE("fit_baseline: vanishing ridge interpolates the training data") {
  auto rng = std::mt19937_64{7};
  const int n = 12;
  const Eigen::MatrixXd f = random_features(rng, n);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = std::sin(0.5 * i) - 0.2;

  const auto model = baseline::fit_baseline(f, y, 1.0 / 12.0, 1e-10);
  for (int i = 0; i < n; ++i) {
    FeatureVector fv;
    fv.energy = f(i, 0);
    fv.max_amplitude = f(i, 1);
    fv.rise_time_s = f(i, 2);
    fv.mean_excess_delay_s = f(i, 3);
    fv.rms_delay_spread_s = f(i, 4);
    fv.kurtosis = f(i, 5);
    CHECK(baseline::predict_baseline(model, fv) ==
          doctest::Approx(y(i)).epsilon(1e-6));
  }
}

TEST_CASE("fit_baseline: constant labels predict that constant") {
  auto rng = std::mt19937_64{9};
  const int n = 16;
  const Eigen::MatrixXd f = random_features(rng, n);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 0.42);
  const auto model = baseline::fit_baseline(f, y, 1.0 / 12.0, 1e-6);
  for (int i = 0; i < 4; ++i) {
    FeatureVector fv;
    fv.energy = f(i, 0);
    fv.max_amplitude = f(i, 1);
    fv.rise_time_s = f(i, 2);
    fv.mean_excess_delay_s = f(i, 3);
    fv.rms_delay_spread_s = f(i, 4);
    fv.kurtosis = f(i, 5);
    CHECK(baseline::predict_baseline(model, fv) ==
          doctest::Approx(0.42).epsilon(1e-4));
  }
}

TEST_CASE("fit_baseline: input validation") {
  auto rng = std::mt19937_64{11};
  const Eigen::MatrixXd one = random_features(rng, 1);
  CHECK_THROWS_AS(baseline::fit_baseline(one, Eigen::VectorXd::Ones(1),
                                         1.0 / 12.0, 1e-3),
                  InvalidArgumentError);
  const Eigen::MatrixXd f = random_features(rng, 4);
  CHECK_THROWS_AS(baseline::fit_baseline(f, Eigen::VectorXd::Ones(3),
                                         1.0 / 12.0, 1e-3),
                  InvalidArgumentError);
  CHECK_THROWS_AS(
      baseline::fit_baseline(f, Eigen::VectorXd::Ones(4), 0.0, 1e-3),
      InvalidArgumentError);
}

TEST_CASE("predict on an unfitted model is an invalid-state error") {
  baseline::BaselineModel empty;
  CHECK_THROWS_AS(baseline::predict_baseline(empty, FeatureVector{}),
                  InvalidStateError);
}

TEST_CASE("fit_baseline_on: requires clean labels, beats unmitigated") {
  signal_model::GeneratorConfig cfg;
  cfg.n_samples = 250;
  cfg.seed = 13;
  const auto data = signal_model::generate_dataset(cfg);
  const auto [train, test] = dataset::split(data, 0.8, 1);

  const auto model = baseline::fit_baseline_on(train, 1e-9, 1.0 / 12.0, 1e-3);

  double unmit_sq = 0.0;
  double fitted_sq = 0.0;
  for (const auto& s : test.samples) {
    const double truth = *s.true_err;
    const auto fv = baseline::extract_features(s.cir, 1e-9);
    const double pred = baseline::predict_baseline(model, fv);
    unmit_sq += truth * truth;
    fitted_sq += (pred - truth) * (pred - truth);
  }
  CHECK(fitted_sq < unmit_sq);

  dataset::WeakLabelConfig weak;
  weak.eta_k = 1.0;
  weak.eta_e = 0.5;
  weak.seed = 2;
  const auto corrupted = dataset::corrupt_labels(train, weak);
  CHECK_THROWS_AS(baseline::fit_baseline_on(corrupted, 1e-9, 1.0 / 12.0, 1e-3),
                  InvalidArgumentError);
}

TEST_CASE("baseline checkpoint round-trips exactly") {
  auto rng = std::mt19937_64{15};
  const Eigen::MatrixXd f = random_features(rng, 10);
  const Eigen::VectorXd y = Eigen::VectorXd::Random(10);
  const auto model = baseline::fit_baseline(f, y, 1.0 / 12.0, 1e-3);

  const auto path =
      fs::temp_directory_path() / "uwbgem_test_baseline_checkpoint.json";
  baseline::save_baseline(model, path);
  const auto loaded = baseline::load_baseline(path);
  fs::remove(path);

  CHECK(loaded.gamma == model.gamma);
  CHECK(loaded.ridge == model.ridge);
  CHECK(loaded.support == model.support);
  CHECK(loaded.dual_coeffs == model.dual_coeffs);
  CHECK(loaded.feature_mean == model.feature_mean);
  CHECK(loaded.feature_std == model.feature_std);

  baseline::BaselineModel unfitted;
  CHECK_THROWS_AS(baseline::save_baseline(unfitted, path), InvalidStateError);
}

}  // TEST_SUITE
