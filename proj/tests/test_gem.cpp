// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "test_util.hpp"
#include "uwbgem/dataset.hpp"
#include "uwbgem/errors.hpp"
#include "uwbgem/gem.hpp"
#include "uwbgem/signal_model.hpp"

using namespace uwbgem;
namespace fs = std::filesystem;

namespace {

void zero_last_layer(nn::Mlp& mlp) {
  mlp.layers.back().weights.setZero();
  mlp.layers.back().biases.setZero();
}

gem::GemModel small_model(int input_dim = 8, std::uint64_t seed = 3) {
  gem::ModelConfig cfg;
  cfg.input_dim = input_dim;
  cfg.e_hidden = {6};
  cfg.m_hidden = {6};
  cfg.seed = seed;
  return gem::make_model(cfg);
}

std::vector<double> ramp_cir(int n, double scale = 1.0) {
  std::vector<double> cir(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cir[static_cast<std::size_t>(i)] = scale * (0.1 + 0.05 * i);
  }
  return cir;
}

bool all_zero(const nn::Gradients& g) {
  for (const auto& w : g.weights) {
    if (w.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  for (const auto& b : g.biases) {
    if (b.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

// Small normalized synthetic training set with clean labels.
dataset::Dataset training_set(int n, std::uint64_t seed) {
  signal_model::GeneratorConfig cfg;
  cfg.n_samples = n;
  cfg.seed = seed;
  const auto raw = signal_model::generate_dataset(cfg);
  auto [normalized, stats] =
      dataset::normalize_cirs(raw, dataset::NormScheme::per_sample_max);
  return normalized;
}

}  // namespace

TEST_SUITE("gem") {

TEST_CASE("e_net_forward: zeroed logit layer gives the uniform posterior") {
  gem::GemModel model = small_model();
  zero_last_layer(model.e_net);
  const Eigen::VectorXd probs =
      gem::e_net_forward(model, ramp_cir(model.e_net.input_dim()));
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    CHECK(probs(j) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("e_net_forward: output is a probability vector") {
  auto rng = std::mt19937_64{7};
  const gem::GemModel model = small_model(12, rng());
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> cir(12);
    for (double& v : cir) v = dist(rng);
    const Eigen::VectorXd probs = gem::e_net_forward(model, cir);
    CHECK(probs.minCoeff() > 0.0);
    CHECK(std::abs(probs.sum() - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(gem::e_net_forward(model, ramp_cir(5)), ShapeError);
}

TEST_CASE("m_net_forward: zeroed output layer estimates exactly zero") {
  gem::GemModel model = small_model();
  zero_last_layer(model.m_net);
  const auto cir = ramp_cir(model.e_net.input_dim());
  const Eigen::VectorXd probs = gem::e_net_forward(model, cir);
  CHECK(gem::m_net_forward(model, cir, probs) == 0.0);
}

TEST_CASE("m_net_forward: deterministic, finite, shape-checked") {
  const gem::GemModel model = small_model();
  const auto cir = ramp_cir(model.e_net.input_dim());
  const Eigen::VectorXd probs = gem::e_net_forward(model, cir);
  const double a = gem::m_net_forward(model, cir, probs);
  const double b = gem::m_net_forward(model, cir, probs);
  CHECK(a == b);
  CHECK(std::isfinite(a));
  CHECK_THROWS_AS(gem::m_net_forward(model, cir, Eigen::VectorXd::Ones(5)),
                  ShapeError);
}

TEST_CASE("loss_exp: squared residuals, sign-agnostic") {
  CHECK(gem::loss_exp(0.5, 0.5) == 0.0);
  CHECK(gem::loss_exp(0.5, 0.2) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(gem::loss_exp(-0.1, 0.2) == doctest::Approx(0.09).epsilon(1e-15));
}

TEST_CASE("loss_kl: matched one-hot, uniform, and validation") {
  Eigen::Vector2d onehot(1.0, 0.0);
  Eigen::Vector2d near_onehot(1.0 - 1e-12, 1e-12);
  CHECK(gem::loss_kl(onehot, near_onehot) ==
        doctest::Approx(0.0).epsilon(1e-11));

  Eigen::Vector2d uniform(0.5, 0.5);
  CHECK(gem::loss_kl(onehot, uniform) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(gem::loss_kl(uniform, uniform) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Eigen::Vector2d bad(0.7, 0.7);
  CHECK_THROWS_AS(gem::loss_kl(bad, uniform), InvalidArgumentError);
  CHECK_THROWS_AS(gem::loss_kl(uniform, bad), InvalidArgumentError);
  Eigen::Vector2d with_zero(1.0, 0.0);
  CHECK_THROWS_AS(gem::loss_kl(uniform, with_zero), InvalidArgumentError);
}

TEST_CASE("loss_kl dominates the prior entropy, equality iff p = q") {
  auto rng = std::mt19937_64{41};
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 3;
    Eigen::VectorXd p(k), q(k);
    for (int j = 0; j < k; ++j) {
      p(j) = dist(rng);
      q(j) = dist(rng);
    }
    p /= p.sum();
    q /= q.sum();
    double entropy = 0.0;
    for (int j = 0; j < k; ++j) entropy -= p(j) * std::log(p(j));
    CHECK(gem::loss_kl(p, q) >= entropy - 1e-9);
    CHECK(gem::loss_kl(p, p) == doctest::Approx(entropy).epsilon(1e-12));
  }
}

TEST_CASE("batch_objective: fully unlabeled batch is exactly zero") {
  const gem::GemModel model = small_model();
  std::vector<dataset::Sample> batch;
  batch.push_back(testutil::make_sample(0, ramp_cir(8), {}, {}));
  batch.push_back(testutil::make_sample(1, ramp_cir(8, 0.5), {}, {}));
  const auto obj = gem::batch_objective(model, batch, 1.0);
  CHECK(obj.loss == 0.0);
  CHECK(obj.l_exp == 0.0);
  CHECK(obj.l_kl == 0.0);
  CHECK(all_zero(obj.e_grads));
  CHECK(all_zero(obj.m_grads));
}

TEST_CASE("batch_objective: zero-initialized model on one labeled sample") {
  gem::GemModel model = small_model();
  zero_last_layer(model.e_net);
  zero_last_layer(model.m_net);
  std::vector<dataset::Sample> batch;
  batch.push_back(testutil::make_sample(0, ramp_cir(8), 0, 0.3));

  // estimate 0 and uniform posterior: loss = 0.3^2 + lambda ln 2
  for (double lambda : {1.0, 0.5, 0.0}) {
    const auto obj = gem::batch_objective(model, batch, lambda);
    CHECK(obj.loss ==
          doctest::Approx(0.09 + lambda * std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("batch_objective equals the mean of per-sample terms") {
  auto rng = std::mt19937_64{17};
  const auto c = testutil::random_gem_check_case(rng, 6);
  const double lambda = 0.7;
  const auto obj = gem::batch_objective(c.model, c.batch, lambda);

  double l_exp = 0.0;
  double l_kl = 0.0;
  for (const auto& s : c.batch) {
    const Eigen::VectorXd probs = gem::e_net_forward(c.model, s.cir);
    if (s.err_label) {
      l_exp += gem::loss_exp(*s.err_label,
                             gem::m_net_forward(c.model, s.cir, probs));
    }
    if (s.env_label) {
      Eigen::VectorXd onehot = Eigen::VectorXd::Zero(c.model.k_classes);
      onehot(*s.env_label) = 1.0;
      l_kl += gem::loss_kl(onehot, probs);
    }
  }
  l_exp /= static_cast<double>(c.batch.size());
  l_kl /= static_cast<double>(c.batch.size());
  CHECK(obj.l_exp == doctest::Approx(l_exp).epsilon(1e-12));
  CHECK(obj.l_kl == doctest::Approx(l_kl).epsilon(1e-12));
  CHECK(obj.loss == doctest::Approx(l_exp + lambda * l_kl).epsilon(1e-12));
}

TEST_CASE("batch_objective gradients match central finite differences") {
  auto rng = std::mt19937_64{23};
  const auto c = testutil::random_gem_check_case(rng);
  const double err = testutil::gem_grad_check(c.model, c.batch, 1.0, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("batch_objective rejects an empty batch") {
  const gem::GemModel model = small_model();
  CHECK_THROWS_AS(
      gem::batch_objective(model, std::span<const dataset::Sample>{}, 1.0),
      InvalidArgumentError);
}

TEST_CASE("train: loss decreases on a separable synthetic set") {
  const dataset::Dataset set = training_set(200, 77);
  gem::ModelConfig mc;
  mc.seed = 1;
  gem::GemModel model = gem::make_model(mc);

  gem::TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 32;
  tc.seed = 2;
  const auto [trained, history] = gem::train(model, set, tc);
  REQUIRE(history.epochs.size() == 50);
  CHECK(history.epochs.back().total_loss <
        history.epochs.front().total_loss);
}

TEST_CASE("train: validation of config and inputs") {
  const dataset::Dataset set = training_set(10, 3);
  gem::GemModel model = small_model(dataset::kCirLength);
  gem::TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(gem::train(model, set, tc), InvalidArgumentError);
  tc.epochs = 1;
  tc.batch_size = 0;
  CHECK_THROWS_AS(gem::train(model, set, tc), InvalidArgumentError);
  tc.batch_size = 4;
  CHECK_THROWS_AS(gem::train(model, dataset::Dataset{}, tc),
                  InvalidArgumentError);
}

TEST_CASE("train: identical seed gives bit-identical parameters") {
  const dataset::Dataset set = training_set(64, 5);
  gem::ModelConfig mc;
  mc.seed = 4;
  gem::TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 16;
  tc.seed = 6;
  const auto [a, ha] = gem::train(gem::make_model(mc), set, tc);
  const auto [b, hb] = gem::train(gem::make_model(mc), set, tc);
  CHECK(gem::bitwise_equal(a, b));
}

TEST_CASE("train: with every label deleted, joint training is a no-op") {
  dataset::Dataset set = training_set(32, 8);
  dataset::WeakLabelConfig weak;
  weak.eta_k = 0.0;
  weak.eta_e = 0.0;
  weak.env_modes = {dataset::EnvPollution::delete_label};
  weak.err_modes = {dataset::ErrPollution::delete_label};
  weak.seed = 1;
  const dataset::Dataset unlabeled = dataset::corrupt_labels(set, weak);

  gem::ModelConfig mc;
  mc.seed = 11;
  const gem::GemModel initial = gem::make_model(mc);
  gem::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 12;
  const auto [after, history] = gem::train(initial, unlabeled, tc);
  CHECK(gem::bitwise_equal(initial, after));
  CHECK(history.epochs.back().total_loss == 0.0);
}

TEST_CASE("train: kl_weight 0 with detached probs freezes the E-Net") {
  const dataset::Dataset set = training_set(48, 9);
  gem::ModelConfig mc;
  mc.seed = 13;
  const gem::GemModel initial = gem::make_model(mc);
  gem::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 16;
  tc.kl_weight = 0.0;
  tc.detach_class_probs = true;
  tc.seed = 14;
  const auto [after, history] = gem::train(initial, set, tc);
  CHECK(nn::bitwise_equal(initial.e_net, after.e_net));
  CHECK_FALSE(nn::bitwise_equal(initial.m_net, after.m_net));
}

TEST_CASE("alternating mode: the frozen network never moves") {
  const dataset::Dataset base = training_set(32, 15);

  SUBCASE("no error labels: only the E-Net trains") {
    dataset::WeakLabelConfig weak;
    weak.eta_k = 1.0;
    weak.eta_e = 0.0;
    weak.err_modes = {dataset::ErrPollution::delete_label};
    weak.seed = 2;
    const auto set = dataset::corrupt_labels(base, weak);
    gem::ModelConfig mc;
    mc.seed = 16;
    const gem::GemModel initial = gem::make_model(mc);
    gem::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.update_mode = gem::UpdateMode::alternating;
    tc.seed = 17;
    const auto [after, history] = gem::train(initial, set, tc);
    CHECK(nn::bitwise_equal(initial.m_net, after.m_net));
    CHECK_FALSE(nn::bitwise_equal(initial.e_net, after.e_net));
  }
  SUBCASE("no env labels, detached probs: only the M-Net trains") {
    dataset::WeakLabelConfig weak;
    weak.eta_k = 0.0;
    weak.eta_e = 1.0;
    weak.env_modes = {dataset::EnvPollution::delete_label};
    weak.seed = 3;
    const auto set = dataset::corrupt_labels(base, weak);
    gem::ModelConfig mc;
    mc.seed = 18;
    const gem::GemModel initial = gem::make_model(mc);
    gem::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.update_mode = gem::UpdateMode::alternating;
    tc.detach_class_probs = true;
    tc.seed = 19;
    const auto [after, history] = gem::train(initial, set, tc);
    CHECK(nn::bitwise_equal(initial.e_net, after.e_net));
    CHECK_FALSE(nn::bitwise_equal(initial.m_net, after.m_net));
  }
  SUBCASE("alternating and joint updates genuinely differ") {
    gem::ModelConfig mc;
    mc.seed = 20;
    gem::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 21;
    const auto [joint, hj] = gem::train(gem::make_model(mc), base, tc);
    tc.update_mode = gem::UpdateMode::alternating;
    const auto [alt, ha] = gem::train(gem::make_model(mc), base, tc);
    CHECK_FALSE(gem::bitwise_equal(joint, alt));
  }
}

TEST_CASE("mitigate: subtracts the estimate from the measurement") {
  gem::GemModel model = small_model(dataset::kCirLength);
  zero_last_layer(model.m_net);
  model.norm_stats = {dataset::NormScheme::per_sample_max, 0};

  std::vector<double> cir(dataset::kCirLength, 0.0);
  cir[40] = 2.0;
  cir[41] = 0.8;

  SUBCASE("always-zero M-Net leaves the measurement untouched") {
    CHECK(gem::mitigate(model, cir, 5.0) == 5.0);
  }
  SUBCASE("constant 0.4 estimate shifts 5.0 to 4.6") {
    model.m_net.layers.back().biases(0) = 0.4;
    CHECK(gem::predict_error(model, cir) == doctest::Approx(0.4));
    CHECK(gem::mitigate(model, cir, 5.0) == doctest::Approx(4.6));
  }
  SUBCASE("residual identity: true - corrected = estimate - true_err") {
    model.m_net.layers.back().biases(0) = 0.25;
    const double measured = 5.0;
    const double true_distance = 4.7;
    const double delta_d = measured - true_distance;
    const double corrected = gem::mitigate(model, cir, measured);
    const double estimate = gem::predict_error(model, cir);
    CHECK(true_distance - corrected ==
          doctest::Approx(estimate - delta_d).epsilon(1e-12));
  }
}

TEST_CASE("model checkpoint round-trips bit for bit") {
  const gem::GemModel model = small_model(10, 99);
  const auto path =
      fs::temp_directory_path() / "uwbgem_test_gem_checkpoint.json";
  gem::save_model(model, path);
  const gem::GemModel loaded = gem::load_model(path);
  CHECK(gem::bitwise_equal(model, loaded));
  fs::remove(path);
}

TEST_CASE("history csv carries the documented header and one row per epoch") {
  const dataset::Dataset set = training_set(24, 25);
  gem::ModelConfig mc;
  mc.seed = 26;
  gem::TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 8;
  tc.seed = 27;
  const auto [model, history] = gem::train(gem::make_model(mc), set, tc);

  const auto path = fs::temp_directory_path() / "uwbgem_test_history.csv";
  gem::save_history_csv(history, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,total_loss,l_exp,l_kl,env_acc");
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 4);
  in.close();
  fs::remove(path);
}

}  // TEST_SUITE
