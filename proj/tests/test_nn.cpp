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
#include "uwbgem/errors.hpp"
#include "uwbgem/nn.hpp"

using namespace uwbgem;
using testutil::rel_err;

namespace {

nn::Mlp single_layer(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                     nn::Activation act) {
  nn::Mlp mlp;
  mlp.layers.push_back({w, b, act});
  return mlp;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("forward: identity network reproduces its input") {
  const auto mlp = single_layer(Eigen::MatrixXd::Identity(2, 2),
                                Eigen::VectorXd::Zero(2),
                                nn::Activation::identity);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const Eigen::VectorXd y = nn::forward(mlp, x);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(2.0));
}

TEST_CASE("forward: relu clamps the negative branch") {
  Eigen::MatrixXd w(2, 1);
  w << 1.0, -1.0;
  const auto mlp =
      single_layer(w, Eigen::VectorXd::Zero(2), nn::Activation::relu);
  Eigen::VectorXd x(1);
  x << 3.0;
  const Eigen::VectorXd y = nn::forward(mlp, x);
  CHECK(y(0) == doctest::Approx(3.0));
  CHECK(y(1) == doctest::Approx(0.0));
}

TEST_CASE("forward: wrong input length is a shape error") {
  const auto mlp = single_layer(Eigen::MatrixXd::Identity(2, 2),
                                Eigen::VectorXd::Zero(2),
                                nn::Activation::identity);
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(nn::forward(mlp, x), ShapeError);
}

TEST_CASE("forward is pure: repeated calls agree bitwise") {
  auto rng = std::mt19937_64{11};
  const auto c = testutil::random_grad_check_case(rng);
  const Eigen::MatrixXd y1 = nn::forward(c.mlp, c.input);
  const Eigen::MatrixXd y2 = nn::forward(c.mlp, c.input);
  CHECK(y1 == y2);
}

TEST_CASE("backward: single linear layer has grad = g x^T") {
  const auto mlp = single_layer(Eigen::MatrixXd::Identity(2, 2),
                                Eigen::VectorXd::Zero(2),
                                nn::Activation::identity);
  Eigen::VectorXd x(2);
  x << 0.5, -1.5;
  nn::ForwardCache cache;
  nn::forward(mlp, Eigen::MatrixXd(x), &cache);

  Eigen::MatrixXd g(2, 1);
  g << 2.0, 3.0;
  auto grads = nn::zero_gradients(mlp);
  const Eigen::MatrixXd input_grad = nn::backward(mlp, cache, g, grads);

  const Eigen::MatrixXd expected_w = g * x.transpose();
  CHECK((grads.weights[0] - expected_w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((grads.biases[0] - g.col(0)).cwiseAbs().maxCoeff() == 0.0);
  // identity weights: input grad equals the output grad
  CHECK((input_grad - g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: dead relu unit passes no gradient") {
  Eigen::MatrixXd w(2, 1);
  w << 1.0, -1.0;  // second unit pre-activation is negative for x > 0
  const auto mlp =
      single_layer(w, Eigen::VectorXd::Zero(2), nn::Activation::relu);
  Eigen::VectorXd x(1);
  x << 3.0;
  nn::ForwardCache cache;
  nn::forward(mlp, Eigen::MatrixXd(x), &cache);

  Eigen::MatrixXd g(2, 1);
  g << 1.0, 1.0;
  auto grads = nn::zero_gradients(mlp);
  nn::backward(mlp, cache, g, grads);
  CHECK(grads.weights[0](0, 0) == doctest::Approx(3.0));
  CHECK(grads.weights[0](1, 0) == 0.0);
  CHECK(grads.biases[0](1) == 0.0);
}

TEST_CASE("backward: mismatched cache is an invalid-state error") {
  auto rng = std::mt19937_64{12};
  const auto a = testutil::random_grad_check_case(rng);
  nn::ForwardCache cache;
  nn::forward(a.mlp, a.input, &cache);

  nn::Mlp deeper = a.mlp;
  deeper.layers.push_back({Eigen::MatrixXd::Identity(a.mlp.output_dim(),
                                                     a.mlp.output_dim()),
                           Eigen::VectorXd::Zero(a.mlp.output_dim()),
                           nn::Activation::identity});
  auto grads = nn::zero_gradients(deeper);
  const Eigen::MatrixXd g =
      Eigen::MatrixXd::Ones(deeper.output_dim(), a.input.cols());
  CHECK_THROWS_AS(nn::backward(deeper, cache, g, grads), InvalidStateError);
}

TEST_CASE("softmax: symmetric logits, exact log-ratio, huge logits") {
  Eigen::VectorXd z(2);
  z << 0.0, 0.0;
  Eigen::VectorXd p = nn::softmax(z);
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-12));

  z << std::log(3.0), 0.0;
  p = nn::softmax(z);
  CHECK(p(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.25).epsilon(1e-12));

  z << 1000.0, 0.0;
  p = nn::softmax(z);
  CHECK(std::isfinite(p(0)));
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(1) >= 0.0);
}

TEST_CASE("softmax output is a probability vector for random logits") {
  auto rng = std::mt19937_64{13};
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd z(2 + trial % 5);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = dist(rng);
    const Eigen::VectorXd p = nn::softmax(z);
    CHECK(p.minCoeff() > 0.0);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("sgd step: p - lr g, zero gradient is a no-op") {
  auto mlp = single_layer(Eigen::MatrixXd::Constant(1, 1, 1.0),
                          Eigen::VectorXd::Zero(1), nn::Activation::identity);
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::sgd;
  cfg.learning_rate = 0.1;
  auto state = nn::make_optimizer(mlp, cfg);

  auto grads = nn::zero_gradients(mlp);
  grads.weights[0](0, 0) = 0.5;
  nn::step(mlp, grads, state);
  CHECK(mlp.layers[0].weights(0, 0) == doctest::Approx(0.95).epsilon(1e-15));

  grads.weights[0](0, 0) = 0.0;
  const double before = mlp.layers[0].weights(0, 0);
  nn::step(mlp, grads, state);
  CHECK(mlp.layers[0].weights(0, 0) == before);
}

TEST_CASE("adam first step matches the bias-corrected update") {
  auto mlp = single_layer(Eigen::MatrixXd::Constant(1, 1, 1.0),
                          Eigen::VectorXd::Zero(1), nn::Activation::identity);
  nn::OptimizerConfig cfg;  // adam defaults
  auto state = nn::make_optimizer(mlp, cfg);
  auto grads = nn::zero_gradients(mlp);
  grads.weights[0](0, 0) = 1.0;
  nn::step(mlp, grads, state);

  // Step 1 by hand: m_hat = g, v_hat = g^2, delta = lr g / (|g| + eps).
  const double expected = 1.0 - cfg.learning_rate * 1.0 / (1.0 + cfg.epsilon);
  CHECK(mlp.layers[0].weights(0, 0) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(1.0 - mlp.layers[0].weights(0, 0) ==
        doctest::Approx(0.001).epsilon(1e-6));
}

TEST_CASE("step: mismatched gradient shapes are a shape error") {
  auto rng = std::mt19937_64{14};
  auto c = testutil::random_grad_check_case(rng);
  auto state = nn::make_optimizer(c.mlp, {});
  auto other = testutil::random_mlp(rng, c.mlp.input_dim() + 1, 2);
  auto bad = nn::zero_gradients(other);
  CHECK_THROWS_AS(nn::step(c.mlp, bad, state), ShapeError);
}

TEST_CASE("grad_check: linear net with quadratic loss is near-exact") {
  auto rng = std::mt19937_64{15};
  nn::Mlp mlp = nn::make_mlp({3, 2}, {nn::Activation::identity}, rng());
  const Eigen::MatrixXd input = testutil::random_matrix(rng, 3, 4);
  const Eigen::MatrixXd target = testutil::random_matrix(rng, 2, 4);
  const double err =
      nn::grad_check(mlp, input, testutil::squared_loss_to(target), 1e-5);
  CHECK(err < 1e-7);
}

TEST_CASE("grad_check: relu nets away from kinks stay under 1e-4") {
  auto rng = std::mt19937_64{16};
  const auto c = testutil::random_grad_check_case(rng);
  const Eigen::MatrixXd target =
      testutil::random_matrix(rng, c.mlp.output_dim(),
                              static_cast<int>(c.input.cols()));
  const double err =
      nn::grad_check(c.mlp, c.input, testutil::squared_loss_to(target), 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: eps = 0 is rejected") {
  auto rng = std::mt19937_64{17};
  const auto c = testutil::random_grad_check_case(rng);
  const Eigen::MatrixXd target =
      Eigen::MatrixXd::Zero(c.mlp.output_dim(), c.input.cols());
  CHECK_THROWS_AS(
      nn::grad_check(c.mlp, c.input, testutil::squared_loss_to(target), 0.0),
      InvalidArgumentError);
}

TEST_CASE("gradients match central differences on 100 random networks") {
  auto rng = std::mt19937_64{2024};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = testutil::random_grad_check_case(rng);
    const Eigen::MatrixXd target =
        testutil::random_matrix(rng, c.mlp.output_dim(),
                                static_cast<int>(c.input.cols()));
    worst = std::max(worst, nn::grad_check(c.mlp, c.input,
                                           testutil::squared_loss_to(target),
                                           1e-5));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("seeded init and optimization are bit-deterministic") {
  auto run = [] {
    nn::Mlp mlp = nn::make_mlp({4, 8, 2},
                               {nn::Activation::relu, nn::Activation::identity},
                               99);
    auto state = nn::make_optimizer(mlp, {});
    auto rng = std::mt19937_64{5};
    for (int it = 0; it < 20; ++it) {
      const Eigen::MatrixXd input = testutil::random_matrix(rng, 4, 8);
      const Eigen::MatrixXd target = testutil::random_matrix(rng, 2, 8);
      nn::ForwardCache cache;
      const Eigen::MatrixXd out = nn::forward(mlp, input, &cache);
      auto grads = nn::zero_gradients(mlp);
      nn::backward(mlp, cache, 2.0 * (out - target), grads);
      nn::step(mlp, grads, state);
    }
    return mlp;
  };
  CHECK(nn::bitwise_equal(run(), run()));
}

TEST_CASE("checkpoint round-trips bit for bit") {
  auto rng = std::mt19937_64{18};
  const auto c = testutil::random_grad_check_case(rng);
  const auto path = std::filesystem::temp_directory_path() /
                    "uwbgem_test_mlp_checkpoint.json";
  nn::save_mlp(c.mlp, path);
  const nn::Mlp loaded = nn::load_mlp(path);
  CHECK(nn::bitwise_equal(c.mlp, loaded));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: malformed file is a parse error") {
  const auto path = std::filesystem::temp_directory_path() /
                    "uwbgem_test_mlp_garbage.json";
  {
    std::ofstream out(path);
    out << "not json at all";
  }
  CHECK_THROWS_AS(nn::load_mlp(path), ParseError);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
