// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_NN_HPP_
#define UWBGEM_NN_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace uwbgem::nn {

enum class Activation { relu, identity };

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  Activation activation = Activation::identity;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

/// Plain fully connected network, double precision throughout. Layers
/// chain input_dim -> dims... -> output_dim; all state is value-like so
/// models copy, compare and hash like ordinary data.
struct Mlp {
  std::vector<Layer> layers;

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;
};

/// Builds an MLP with one activation per layer. Weight init is He-uniform
/// for relu layers and Glorot-uniform otherwise, biases zero, all draws
/// from the given seed.
Mlp make_mlp(const std::vector<int>& dims,
             const std::vector<Activation>& activations, std::uint64_t seed);

/// Per-layer parameter gradients, shape-congruent with an Mlp.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;  // same shapes as Layer::weights
  std::vector<Eigen::VectorXd> biases;

  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double factor);
};

Gradients zero_gradients(const Mlp& mlp);

/// Intermediate state of one forward pass, consumed by backward().
struct ForwardCache {
  Eigen::MatrixXd input;                      // in x batch
  std::vector<Eigen::MatrixXd> preacts;       // per layer, out x batch
  std::vector<Eigen::MatrixXd> activations;   // per layer, out x batch
};

/// Columns are samples. Throws ShapeError if input rows != input_dim.
Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& input,
                        ForwardCache* cache = nullptr);
Eigen::VectorXd forward(const Mlp& mlp, const Eigen::VectorXd& input,
                        ForwardCache* cache = nullptr);

/// Reverse-mode gradients of the scalar loss whose gradient at the network
/// output is `output_grad` (summed over batch columns). Accumulates into
/// `grads` and returns the gradient w.r.t. the input. Throws
/// InvalidStateError when the cache does not match the network.
Eigen::MatrixXd backward(const Mlp& mlp, const ForwardCache& cache,
                         const Eigen::MatrixXd& output_grad, Gradients& grads);

/// Numerically stable softmax (max-subtracted). Column-wise for matrices.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers (adam) plus the step counter. SGD keeps no
/// buffers.
struct OptimizerState {
  OptimizerConfig config;
  long step_count = 0;
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
};

OptimizerState make_optimizer(const Mlp& mlp, const OptimizerConfig& config);

/// One parameter update in place. Throws ShapeError when the gradients or
/// state do not match the model.
void step(Mlp& mlp, const Gradients& grads, OptimizerState& state);

struct LossEval {
  double value = 0.0;
  Eigen::MatrixXd output_grad;  // dLoss/dOutput, same shape as output
};
using LossFn = std::function<LossEval(const Eigen::MatrixXd& output)>;

/// Compares backward() against central finite differences, parameter by
/// parameter, and returns the largest relative error
/// |g_bp - g_fd| / max(|g_bp| + |g_fd|, 1e-6). The loss must be
/// deterministic. Throws InvalidArgumentError when eps <= 0.
double grad_check(const Mlp& mlp, const Eigen::MatrixXd& input,
                  const LossFn& loss, double eps);

/// Checkpoints: one self-describing JSON file, decimal text, exact
/// round-trip (load(save(m)) == m bit for bit).
void save_mlp(const Mlp& mlp, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);

bool bitwise_equal(const Mlp& a, const Mlp& b);

}  // namespace uwbgem::nn

#endif  // UWBGEM_NN_HPP_
