// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "uwbgem/nn.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "io_util.hpp"
#include "serde.hpp"
#include "uwbgem/errors.hpp"
#include "uwbgem/rng.hpp"

namespace uwbgem::nn {

namespace {

void require_chained(const Mlp& mlp) {
  if (mlp.layers.empty()) {
    throw InvalidArgumentError("mlp has no layers");
  }
  for (std::size_t i = 1; i < mlp.layers.size(); ++i) {
    if (mlp.layers[i].in_dim() != mlp.layers[i - 1].out_dim()) {
      throw ShapeError("layer " + std::to_string(i) + " input dim " +
                       std::to_string(mlp.layers[i].in_dim()) +
                       " != previous output dim " +
                       std::to_string(mlp.layers[i - 1].out_dim()));
    }
  }
}

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::identity:
      return z;
  }
  throw InvalidArgumentError("unknown activation");
}

// Derivative of the activation evaluated at the pre-activation, applied
// elementwise to the upstream gradient.
Eigen::MatrixXd activation_backward(Activation act, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& upstream) {
  switch (act) {
    case Activation::relu:
      return (z.array() > 0.0).select(upstream, 0.0);
    case Activation::identity:
      return upstream;
  }
  throw InvalidArgumentError("unknown activation");
}

}  // namespace

int Mlp::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

int Mlp::output_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += static_cast<std::size_t>(layer.weights.size()) +
         static_cast<std::size_t>(layer.biases.size());
  }
  return n;
}

Mlp make_mlp(const std::vector<int>& dims,
             const std::vector<Activation>& activations, std::uint64_t seed) {
  if (dims.size() < 2) {
    throw InvalidArgumentError("make_mlp: need at least input and output dim");
  }
  if (activations.size() != dims.size() - 1) {
    throw InvalidArgumentError("make_mlp: one activation per layer required");
  }
  for (int d : dims) {
    if (d < 1) {
      throw InvalidArgumentError("make_mlp: dims must be >= 1");
    }
  }

  auto rng = make_rng(seed);
  Mlp mlp;
  mlp.layers.reserve(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    const double limit =
        activations[i] == Activation::relu
            ? std::sqrt(6.0 / fan_in)
            : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);

    Layer layer;
    layer.activation = activations[i];
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = dist(rng);
      }
    }
    layer.biases = Eigen::VectorXd::Zero(fan_out);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (weights.size() != other.weights.size()) {
    throw ShapeError("gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double factor) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] *= factor;
    biases[i] *= factor;
  }
  return *this;
}

Gradients zero_gradients(const Mlp& mlp) {
  Gradients g;
  g.weights.reserve(mlp.layers.size());
  g.biases.reserve(mlp.layers.size());
  for (const auto& layer : mlp.layers) {
    g.weights.emplace_back(
        Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    g.biases.emplace_back(Eigen::VectorXd::Zero(layer.biases.size()));
  }
  return g;
}

Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& input,
                        ForwardCache* cache) {
  require_chained(mlp);
  if (input.rows() != mlp.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(input.rows()) +
                     " rows, expected " + std::to_string(mlp.input_dim()));
  }
  if (cache != nullptr) {
    cache->input = input;
    cache->preacts.clear();
    cache->activations.clear();
    cache->preacts.reserve(mlp.layers.size());
    cache->activations.reserve(mlp.layers.size());
  }

  Eigen::MatrixXd a = input;
  for (const auto& layer : mlp.layers) {
    Eigen::MatrixXd z = (layer.weights * a).colwise() + layer.biases;
    a = apply_activation(layer.activation, z);
    if (cache != nullptr) {
      cache->preacts.push_back(std::move(z));
      cache->activations.push_back(a);
    }
  }
  return a;
}

Eigen::VectorXd forward(const Mlp& mlp, const Eigen::VectorXd& input,
                        ForwardCache* cache) {
  return forward(mlp, Eigen::MatrixXd(input), cache).col(0);
}

Eigen::MatrixXd backward(const Mlp& mlp, const ForwardCache& cache,
                         const Eigen::MatrixXd& output_grad, Gradients& grads) {
  require_chained(mlp);
  const std::size_t n_layers = mlp.layers.size();
  if (cache.preacts.size() != n_layers || cache.activations.size() != n_layers) {
    throw InvalidStateError("backward: cache does not match network depth");
  }
  if (cache.input.rows() != mlp.input_dim()) {
    throw InvalidStateError("backward: cache input dim mismatch");
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (cache.preacts[i].rows() != mlp.layers[i].out_dim()) {
      throw InvalidStateError("backward: cache layer shape mismatch");
    }
  }
  if (output_grad.rows() != mlp.output_dim() ||
      output_grad.cols() != cache.input.cols()) {
    throw ShapeError("backward: output_grad shape mismatch");
  }
  if (grads.weights.size() != n_layers) {
    throw ShapeError("backward: gradient accumulator mismatch");
  }

  Eigen::MatrixXd delta = output_grad;
  for (std::size_t i = n_layers; i-- > 0;) {
    const Layer& layer = mlp.layers[i];
    delta = activation_backward(layer.activation, cache.preacts[i], delta);
    const Eigen::MatrixXd& below =
        i == 0 ? cache.input : cache.activations[i - 1];
    grads.weights[i].noalias() += delta * below.transpose();
    grads.biases[i] += delta.rowwise().sum();
    delta = (layer.weights.transpose() * delta).eval();
  }
  return delta;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  return softmax_columns(Eigen::MatrixXd(logits)).col(0);
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    Eigen::VectorXd e = (logits.col(c).array() - m).exp();
    probs.col(c) = e / e.sum();
  }
  return probs;
}

OptimizerState make_optimizer(const Mlp& mlp, const OptimizerConfig& config) {
  OptimizerState state;
  state.config = config;
  if (config.kind == OptimizerKind::adam) {
    for (const auto& layer : mlp.layers) {
      state.m_weights.emplace_back(
          Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
      state.v_weights.emplace_back(
          Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
      state.m_biases.emplace_back(Eigen::VectorXd::Zero(layer.biases.size()));
      state.v_biases.emplace_back(Eigen::VectorXd::Zero(layer.biases.size()));
    }
  }
  return state;
}

void step(Mlp& mlp, const Gradients& grads, OptimizerState& state) {
  const std::size_t n_layers = mlp.layers.size();
  if (grads.weights.size() != n_layers || grads.biases.size() != n_layers) {
    throw ShapeError("step: gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (grads.weights[i].rows() != mlp.layers[i].weights.rows() ||
        grads.weights[i].cols() != mlp.layers[i].weights.cols() ||
        grads.biases[i].size() != mlp.layers[i].biases.size()) {
      throw ShapeError("step: gradient shape mismatch at layer " +
                       std::to_string(i));
    }
  }

  const OptimizerConfig& cfg = state.config;
  if (cfg.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < n_layers; ++i) {
      mlp.layers[i].weights -= cfg.learning_rate * grads.weights[i];
      mlp.layers[i].biases -= cfg.learning_rate * grads.biases[i];
    }
    ++state.step_count;
    return;
  }

  if (state.m_weights.size() != n_layers) {
    throw ShapeError("step: optimizer state does not match model");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < n_layers; ++i) {
    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
      v = cfg.beta2 * v.array().matrix() +
          (1.0 - cfg.beta2) * grad.array().square().matrix();
      param.array() -= cfg.learning_rate * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + cfg.epsilon);
    };
    update(mlp.layers[i].weights, grads.weights[i], state.m_weights[i],
           state.v_weights[i]);
    update(mlp.layers[i].biases, grads.biases[i], state.m_biases[i],
           state.v_biases[i]);
  }
}

double grad_check(const Mlp& mlp, const Eigen::MatrixXd& input,
                  const LossFn& loss, double eps) {
  if (eps <= 0.0) {
    throw InvalidArgumentError("grad_check: eps must be > 0");
  }

  ForwardCache cache;
  const Eigen::MatrixXd output = forward(mlp, input, &cache);
  const LossEval at_point = loss(output);
  Gradients analytic = zero_gradients(mlp);
  backward(mlp, cache, at_point.output_grad, analytic);

  Mlp probe = mlp;
  double max_rel = 0.0;
  auto central = [&](double& param) {
    const double saved = param;
    param = saved + eps;
    const double up = loss(forward(probe, input)).value;
    param = saved - eps;
    const double down = loss(forward(probe, input)).value;
    param = saved;
    return (up - down) / (2.0 * eps);
  };

  for (std::size_t i = 0; i < probe.layers.size(); ++i) {
    Layer& layer = probe.layers[i];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        const double fd = central(layer.weights(r, c));
        const double bp = analytic.weights[i](r, c);
        const double rel =
            std::abs(bp - fd) / std::max(std::abs(bp) + std::abs(fd), 1e-6);
        max_rel = std::max(max_rel, rel);
      }
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) {
      const double fd = central(layer.biases(r));
      const double bp = analytic.biases[i](r);
      const double rel =
          std::abs(bp - fd) / std::max(std::abs(bp) + std::abs(fd), 1e-6);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

void save_mlp(const Mlp& mlp, const std::filesystem::path& path) {
  detail::write_file_atomic(path, detail::mlp_to_json(mlp).dump(1) + "\n");
}

Mlp load_mlp(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  return detail::mlp_from_json(j);
}

bool bitwise_equal(const Mlp& a, const Mlp& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const Layer& la = a.layers[i];
    const Layer& lb = b.layers[i];
    if (la.activation != lb.activation) return false;
    if (la.weights.rows() != lb.weights.rows() ||
        la.weights.cols() != lb.weights.cols() ||
        la.biases.size() != lb.biases.size()) {
      return false;
    }
    if (std::memcmp(la.weights.data(), lb.weights.data(),
                    sizeof(double) * la.weights.size()) != 0) {
      return false;
    }
    if (std::memcmp(la.biases.data(), lb.biases.data(),
                    sizeof(double) * la.biases.size()) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace uwbgem::nn
