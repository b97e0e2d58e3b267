// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "uwbgem/gem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "io_util.hpp"
#include "serde.hpp"
#include "uwbgem/errors.hpp"
#include "uwbgem/rng.hpp"

namespace uwbgem::gem {

namespace {

struct BatchEval {
  double loss = 0.0;
  double l_exp = 0.0;
  double l_kl = 0.0;
  nn::Gradients e_grads;
  nn::Gradients m_grads;
  Eigen::MatrixXd class_probs;  // K x B, for diagnostics
};

// Shared forward/backward over a gathered batch. Gradients are for the
// mean objective, so batch size is already divided out.
BatchEval eval_batch(const GemModel& model,
                     const std::vector<const dataset::Sample*>& batch,
                     double kl_weight, bool detach_class_probs) {
  validate_model(model);
  if (batch.empty()) {
    throw InvalidArgumentError("batch_objective: empty batch");
  }
  const int in_dim = model.e_net.input_dim();
  const int k = model.k_classes;
  const auto b_count = static_cast<Eigen::Index>(batch.size());

  Eigen::MatrixXd cirs(in_dim, b_count);
  for (Eigen::Index i = 0; i < b_count; ++i) {
    const dataset::Sample& s = *batch[static_cast<std::size_t>(i)];
    if (static_cast<int>(s.cir.size()) != in_dim) {
      throw ShapeError("batch_objective: sample id " + std::to_string(s.id) +
                       " CIR length " + std::to_string(s.cir.size()) +
                       " != " + std::to_string(in_dim));
    }
    cirs.col(i) = Eigen::Map<const Eigen::VectorXd>(s.cir.data(), in_dim);
  }

  nn::ForwardCache e_cache;
  const Eigen::MatrixXd logits = nn::forward(model.e_net, cirs, &e_cache);
  const Eigen::MatrixXd probs = nn::softmax_columns(logits);

  Eigen::MatrixXd m_input(in_dim + k, b_count);
  m_input.topRows(in_dim) = cirs;
  m_input.bottomRows(k) = probs;
  nn::ForwardCache m_cache;
  const Eigen::MatrixXd estimates = nn::forward(model.m_net, m_input, &m_cache);

  const double inv_b = 1.0 / static_cast<double>(b_count);
  BatchEval eval;
  eval.class_probs = probs;
  Eigen::MatrixXd d_estimates = Eigen::MatrixXd::Zero(1, b_count);
  Eigen::MatrixXd d_logits_kl = Eigen::MatrixXd::Zero(k, b_count);

  for (Eigen::Index i = 0; i < b_count; ++i) {
    const dataset::Sample& s = *batch[static_cast<std::size_t>(i)];
    if (s.err_label) {
      const double residual = estimates(0, i) - *s.err_label;
      eval.l_exp += residual * residual * inv_b;
      d_estimates(0, i) = 2.0 * residual * inv_b;
    }
    if (s.env_label) {
      const int label = *s.env_label;
      if (label < 0 || label >= k) {
        throw InvalidArgumentError("batch_objective: env label " +
                                   std::to_string(label) + " outside [0," +
                                   std::to_string(k) + ")");
      }
      eval.l_kl += -std::log(probs(label, i)) * inv_b;
      // Cross-entropy through softmax: d/dlogits = q - onehot(label).
      d_logits_kl.col(i) += kl_weight * inv_b * probs.col(i);
      d_logits_kl(label, i) -= kl_weight * inv_b;
    }
  }
  eval.loss = eval.l_exp + kl_weight * eval.l_kl;

  eval.m_grads = nn::zero_gradients(model.m_net);
  const Eigen::MatrixXd d_m_input =
      nn::backward(model.m_net, m_cache, d_estimates, eval.m_grads);

  Eigen::MatrixXd d_logits = d_logits_kl;
  if (!detach_class_probs) {
    // Error-term gradient reaching the class probabilities, pulled back
    // through the softmax: dz = q .* (dq - <q, dq>).
    const Eigen::MatrixXd d_probs = d_m_input.bottomRows(k);
    for (Eigen::Index i = 0; i < b_count; ++i) {
      const Eigen::VectorXd q = probs.col(i);
      const Eigen::VectorXd dq = d_probs.col(i);
      const double inner = q.dot(dq);
      d_logits.col(i) += (q.array() * (dq.array() - inner)).matrix();
    }
  }

  eval.e_grads = nn::zero_gradients(model.e_net);
  nn::backward(model.e_net, e_cache, d_logits, eval.e_grads);
  return eval;
}

std::vector<const dataset::Sample*> gather(
    const dataset::Dataset& set, std::span<const std::size_t> indices) {
  std::vector<const dataset::Sample*> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    out.push_back(&set.samples[idx]);
  }
  return out;
}

}  // namespace

GemModel make_model(const ModelConfig& config) {
  if (config.k_classes < 2) {
    throw InvalidArgumentError("make_model: k_classes must be >= 2");
  }
  if (config.input_dim < 1) {
    throw InvalidArgumentError("make_model: input_dim must be >= 1");
  }

  auto build = [](int in, const std::vector<int>& hidden, int out,
                  std::uint64_t seed) {
    std::vector<int> dims;
    dims.push_back(in);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    std::vector<nn::Activation> acts(hidden.size(), nn::Activation::relu);
    acts.push_back(nn::Activation::identity);
    return nn::make_mlp(dims, acts, seed);
  };

  GemModel model;
  model.k_classes = config.k_classes;
  model.norm_stats = {config.norm_scheme, 0};
  model.e_net = build(config.input_dim, config.e_hidden, config.k_classes,
                      derive_seed(config.seed, 0xE));
  model.m_net = build(config.input_dim + config.k_classes, config.m_hidden, 1,
                      derive_seed(config.seed, 0xA));
  return model;
}

void validate_model(const GemModel& model) {
  if (model.e_net.layers.empty() || model.m_net.layers.empty()) {
    throw ShapeError("gem model: networks must be non-empty");
  }
  if (model.e_net.output_dim() != model.k_classes) {
    throw ShapeError("gem model: E-Net output dim != k_classes");
  }
  if (model.m_net.input_dim() !=
      model.e_net.input_dim() + model.k_classes) {
    throw ShapeError("gem model: M-Net input dim != cir dim + k_classes");
  }
  if (model.m_net.output_dim() != 1) {
    throw ShapeError("gem model: M-Net output dim != 1");
  }
}

void save_history_csv(const TrainHistory& history,
                      const std::filesystem::path& path) {
  std::string out = "epoch,total_loss,l_exp,l_kl,env_acc\n";
  char buf[160];
  for (std::size_t i = 0; i < history.epochs.size(); ++i) {
    const EpochStats& e = history.epochs[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i + 1,
                  e.total_loss, e.l_exp, e.l_kl, e.env_accuracy);
    out += buf;
  }
  detail::write_file_atomic(path, out);
}

Eigen::VectorXd e_net_forward(const GemModel& model,
                              const std::vector<double>& cir) {
  validate_model(model);
  if (static_cast<int>(cir.size()) != model.e_net.input_dim()) {
    throw ShapeError("e_net_forward: CIR length mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> x(cir.data(),
                                            static_cast<Eigen::Index>(cir.size()));
  return nn::softmax(nn::forward(model.e_net, Eigen::VectorXd(x)));
}

double m_net_forward(const GemModel& model, const std::vector<double>& cir,
                     const Eigen::VectorXd& class_probs) {
  validate_model(model);
  if (static_cast<int>(cir.size()) != model.e_net.input_dim()) {
    throw ShapeError("m_net_forward: CIR length mismatch");
  }
  if (class_probs.size() != model.k_classes) {
    throw ShapeError("m_net_forward: class_probs length mismatch");
  }
  Eigen::VectorXd input(model.m_net.input_dim());
  input.head(cir.size()) =
      Eigen::Map<const Eigen::VectorXd>(cir.data(), cir.size());
  input.tail(model.k_classes) = class_probs;
  return nn::forward(model.m_net, input)(0);
}

double loss_exp(double err_label, double delta_d_hat) {
  const double r = err_label - delta_d_hat;
  return r * r;
}

double loss_kl(const Eigen::VectorXd& prior_probs,
               const Eigen::VectorXd& q_probs) {
  if (prior_probs.size() != q_probs.size() || prior_probs.size() == 0) {
    throw InvalidArgumentError("loss_kl: size mismatch");
  }
  if (std::abs(prior_probs.sum() - 1.0) > 1e-6 ||
      std::abs(q_probs.sum() - 1.0) > 1e-6) {
    throw InvalidArgumentError("loss_kl: inputs must sum to 1");
  }
  double h = 0.0;
  for (Eigen::Index j = 0; j < prior_probs.size(); ++j) {
    const double p = prior_probs(j);
    if (p < 0.0) {
      throw InvalidArgumentError("loss_kl: negative prior probability");
    }
    if (p == 0.0) continue;
    if (!(q_probs(j) > 0.0)) {
      throw InvalidArgumentError("loss_kl: q must be strictly positive");
    }
    h -= p * std::log(q_probs(j));
  }
  return h;
}

BatchObjective batch_objective(const GemModel& model,
                               std::span<const dataset::Sample> batch,
                               double kl_weight, bool detach_class_probs) {
  std::vector<const dataset::Sample*> ptrs;
  ptrs.reserve(batch.size());
  for (const dataset::Sample& s : batch) ptrs.push_back(&s);
  BatchEval eval = eval_batch(model, ptrs, kl_weight, detach_class_probs);
  return {eval.loss, eval.l_exp, eval.l_kl, std::move(eval.e_grads),
          std::move(eval.m_grads)};
}

std::pair<GemModel, TrainHistory> train(GemModel model,
                                        const dataset::Dataset& train_set,
                                        const TrainConfig& config) {
  validate_model(model);
  if (train_set.empty()) {
    throw InvalidArgumentError("train: empty training set");
  }
  if (config.epochs < 1) {
    throw InvalidArgumentError("train: epochs must be >= 1");
  }
  if (config.batch_size < 1) {
    throw InvalidArgumentError("train: batch_size must be >= 1");
  }
  if (config.kl_weight < 0.0) {
    throw InvalidArgumentError("train: kl_weight must be >= 0");
  }

  nn::OptimizerState e_opt = nn::make_optimizer(model.e_net, config.optimizer);
  nn::OptimizerState m_opt = nn::make_optimizer(model.m_net, config.optimizer);

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  history.epochs.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto rng = make_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    std::size_t clean_total = 0;
    std::size_t clean_correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const auto batch = gather(
          train_set, std::span<const std::size_t>(order.data() + start,
                                                  stop - start));
      BatchEval eval =
          eval_batch(model, batch, config.kl_weight, config.detach_class_probs);

      const double weight = static_cast<double>(stop - start);
      stats.total_loss += eval.loss * weight;
      stats.l_exp += eval.l_exp * weight;
      stats.l_kl += eval.l_kl * weight;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const dataset::Sample& s = *batch[i];
        if (s.env_quality == dataset::LabelQuality::clean && s.env_label) {
          Eigen::Index argmax = 0;
          eval.class_probs.col(static_cast<Eigen::Index>(i)).maxCoeff(&argmax);
          clean_total += 1;
          clean_correct += static_cast<int>(argmax) == *s.env_label ? 1 : 0;
        }
      }

      if (config.update_mode == UpdateMode::joint) {
        nn::step(model.e_net, eval.e_grads, e_opt);
        nn::step(model.m_net, eval.m_grads, m_opt);
      } else {
        // E-step analogue: improve the class posterior with the error
        // head frozen, then M-step analogue: improve the error head with
        // the class posterior frozen.
        nn::step(model.e_net, eval.e_grads, e_opt);
        BatchEval m_eval = eval_batch(model, batch, config.kl_weight,
                                      config.detach_class_probs);
        nn::step(model.m_net, m_eval.m_grads, m_opt);
      }
    }

    stats.total_loss /= static_cast<double>(n);
    stats.l_exp /= static_cast<double>(n);
    stats.l_kl /= static_cast<double>(n);
    stats.env_accuracy =
        clean_total == 0 ? 0.0
                         : static_cast<double>(clean_correct) /
                               static_cast<double>(clean_total);
    history.epochs.push_back(stats);
  }
  return {std::move(model), std::move(history)};
}

double predict_error(const GemModel& model,
                     const std::vector<double>& raw_cir) {
  const std::vector<double> normalized =
      dataset::normalize_cir(raw_cir, model.norm_stats.scheme);
  const Eigen::VectorXd probs = e_net_forward(model, normalized);
  return m_net_forward(model, normalized, probs);
}

double mitigate(const GemModel& model, const std::vector<double>& raw_cir,
                double measured_distance_m) {
  return measured_distance_m - predict_error(model, raw_cir);
}

void save_model(const GemModel& model, const std::filesystem::path& path) {
  validate_model(model);
  nlohmann::json j = {
      {"type", "gem"},
      {"k_classes", model.k_classes},
      {"norm_scheme", std::string(dataset::to_string(model.norm_stats.scheme))},
      {"norm_degenerate_count", model.norm_stats.degenerate_count},
      {"e_net", detail::mlp_to_json(model.e_net)},
      {"m_net", detail::mlp_to_json(model.m_net)},
  };
  detail::write_file_atomic(path, j.dump(1) + "\n");
}

GemModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model " + path.string() + ": " + e.what());
  }
  if (j.value("type", "") != "gem") {
    throw ParseError("model " + path.string() + ": expected type \"gem\"");
  }
  GemModel model;
  model.k_classes = j.at("k_classes").get<int>();
  model.norm_stats.scheme =
      dataset::norm_scheme_from_string(j.at("norm_scheme").get<std::string>());
  model.norm_stats.degenerate_count = j.value("norm_degenerate_count", 0);
  model.e_net = detail::mlp_from_json(j.at("e_net"));
  model.m_net = detail::mlp_from_json(j.at("m_net"));
  validate_model(model);
  return model;
}

bool bitwise_equal(const GemModel& a, const GemModel& b) {
  return a.k_classes == b.k_classes &&
         a.norm_stats.scheme == b.norm_stats.scheme &&
         nn::bitwise_equal(a.e_net, b.e_net) &&
         nn::bitwise_equal(a.m_net, b.m_net);
}

}  // namespace uwbgem::gem
