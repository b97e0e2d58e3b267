// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_GEM_HPP_
#define UWBGEM_GEM_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "uwbgem/dataset.hpp"
#include "uwbgem/nn.hpp"

namespace uwbgem::gem {

/// The two-network mitigation model. The E-Net maps a normalized CIR to a
/// categorical distribution over environment classes; the M-Net maps the
/// CIR concatenated with those class probabilities to a ranging-error
/// estimate. Class probabilities are fed soft, keeping the whole objective
/// differentiable end to end.
struct GemModel {
  nn::Mlp e_net;  // cir -> K class logits
  nn::Mlp m_net;  // cir (+) class probs -> error estimate
  int k_classes = 2;
  dataset::NormStats norm_stats{dataset::NormScheme::per_sample_max, 0};
};

struct ModelConfig {
  int input_dim = dataset::kCirLength;
  std::vector<int> e_hidden{64, 32};
  std::vector<int> m_hidden{64, 32};
  int k_classes = 2;
  dataset::NormScheme norm_scheme = dataset::NormScheme::per_sample_max;
  std::uint64_t seed = 0;
};

GemModel make_model(const ModelConfig& config);

/// Throws ShapeError unless e_net/m_net dimensions chain as documented on
/// GemModel.
void validate_model(const GemModel& model);

/// joint: one step on the combined objective per batch. alternating: per
/// batch, first the E-Net updates on the full objective with the M-Net
/// frozen, then the M-Net updates on the error term with the E-Net frozen.
enum class UpdateMode { joint, alternating };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  nn::OptimizerConfig optimizer{};
  double kl_weight = 1.0;  // weight of the label cross-entropy term
  UpdateMode update_mode = UpdateMode::joint;
  // Treat class probabilities as constants inside the M-Net input, so no
  // gradient flows from the error term back into the E-Net.
  bool detach_class_probs = false;
  std::uint64_t seed = 0;
};

struct EpochStats {
  double total_loss = 0.0;
  double l_exp = 0.0;
  double l_kl = 0.0;
  double env_accuracy = 0.0;  // on clean training labels, diagnostics only
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

/// CSV: epoch,total_loss,l_exp,l_kl,env_acc
void save_history_csv(const TrainHistory& history,
                      const std::filesystem::path& path);

/// q(k | r): softmax of the E-Net logits. The CIR must already be
/// normalized with model.norm_stats.
Eigen::VectorXd e_net_forward(const GemModel& model,
                              const std::vector<double>& cir);

/// Ranging-error estimate given a normalized CIR and class probabilities.
double m_net_forward(const GemModel& model, const std::vector<double>& cir,
                     const Eigen::VectorXd& class_probs);

/// Squared error between a weak error label and the estimate.
double loss_exp(double err_label, double delta_d_hat);

/// Cross-entropy H(p||q) = -sum_j p_j log q_j between a prior label
/// distribution and the predicted one. Throws InvalidArgumentError when
/// either input deviates from a probability vector by more than 1e-6 or q
/// is not strictly positive.
double loss_kl(const Eigen::VectorXd& prior_probs,
               const Eigen::VectorXd& q_probs);

struct BatchObjective {
  double loss = 0.0;   // l_exp + kl_weight * l_kl
  double l_exp = 0.0;  // mean over the batch of the masked error term
  double l_kl = 0.0;   // mean over the batch of the masked label term
  nn::Gradients e_grads;
  nn::Gradients m_grads;
};

/// Mean over the batch of 1{err label present} * loss_exp +
/// kl_weight * 1{env label present} * loss_kl, with exact reverse-mode
/// gradients for both networks. Samples missing both labels contribute
/// zero. CIRs must be normalized. Throws InvalidArgumentError on an empty
/// batch.
BatchObjective batch_objective(const GemModel& model,
                               std::span<const dataset::Sample> batch,
                               double kl_weight,
                               bool detach_class_probs = false);

/// Minimizes the objective over the training set with seeded per-epoch
/// shuffling. The training set must already be corrupted (or clean) and
/// normalized with model.norm_stats. Deterministic given config.seed.
std::pair<GemModel, TrainHistory> train(GemModel model,
                                        const dataset::Dataset& train_set,
                                        const TrainConfig& config);

/// Error estimate for a raw (unnormalized) CIR; applies the stored
/// normalization before the forward passes.
double predict_error(const GemModel& model, const std::vector<double>& raw_cir);

/// Mitigated distance: measured minus the estimated ranging error.
double mitigate(const GemModel& model, const std::vector<double>& raw_cir,
                double measured_distance_m);

/// Checkpoints: one self-describing JSON file; load(save(m)) == m.
void save_model(const GemModel& model, const std::filesystem::path& path);
GemModel load_model(const std::filesystem::path& path);

bool bitwise_equal(const GemModel& a, const GemModel& b);

}  // namespace uwbgem::gem

#endif  // UWBGEM_GEM_HPP_
