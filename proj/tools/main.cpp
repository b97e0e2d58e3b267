// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "uwbgem/errors.hpp"

namespace {

using namespace uwbgem;

dataset::NormScheme parse_norm(const std::string& s) {
  return dataset::norm_scheme_from_string(s);
}

std::vector<dataset::EnvPollution> parse_env_modes(
    const std::vector<std::string>& names) {
  std::vector<dataset::EnvPollution> modes;
  for (const auto& name : names) {
    if (name == "delete") modes.push_back(dataset::EnvPollution::delete_label);
    else if (name == "flip") modes.push_back(dataset::EnvPollution::flip);
    else if (name == "substitute")
      modes.push_back(dataset::EnvPollution::substitute);
    else
      throw InvalidArgumentError("unknown env pollution mode: " + name);
  }
  return modes;
}

std::vector<dataset::ErrPollution> parse_err_modes(
    const std::vector<std::string>& names) {
  std::vector<dataset::ErrPollution> modes;
  for (const auto& name : names) {
    if (name == "delete") modes.push_back(dataset::ErrPollution::delete_label);
    else if (name == "noise") modes.push_back(dataset::ErrPollution::noise);
    else if (name == "substitute")
      modes.push_back(dataset::ErrPollution::substitute);
    else
      throw InvalidArgumentError("unknown err pollution mode: " + name);
  }
  return modes;
}

nn::OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return nn::OptimizerKind::sgd;
  if (s == "adam") return nn::OptimizerKind::adam;
  throw InvalidArgumentError("unknown optimizer: " + s);
}

gem::UpdateMode parse_update_mode(const std::string& s) {
  if (s == "joint") return gem::UpdateMode::joint;
  if (s == "alternating") return gem::UpdateMode::alternating;
  throw InvalidArgumentError("unknown update mode: " + s);
}

void add_train_flags(CLI::App* cmd, gem::TrainConfig& train,
                     std::string& optimizer, std::string& mode,
                     std::string& norm) {
  cmd->add_option("--epochs", train.epochs, "Training epochs");
  cmd->add_option("--batch-size", train.batch_size, "Minibatch size");
  cmd->add_option("--lr", train.optimizer.learning_rate, "Learning rate");
  cmd->add_option("--lambda", train.kl_weight,
                  "Weight of the label cross-entropy term");
  cmd->add_option("--optimizer", optimizer, "sgd or adam");
  cmd->add_option("--mode", mode, "joint or alternating updates");
  cmd->add_flag("--detach-probs", train.detach_class_probs,
                "Block gradients from the error term into the E-Net");
  cmd->add_option("--norm", norm,
                  "CIR normalization: per_sample_max, per_sample_energy, none");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "uwbgem: weakly supervised UWB ranging error mitigation\n"
      "Pipeline: synth -> corrupt -> train -> eval, or sweep for "
      "supervision-rate grids."};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from a key=value file (flags override)");

  // ---- synth ----------------------------------------------------------
  cli::SynthOptions synth;
  auto* synth_cmd =
      app.add_subcommand("synth", "Generate a labeled synthetic dataset");
  synth_cmd->add_option("--n", synth.generator.n_samples, "Sample count");
  synth_cmd->add_option("--los-fraction", synth.generator.los_fraction,
                        "Fraction of LOS samples");
  synth_cmd->add_option("--distance-min", synth.generator.distance_range_m.first,
                        "Min true distance [m]");
  synth_cmd->add_option("--distance-max",
                        synth.generator.distance_range_m.second,
                        "Max true distance [m]");
  synth_cmd->add_option("--bias-min", synth.generator.nlos_bias_range_m.first,
                        "Min NLOS range bias [m]");
  synth_cmd->add_option("--bias-max", synth.generator.nlos_bias_range_m.second,
                        "Max NLOS range bias [m]");
  synth_cmd->add_option("--extra-paths-min",
                        synth.generator.n_extra_paths_range.first,
                        "Min extra multipath components");
  synth_cmd->add_option("--extra-paths-max",
                        synth.generator.n_extra_paths_range.second,
                        "Max extra multipath components");
  synth_cmd->add_option("--gain-decay", synth.generator.extra_path_gain_decay,
                        "Geometric gain decay of late paths");
  synth_cmd->add_option("--noise-min", synth.generator.noise_std_range.first,
                        "Min per-bin noise std");
  synth_cmd->add_option("--noise-max", synth.generator.noise_std_range.second,
                        "Max per-bin noise std");
  synth_cmd->add_option("--edge-threshold",
                        synth.generator.leading_edge_threshold,
                        "Leading-edge threshold as a fraction of the peak");
  synth_cmd->add_option("--bandwidth", synth.generator.bandwidth_hz,
                        "Pulse bandwidth [Hz]");
  synth_cmd->add_option("--bin-duration", synth.generator.bin_duration_s,
                        "CIR bin duration [s]");
  synth_cmd->add_option("--pulse-length", synth.generator.pulse_length,
                        "Pulse template length [bins]");
  synth_cmd->add_option("--seed", synth.generator.seed, "RNG seed");
  synth_cmd->add_option("--out", synth.out, "Output CSV path")->required();
  synth_cmd->callback([&] { cli::cmd_synth(synth); });

  // ---- corrupt --------------------------------------------------------
  cli::CorruptOptions corrupt;
  std::vector<std::string> env_mode_names{"delete", "flip", "substitute"};
  std::vector<std::string> err_mode_names{"delete", "noise", "substitute"};
  auto* corrupt_cmd = app.add_subcommand(
      "corrupt", "Apply the weak-supervision label pollution protocol");
  corrupt_cmd->add_option("--in", corrupt.in, "Input dataset CSV")->required();
  corrupt_cmd->add_option("--out", corrupt.out, "Output CSV path")->required();
  corrupt_cmd->add_option("--eta-k", corrupt.weak.eta_k,
                          "Environment-label supervision rate");
  corrupt_cmd->add_option("--eta-e", corrupt.weak.eta_e,
                          "Error-label supervision rate");
  corrupt_cmd->add_option("--env-modes", env_mode_names,
                          "Env pollution modes (delete,flip,substitute)")
      ->delimiter(',');
  corrupt_cmd->add_option("--err-modes", err_mode_names,
                          "Err pollution modes (delete,noise,substitute)")
      ->delimiter(',');
  corrupt_cmd->add_option("--err-noise-std", corrupt.weak.err_noise_std_m,
                          "Std of the noise pollution mode [m]");
  corrupt_cmd->add_option("--seed", corrupt.weak.seed, "RNG seed");
  corrupt_cmd->callback([&] {
    corrupt.weak.env_modes = parse_env_modes(env_mode_names);
    corrupt.weak.err_modes = parse_err_modes(err_mode_names);
    cli::cmd_corrupt(corrupt);
  });

  // ---- train ----------------------------------------------------------
  cli::TrainOptions train;
  std::string train_optimizer = "adam";
  std::string train_mode = "joint";
  std::string train_norm = "per_sample_max";
  std::filesystem::path history_out, baseline_out;
  auto* train_cmd =
      app.add_subcommand("train", "Train the two-network mitigation model");
  train_cmd->add_option("--train", train.train_csv, "Training dataset CSV")
      ->required();
  train_cmd->add_option("--out", train.model_out, "Model checkpoint path")
      ->required();
  train_cmd->add_option("--history", history_out,
                        "Optional per-epoch loss CSV");
  train_cmd->add_option("--baseline-out", baseline_out,
                        "Also fit and save the feature baseline");
  train_cmd->add_option("--e-hidden", train.model.e_hidden,
                        "E-Net hidden layer sizes")
      ->delimiter(',');
  train_cmd->add_option("--m-hidden", train.model.m_hidden,
                        "M-Net hidden layer sizes")
      ->delimiter(',');
  train_cmd->add_option("--k-classes", train.model.k_classes,
                        "Number of environment classes");
  add_train_flags(train_cmd, train.train, train_optimizer, train_mode,
                  train_norm);
  train_cmd->add_option("--baseline-gamma", train.baseline_gamma,
                        "Baseline kernel bandwidth");
  train_cmd->add_option("--baseline-ridge", train.baseline_ridge,
                        "Baseline ridge parameter");
  train_cmd->add_option("--bin-duration", train.bin_duration_s,
                        "CIR bin duration [s] (baseline features)");
  train_cmd->add_option("--seed", train.train.seed, "RNG seed");
  train_cmd->callback([&] {
    train.train.optimizer.kind = parse_optimizer(train_optimizer);
    train.train.update_mode = parse_update_mode(train_mode);
    train.model.norm_scheme = parse_norm(train_norm);
    train.model.seed = train.train.seed;
    if (!history_out.empty()) train.history_out = history_out;
    if (!baseline_out.empty()) train.baseline_out = baseline_out;
    cli::cmd_train(train);
  });

  // ---- eval -----------------------------------------------------------
  cli::EvalOptions eval_opt;
  std::filesystem::path baseline_model;
  auto* eval_cmd = app.add_subcommand(
      "eval", "Evaluate models on a test dataset and emit report CSVs");
  eval_cmd->add_option("--model", eval_opt.model_path, "Model checkpoint")
      ->required();
  eval_cmd->add_option("--baseline-model", baseline_model,
                       "Optional baseline checkpoint");
  eval_cmd->add_option("--test", eval_opt.test_csv, "Test dataset CSV")
      ->required();
  eval_cmd->add_option("--report-dir", eval_opt.report_dir,
                       "Report output directory")
      ->required();
  eval_cmd->add_option("--bin-duration", eval_opt.bin_duration_s,
                       "CIR bin duration [s] (baseline features)");
  eval_cmd->add_option("--repetitions", eval_opt.benchmark_repetitions,
                       "Latency benchmark repetitions (0 disables)");
  eval_cmd->callback([&] {
    if (!baseline_model.empty()) eval_opt.baseline_path = baseline_model;
    cli::cmd_eval(eval_opt);
  });

  // ---- sweep ----------------------------------------------------------
  cli::SweepOptions sweep;
  std::string sweep_optimizer = "adam";
  std::string sweep_mode = "joint";
  std::string sweep_norm = "per_sample_max";
  std::vector<std::string> sweep_env_modes{"delete", "flip", "substitute"};
  std::vector<std::string> sweep_err_modes{"delete", "noise", "substitute"};
  bool no_baseline = false;
  std::uint64_t sweep_seed = 1;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Supervision-rate grid: corrupt, train, evaluate per cell");
  sweep_cmd->add_option("--data", sweep.data_csv, "Base dataset CSV")
      ->required();
  sweep_cmd->add_option("--report-dir", sweep.report_dir,
                        "Report output directory")
      ->required();
  sweep_cmd->add_option("--eta-k", sweep.sweep.eta_k_grid,
                        "Environment supervision rates")
      ->delimiter(',');
  sweep_cmd->add_option("--eta-e", sweep.sweep.eta_e_grid,
                        "Error supervision rates")
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.sweep.seeds,
                        "Per-cell training seeds")
      ->delimiter(',');
  sweep_cmd->add_option("--seed", sweep_seed,
                        "Shorthand for --seeds with one entry");
  sweep_cmd->add_option("--train-fraction", sweep.sweep.train_fraction,
                        "Train split fraction");
  sweep_cmd->add_option("--split-seed", sweep.sweep.split_seed,
                        "Train/test split seed");
  sweep_cmd->add_option("--env-modes", sweep_env_modes,
                        "Env pollution modes")
      ->delimiter(',');
  sweep_cmd->add_option("--err-modes", sweep_err_modes,
                        "Err pollution modes")
      ->delimiter(',');
  sweep_cmd->add_option("--err-noise-std", sweep.sweep.err_noise_std_m,
                        "Std of the noise pollution mode [m]");
  add_train_flags(sweep_cmd, sweep.sweep.train, sweep_optimizer, sweep_mode,
                  sweep_norm);
  sweep_cmd->add_option("--e-hidden", sweep.sweep.model.e_hidden,
                        "E-Net hidden layer sizes")
      ->delimiter(',');
  sweep_cmd->add_option("--m-hidden", sweep.sweep.model.m_hidden,
                        "M-Net hidden layer sizes")
      ->delimiter(',');
  sweep_cmd->add_flag("--no-baseline", no_baseline,
                      "Skip the fully supervised baseline row");
  sweep_cmd->add_option("--baseline-gamma", sweep.sweep.baseline_gamma,
                        "Baseline kernel bandwidth");
  sweep_cmd->add_option("--baseline-ridge", sweep.sweep.baseline_ridge,
                        "Baseline ridge parameter");
  sweep_cmd->add_option("--bin-duration", sweep.sweep.bin_duration_s,
                        "CIR bin duration [s]");
  sweep_cmd->add_option("--repetitions", sweep.sweep.benchmark_repetitions,
                        "Latency benchmark repetitions (0 disables)");
  sweep_cmd->callback([&] {
    sweep.sweep.train.optimizer.kind = parse_optimizer(sweep_optimizer);
    sweep.sweep.train.update_mode = parse_update_mode(sweep_mode);
    sweep.sweep.model.norm_scheme = parse_norm(sweep_norm);
    sweep.sweep.env_modes = parse_env_modes(sweep_env_modes);
    sweep.sweep.err_modes = parse_err_modes(sweep_err_modes);
    sweep.sweep.include_baseline = !no_baseline;
    if (sweep.sweep.seeds.empty() || sweep_cmd->count("--seed") > 0) {
      if (sweep_cmd->count("--seeds") == 0) {
        sweep.sweep.seeds = {sweep_seed};
      }
    }
    cli::cmd_sweep(sweep);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
