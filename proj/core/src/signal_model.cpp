// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "uwbgem/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "uwbgem/errors.hpp"
#include "uwbgem/rng.hpp"

namespace uwbgem::signal_model {

namespace {

void require_config_valid(const GeneratorConfig& c) {
  auto ordered = [](auto range) { return range.first <= range.second; };
  if (c.n_samples < 0) {
    throw InvalidArgumentError("generator: n_samples must be >= 0");
  }
  if (!(c.los_fraction >= 0.0 && c.los_fraction <= 1.0)) {
    throw InvalidArgumentError("generator: los_fraction must be in [0,1]");
  }
  if (!ordered(c.distance_range_m) || c.distance_range_m.first <= 0.0) {
    throw InvalidArgumentError("generator: bad distance range");
  }
  if (!ordered(c.nlos_bias_range_m) || c.nlos_bias_range_m.first <= 0.0) {
    throw InvalidArgumentError("generator: NLOS bias range must be positive");
  }
  if (!ordered(c.n_extra_paths_range) || c.n_extra_paths_range.first < 0) {
    throw InvalidArgumentError("generator: bad extra path range");
  }
  if (!(c.extra_path_gain_decay > 0.0 && c.extra_path_gain_decay <= 1.0)) {
    throw InvalidArgumentError("generator: gain decay must be in (0,1]");
  }
  if (!ordered(c.noise_std_range) || c.noise_std_range.first < 0.0) {
    throw InvalidArgumentError("generator: bad noise range");
  }
  if (!(c.leading_edge_threshold > 0.0 && c.leading_edge_threshold < 1.0)) {
    throw InvalidArgumentError("generator: edge threshold must be in (0,1)");
  }
}

}  // namespace

PulseTemplate gaussian_pulse(double bandwidth_hz, double bin_duration_s,
                             int length) {
  if (!(bandwidth_hz > 0.0)) {
    throw InvalidArgumentError("gaussian_pulse: bandwidth must be > 0");
  }
  if (!(bin_duration_s > 0.0)) {
    throw InvalidArgumentError("gaussian_pulse: bin duration must be > 0");
  }
  if (length < 3) {
    throw InvalidArgumentError("gaussian_pulse: length must be >= 3");
  }

  const double sigma = 1.0 / (2.0 * std::numbers::pi * bandwidth_hz);
  const int center = length / 2;
  PulseTemplate pulse;
  pulse.bin_duration_s = bin_duration_s;
  pulse.samples.resize(length);
  for (int i = 0; i < length; ++i) {
    const double dt = (i - center) * bin_duration_s;
    pulse.samples[i] = std::exp(-dt * dt / (2.0 * sigma * sigma));
  }
  return pulse;  // exp(0) = 1 at the center bin, already peak-normalized
}

int detect_leading_edge(std::span<const double> cir, double threshold_ratio) {
  if (cir.empty()) {
    throw InvalidArgumentError("detect_leading_edge: empty CIR");
  }
  if (!(threshold_ratio > 0.0 && threshold_ratio < 1.0)) {
    throw InvalidArgumentError(
        "detect_leading_edge: threshold_ratio must be in (0,1)");
  }
  const double peak = *std::max_element(cir.begin(), cir.end());
  if (peak <= 0.0) {
    throw NoSignalError("detect_leading_edge: all-zero CIR");
  }
  const double threshold = threshold_ratio * peak;
  for (std::size_t b = 0; b < cir.size(); ++b) {
    if (cir[b] >= threshold) return static_cast<int>(b);
  }
  throw NoSignalError("detect_leading_edge: no crossing found");
}

SyntheticSample synthesize_cir(const ChannelScenario& scenario,
                               const PulseTemplate& pulse, int n_bins,
                               double bin_duration_s, std::uint64_t seed,
                               double leading_edge_threshold) {
  if (scenario.paths.empty()) {
    throw InvalidArgumentError("synthesize_cir: scenario has no paths");
  }
  if (!(scenario.true_distance_m > 0.0)) {
    throw InvalidArgumentError("synthesize_cir: true distance must be > 0");
  }
  if (n_bins < 1 || pulse.length() < 1 || pulse.length() > n_bins) {
    throw InvalidArgumentError(
        "synthesize_cir: pulse length must be in [1, n_bins]");
  }
  if (!(bin_duration_s > 0.0)) {
    throw InvalidArgumentError("synthesize_cir: bin duration must be > 0");
  }

  const double c = scenario.propagation_speed;
  std::vector<double> field(n_bins, 0.0);
  for (const PathComponent& path : scenario.paths) {
    if (path.bias_m < 0.0) {
      throw InvalidArgumentError("synthesize_cir: negative range bias");
    }
    const double tau = (scenario.true_distance_m + path.bias_m) / c;
    const long peak_bin = std::lround(tau / bin_duration_s);
    if (peak_bin < 0 || peak_bin >= n_bins) {
      throw OutOfWindowError("synthesize_cir: path delay " +
                             std::to_string(tau) + " s outside window");
    }
    // Pulse tails that fall outside the window are truncated.
    for (int j = 0; j < pulse.length(); ++j) {
      const long b = peak_bin + j - pulse.peak_index();
      if (b < 0 || b >= n_bins) continue;
      field[static_cast<std::size_t>(b)] += path.gain * pulse.samples[j];
    }
  }

  SyntheticSample out;
  out.cir.resize(n_bins);
  if (scenario.noise_std > 0.0) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, scenario.noise_std);
    for (int b = 0; b < n_bins; ++b) {
      out.cir[b] = std::abs(field[b] + noise(rng));
    }
  } else {
    for (int b = 0; b < n_bins; ++b) {
      out.cir[b] = std::abs(field[b]);
    }
  }

  const int edge_bin = detect_leading_edge(out.cir, leading_edge_threshold);
  out.measured_distance_m = c * (edge_bin * bin_duration_s);
  out.true_distance_m = scenario.true_distance_m;
  out.ranging_error_m = out.measured_distance_m - out.true_distance_m;
  out.env_class = scenario.env_class;
  return out;
}

ChannelScenario sample_scenario(const GeneratorConfig& config, bool nlos,
                                std::uint64_t seed) {
  auto rng = make_rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
  };

  ChannelScenario scenario;
  scenario.env_class = nlos ? 1 : 0;
  scenario.true_distance_m =
      uniform(config.distance_range_m.first, config.distance_range_m.second);
  scenario.noise_std =
      uniform(config.noise_std_range.first, config.noise_std_range.second);

  std::uniform_int_distribution<int> extra_dist(config.n_extra_paths_range.first,
                                                config.n_extra_paths_range.second);
  const int n_extra = extra_dist(rng);

  if (!nlos) {
    // Direct path at full strength and zero bias; a light tail of weak
    // reflections behind it.
    scenario.paths.push_back({1.0, 0.0});
    double bias = 0.0;
    for (int j = 1; j <= n_extra; ++j) {
      bias += uniform(0.1, 0.5);
      const double gain =
          uniform(0.2, 0.6) * std::pow(config.extra_path_gain_decay, j);
      scenario.paths.push_back({gain, bias});
    }
    return scenario;
  }

  // NLOS severity couples everything observable: a heavier obstruction
  // attenuates the direct path more, biases it further, and spreads the
  // reflected energy over a longer excess delay.
  const double severity = uniform(0.0, 1.0);
  const double bias_lo = config.nlos_bias_range_m.first;
  const double bias_hi = config.nlos_bias_range_m.second;
  const double direct_bias = bias_lo + severity * (bias_hi - bias_lo);
  const double direct_gain = 0.5 - 0.4 * severity;
  scenario.paths.push_back({direct_gain, direct_bias});
  for (int j = 1; j <= n_extra; ++j) {
    const double fraction = static_cast<double>(j) / n_extra;
    const double bias =
        direct_bias * (1.0 + 1.2 * fraction * uniform(0.7, 1.3));
    const double gain = direct_gain * uniform(0.8, 1.6) *
                        std::pow(config.extra_path_gain_decay, j);
    scenario.paths.push_back({gain, bias});
  }
  return scenario;
}

dataset::Dataset generate_dataset(const GeneratorConfig& config) {
  require_config_valid(config);

  const PulseTemplate pulse =
      gaussian_pulse(config.bandwidth_hz, config.bin_duration_s,
                     config.pulse_length);
  const auto n = static_cast<std::size_t>(config.n_samples);
  const auto n_los = static_cast<std::size_t>(
      std::floor(config.los_fraction * static_cast<double>(n)));

  dataset::Dataset out;
  out.k_classes = 2;
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool nlos = i >= n_los;
    const ChannelScenario scenario =
        sample_scenario(config, nlos, derive_seed(config.seed, 2 * i));
    const SyntheticSample synth = synthesize_cir(
        scenario, pulse, dataset::kCirLength, config.bin_duration_s,
        derive_seed(config.seed, 2 * i + 1), config.leading_edge_threshold);

    dataset::Sample sample;
    sample.id = static_cast<std::int64_t>(i);
    sample.cir = synth.cir;
    sample.env_label = synth.env_class;
    sample.env_quality = dataset::LabelQuality::clean;
    sample.err_label = synth.ranging_error_m;
    sample.err_quality = dataset::LabelQuality::clean;
    sample.true_err = synth.ranging_error_m;
    sample.measured_distance_m = synth.measured_distance_m;
    out.samples.push_back(std::move(sample));
  }
  return out;
}

}  // namespace uwbgem::signal_model
