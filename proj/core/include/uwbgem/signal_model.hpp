// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_SIGNAL_MODEL_HPP_
#define UWBGEM_SIGNAL_MODEL_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "uwbgem/dataset.hpp"

namespace uwbgem::signal_model {

/// Sampled transmit pulse, peak-normalized to 1.0. The peak sits at bin
/// length/2 (integer division).
struct PulseTemplate {
  std::vector<double> samples;
  double bin_duration_s = 1e-9;

  int length() const { return static_cast<int>(samples.size()); }
  int peak_index() const { return length() / 2; }
};

struct PathComponent {
  double gain = 1.0;    // amplitude of this propagation path
  double bias_m = 0.0;  // range bias; 0 for the direct LOS path
};

/// Ground truth for one synthetic measurement: the multipath geometry the
/// waveform is rendered from. env_class 0 = LOS (first path unbiased),
/// 1 = NLOS (every path biased).
struct ChannelScenario {
  double true_distance_m = 5.0;
  std::vector<PathComponent> paths;
  double noise_std = 0.0;  // std of additive Gaussian noise per bin
  int env_class = 0;
  double propagation_speed = 2.99792458e8;
};

struct SyntheticSample {
  std::vector<double> cir;  // magnitude per bin
  double measured_distance_m = 0.0;
  double true_distance_m = 0.0;
  double ranging_error_m = 0.0;  // measured - true, exactly
  int env_class = 0;
};

/// Everything generate_dataset needs to synthesize a labeled dataset.
/// Defaults give an unmitigated ranging RMSE in the half-meter range with
/// the error inferable from the waveform shape.
struct GeneratorConfig {
  int n_samples = 6000;
  double los_fraction = 0.5;
  std::pair<double, double> distance_range_m{2.0, 10.0};
  std::pair<double, double> nlos_bias_range_m{0.2, 1.5};
  std::pair<int, int> n_extra_paths_range{2, 6};
  double extra_path_gain_decay = 0.75;  // geometric decay of late paths
  // Ceiling low enough that receiver noise cannot fire the leading-edge
  // detector ahead of the first real path.
  std::pair<double, double> noise_std_range{0.001, 0.005};
  double leading_edge_threshold = 0.2;  // fraction of the peak amplitude
  std::uint64_t seed = 0;

  // Pulse shape; the waveform model is agnostic to the concrete pulse.
  double bandwidth_hz = 500e6;
  double bin_duration_s = 1e-9;
  int pulse_length = 9;
};

/// Gaussian envelope pulse: exp(-(t - t_c)^2 / (2 sigma^2)) with
/// sigma = 1 / (2 pi bandwidth), sampled per bin and peak-normalized.
PulseTemplate gaussian_pulse(double bandwidth_hz, double bin_duration_s,
                             int length);

/// Smallest bin index whose magnitude reaches threshold_ratio * max(cir).
/// Throws NoSignalError for an all-zero CIR.
int detect_leading_edge(std::span<const double> cir, double threshold_ratio);

/// Renders the waveform of one scenario: each path contributes
/// gain * pulse delayed by (d + bias)/c rounded to the nearest bin, plus
/// i.i.d. Gaussian noise; the stored CIR is the magnitude. The measured
/// distance comes from leading-edge detection on the noisy CIR.
/// Deterministic given seed.
SyntheticSample synthesize_cir(const ChannelScenario& scenario,
                               const PulseTemplate& pulse, int n_bins,
                               double bin_duration_s, std::uint64_t seed,
                               double leading_edge_threshold = 0.2);

/// Draws the multipath geometry for one sample. NLOS severity couples the
/// direct-path attenuation, the range bias, and the multipath spread, so
/// the rendered waveform carries recoverable evidence of the bias.
ChannelScenario sample_scenario(const GeneratorConfig& config, bool nlos,
                                std::uint64_t seed);

/// floor(los_fraction * n) LOS samples followed by NLOS ones, fully
/// labeled (quality clean on both labels), per-sample seeds derived from
/// config.seed. Bit-reproducible for a fixed config.
dataset::Dataset generate_dataset(const GeneratorConfig& config);

}  // namespace uwbgem::signal_model

#endif  // UWBGEM_SIGNAL_MODEL_HPP_
