// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_DATASET_HPP_
#define UWBGEM_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uwbgem::dataset {

/// CIR length used throughout: magnitude of the channel impulse response,
/// one amplitude per delay bin.
inline constexpr int kCirLength = 152;

/// Provenance of one label. Evaluation-side metadata only: training code
/// may branch on label presence, never on clean-vs-polluted.
enum class LabelQuality { clean, flipped, noisy, substituted, missing };

std::string_view to_string(LabelQuality q);
LabelQuality label_quality_from_string(std::string_view s);

/// One ranging measurement: CIR magnitudes plus (possibly weak) labels.
/// env_label is the environment class (0 = LOS, 1 = NLOS by convention),
/// err_label the ranging error in meters. true_err is held-out ground
/// truth for evaluation and is never touched by corruption.
struct Sample {
  std::int64_t id = 0;
  std::vector<double> cir;
  std::optional<int> env_label;
  LabelQuality env_quality = LabelQuality::missing;
  std::optional<double> err_label;
  LabelQuality err_quality = LabelQuality::missing;
  std::optional<double> true_err;
  std::optional<double> measured_distance_m;
};

struct Dataset {
  std::vector<Sample> samples;
  int k_classes = 2;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Checks ids unique, K >= 2, CIR arity, label/quality consistency.
  /// Throws InvalidArgumentError naming the first offending sample.
  void validate() const;
};

enum class EnvPollution { delete_label, flip, substitute };
enum class ErrPollution { delete_label, noise, substitute };

/// Supervision rates and pollution modes for corrupt_labels. eta is the
/// fraction of samples whose label of that kind stays clean.
struct WeakLabelConfig {
  double eta_k = 1.0;
  double eta_e = 1.0;
  std::vector<EnvPollution> env_modes{EnvPollution::delete_label,
                                      EnvPollution::flip,
                                      EnvPollution::substitute};
  std::vector<ErrPollution> err_modes{ErrPollution::delete_label,
                                      ErrPollution::noise,
                                      ErrPollution::substitute};
  double err_noise_std_m = 0.3;
  std::uint64_t seed = 0;
};

/// CSV schema, one sample per row, header required:
///   id,env_label,env_quality,err_label,err_quality,true_err,
///   measured_distance_m,cir_0,...,cir_151
/// Absent optionals serialize as empty strings; floats as decimal with up
/// to 9 significant digits.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Seeded shuffle, then first floor(train_fraction*n) samples to train.
/// The two parts are disjoint and exhaustive.
std::pair<Dataset, Dataset> split(const Dataset& dataset,
                                  double train_fraction, std::uint64_t seed);

/// Applies the weak-supervision protocol: exactly round(eta_k*n) samples
/// keep clean environment labels and, independently, round(eta_e*n) keep
/// clean error labels; every other label is polluted with a mode drawn
/// uniformly from the configured set. Input labels must all be clean
/// (corruption is applied once). Deterministic given config.seed.
Dataset corrupt_labels(const Dataset& dataset, const WeakLabelConfig& config);

enum class NormScheme { per_sample_max, per_sample_energy, none };

std::string_view to_string(NormScheme s);
NormScheme norm_scheme_from_string(std::string_view s);

/// Records how a dataset was normalized so inference can replay the same
/// transform on raw CIRs. degenerate_count flags all-zero CIRs that were
/// left unchanged.
struct NormStats {
  NormScheme scheme = NormScheme::none;
  int degenerate_count = 0;
};

std::pair<Dataset, NormStats> normalize_cirs(const Dataset& dataset,
                                             NormScheme scheme);

/// Single-CIR version of the same transform, for inference-time replay.
std::vector<double> normalize_cir(const std::vector<double>& cir,
                                  NormScheme scheme);

}  // namespace uwbgem::dataset

#endif  // UWBGEM_DATASET_HPP_
