// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#include "uwbgem/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "io_util.hpp"
#include "uwbgem/errors.hpp"
#include "uwbgem/rng.hpp"

namespace uwbgem::dataset {

namespace {

constexpr std::string_view kHeaderPrefix =
    "id,env_label,env_quality,err_label,err_quality,true_err,"
    "measured_distance_m";
constexpr int kFixedColumns = 7;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double_field(std::string_view field, std::size_t line_no,
                          std::string_view column) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto result = std::from_chars(field.data(), end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": column " +
                     std::string(column) + ": not a number: \"" +
                     std::string(field) + "\"");
  }
  return value;
}

std::int64_t parse_int_field(std::string_view field, std::size_t line_no,
                             std::string_view column) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto result = std::from_chars(field.data(), end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": column " +
                     std::string(column) + ": not an integer: \"" +
                     std::string(field) + "\"");
  }
  return value;
}

}  // namespace

std::string_view to_string(LabelQuality q) {
  switch (q) {
    case LabelQuality::clean: return "clean";
    case LabelQuality::flipped: return "flipped";
    case LabelQuality::noisy: return "noisy";
    case LabelQuality::substituted: return "substituted";
    case LabelQuality::missing: return "missing";
  }
  throw InvalidArgumentError("unknown label quality");
}

LabelQuality label_quality_from_string(std::string_view s) {
  if (s == "clean") return LabelQuality::clean;
  if (s == "flipped") return LabelQuality::flipped;
  if (s == "noisy") return LabelQuality::noisy;
  if (s == "substituted") return LabelQuality::substituted;
  if (s == "missing") return LabelQuality::missing;
  throw ParseError("unknown label quality: \"" + std::string(s) + "\"");
}

std::string_view to_string(NormScheme s) {
  switch (s) {
    case NormScheme::per_sample_max: return "per_sample_max";
    case NormScheme::per_sample_energy: return "per_sample_energy";
    case NormScheme::none: return "none";
  }
  throw InvalidArgumentError("unknown normalization scheme");
}

NormScheme norm_scheme_from_string(std::string_view s) {
  if (s == "per_sample_max") return NormScheme::per_sample_max;
  if (s == "per_sample_energy") return NormScheme::per_sample_energy;
  if (s == "none") return NormScheme::none;
  throw ParseError("unknown normalization scheme: \"" + std::string(s) + "\"");
}

void Dataset::validate() const {
  if (k_classes < 2) {
    throw InvalidArgumentError("dataset: k_classes must be >= 2");
  }
  std::set<std::int64_t> ids;
  for (const Sample& s : samples) {
    const std::string tag = "sample id " + std::to_string(s.id);
    if (!ids.insert(s.id).second) {
      throw InvalidArgumentError("dataset: duplicate " + tag);
    }
    if (static_cast<int>(s.cir.size()) != kCirLength) {
      throw InvalidArgumentError("dataset: " + tag + ": CIR has " +
                                 std::to_string(s.cir.size()) +
                                 " bins, expected " +
                                 std::to_string(kCirLength));
    }
    for (double v : s.cir) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidArgumentError("dataset: " + tag +
                                   ": CIR entries must be finite and >= 0");
      }
    }
    if (s.env_label.has_value() !=
        (s.env_quality != LabelQuality::missing)) {
      throw InvalidArgumentError("dataset: " + tag +
                                 ": env label/quality inconsistent");
    }
    if (s.err_label.has_value() !=
        (s.err_quality != LabelQuality::missing)) {
      throw InvalidArgumentError("dataset: " + tag +
                                 ": err label/quality inconsistent");
    }
    if (s.env_quality == LabelQuality::noisy) {
      throw InvalidArgumentError("dataset: " + tag +
                                 ": env labels cannot be 'noisy'");
    }
    if (s.err_quality == LabelQuality::flipped) {
      throw InvalidArgumentError("dataset: " + tag +
                                 ": err labels cannot be 'flipped'");
    }
    if (s.env_label && (*s.env_label < 0 || *s.env_label >= k_classes)) {
      throw InvalidArgumentError("dataset: " + tag + ": env label " +
                                 std::to_string(*s.env_label) +
                                 " outside [0, " +
                                 std::to_string(k_classes) + ")");
    }
  }
}

Dataset load_csv(const std::filesystem::path& path) {
  const std::string content = detail::read_file(path);

  Dataset dataset;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  int max_env_label = -1;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;

    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.substr(0, kHeaderPrefix.size()) != kHeaderPrefix) {
        throw ParseError("line 1: unexpected header");
      }
      continue;
    }

    const auto fields = split_line(line);
    if (static_cast<int>(fields.size()) != kFixedColumns + kCirLength) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(kFixedColumns + kCirLength) +
                       " columns, got " + std::to_string(fields.size()));
    }

    Sample s;
    s.id = parse_int_field(fields[0], line_no, "id");
    if (!fields[1].empty()) {
      s.env_label = static_cast<int>(parse_int_field(fields[1], line_no,
                                                     "env_label"));
      max_env_label = std::max(max_env_label, *s.env_label);
    }
    try {
      s.env_quality = label_quality_from_string(fields[2]);
      s.err_quality = label_quality_from_string(fields[4]);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!fields[3].empty()) {
      s.err_label = parse_double_field(fields[3], line_no, "err_label");
    }
    if (!fields[5].empty()) {
      s.true_err = parse_double_field(fields[5], line_no, "true_err");
    }
    if (!fields[6].empty()) {
      s.measured_distance_m =
          parse_double_field(fields[6], line_no, "measured_distance_m");
    }
    s.cir.resize(kCirLength);
    for (int b = 0; b < kCirLength; ++b) {
      s.cir[b] = parse_double_field(fields[kFixedColumns + b], line_no,
                                    "cir_" + std::to_string(b));
    }
    dataset.samples.push_back(std::move(s));
  }

  dataset.k_classes = std::max(2, max_env_label + 1);
  dataset.validate();
  return dataset;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::string out;
  out.reserve(64 + dataset.samples.size() * (kCirLength + 7) * 12);
  out += kHeaderPrefix;
  for (int b = 0; b < kCirLength; ++b) {
    out += ",cir_";
    out += std::to_string(b);
  }
  out += '\n';

  for (const Sample& s : dataset.samples) {
    out += std::to_string(s.id);
    out += ',';
    if (s.env_label) out += std::to_string(*s.env_label);
    out += ',';
    out += to_string(s.env_quality);
    out += ',';
    if (s.err_label) out += format_double(*s.err_label);
    out += ',';
    out += to_string(s.err_quality);
    out += ',';
    if (s.true_err) out += format_double(*s.true_err);
    out += ',';
    if (s.measured_distance_m) out += format_double(*s.measured_distance_m);
    for (double v : s.cir) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset,
                                  double train_fraction, std::uint64_t seed) {
  if (dataset.empty()) {
    throw InvalidArgumentError("split: dataset is empty");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgumentError("split: train_fraction must be in (0,1)");
  }

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(n)));

  Dataset train{{}, dataset.k_classes};
  Dataset test{{}, dataset.k_classes};
  train.samples.reserve(n_train);
  test.samples.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).samples.push_back(dataset.samples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

Dataset corrupt_labels(const Dataset& dataset, const WeakLabelConfig& config) {
  if (!(config.eta_k >= 0.0 && config.eta_k <= 1.0) ||
      !(config.eta_e >= 0.0 && config.eta_e <= 1.0)) {
    throw InvalidArgumentError("corrupt_labels: eta must be in [0,1]");
  }
  if (config.env_modes.empty() || config.err_modes.empty()) {
    throw InvalidArgumentError("corrupt_labels: mode sets must be non-empty");
  }
  const bool noise_enabled =
      std::find(config.err_modes.begin(), config.err_modes.end(),
                ErrPollution::noise) != config.err_modes.end();
  if (noise_enabled && !(config.err_noise_std_m > 0.0)) {
    throw InvalidArgumentError(
        "corrupt_labels: err_noise_std_m must be > 0 with noise mode");
  }
  for (const Sample& s : dataset.samples) {
    if (s.env_quality != LabelQuality::clean ||
        s.err_quality != LabelQuality::clean) {
      throw InvalidArgumentError(
          "corrupt_labels: input labels must all be clean (id " +
          std::to_string(s.id) + ")");
    }
  }

  const std::size_t n = dataset.size();
  const auto n_env_clean = static_cast<std::size_t>(
      std::lround(config.eta_k * static_cast<double>(n)));
  const auto n_err_clean = static_cast<std::size_t>(
      std::lround(config.eta_e * static_cast<double>(n)));

  // Independent streams for the two label kinds, so the clean-env and
  // clean-err subsets are drawn independently of each other.
  auto rng_env = make_rng(derive_seed(config.seed, 0xE5));
  auto rng_err = make_rng(derive_seed(config.seed, 0xE6));

  auto pick_clean = [n](std::mt19937_64& rng, std::size_t n_clean) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> clean(n, false);
    for (std::size_t i = 0; i < n_clean; ++i) clean[order[i]] = true;
    return clean;
  };
  const std::vector<bool> env_clean = pick_clean(rng_env, n_env_clean);
  const std::vector<bool> err_clean = pick_clean(rng_err, n_err_clean);

  Dataset out = dataset;
  std::uniform_int_distribution<std::size_t> env_mode_dist(
      0, config.env_modes.size() - 1);
  std::uniform_int_distribution<std::size_t> err_mode_dist(
      0, config.err_modes.size() - 1);
  // Uniform over the other samples; with n == 1 substitution degenerates
  // to keeping the own value (there is no other sample to draw from).
  auto draw_other = [n](std::mt19937_64& rng, std::size_t self) {
    if (n == 1) return self;
    std::uniform_int_distribution<std::size_t> dist(0, n - 2);
    std::size_t j = dist(rng);
    if (j >= self) ++j;
    return j;
  };

  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = out.samples[i];
    if (!env_clean[i]) {
      switch (config.env_modes[env_mode_dist(rng_env)]) {
        case EnvPollution::delete_label:
          s.env_label.reset();
          s.env_quality = LabelQuality::missing;
          break;
        case EnvPollution::flip:
          s.env_label = (*s.env_label + 1) % dataset.k_classes;
          s.env_quality = LabelQuality::flipped;
          break;
        case EnvPollution::substitute:
          s.env_label = dataset.samples[draw_other(rng_env, i)].env_label;
          s.env_quality = LabelQuality::substituted;
          break;
      }
    }
    if (!err_clean[i]) {
      switch (config.err_modes[err_mode_dist(rng_err)]) {
        case ErrPollution::delete_label:
          s.err_label.reset();
          s.err_quality = LabelQuality::missing;
          break;
        case ErrPollution::noise: {
          std::normal_distribution<double> dist(0.0, config.err_noise_std_m);
          s.err_label = *s.err_label + dist(rng_err);
          s.err_quality = LabelQuality::noisy;
          break;
        }
        case ErrPollution::substitute:
          s.err_label = dataset.samples[draw_other(rng_err, i)].err_label;
          s.err_quality = LabelQuality::substituted;
          break;
      }
    }
  }
  return out;
}

std::pair<Dataset, NormStats> normalize_cirs(const Dataset& dataset,
                                             NormScheme scheme) {
  Dataset out = dataset;
  NormStats stats{scheme, 0};
  if (scheme == NormScheme::none) {
    return {std::move(out), stats};
  }
  for (Sample& s : out.samples) {
    double denom = 0.0;
    if (scheme == NormScheme::per_sample_max) {
      denom = s.cir.empty()
                  ? 0.0
                  : *std::max_element(s.cir.begin(), s.cir.end());
    } else {
      double energy = 0.0;
      for (double v : s.cir) energy += v * v;
      denom = std::sqrt(energy);
    }
    if (denom <= 0.0) {
      ++stats.degenerate_count;  // all-zero CIR left unchanged
      continue;
    }
    for (double& v : s.cir) v /= denom;
  }
  return {std::move(out), stats};
}

std::vector<double> normalize_cir(const std::vector<double>& cir,
                                  NormScheme scheme) {
  if (scheme == NormScheme::none || cir.empty()) {
    return cir;
  }
  double denom = 0.0;
  if (scheme == NormScheme::per_sample_max) {
    denom = *std::max_element(cir.begin(), cir.end());
  } else {
    double energy = 0.0;
    for (double v : cir) energy += v * v;
    denom = std::sqrt(energy);
  }
  if (denom <= 0.0) {
    return cir;  // degenerate all-zero CIR stays as-is
  }
  std::vector<double> out(cir.size());
  for (std::size_t i = 0; i < cir.size(); ++i) out[i] = cir[i] / denom;
  return out;
}

}  // namespace uwbgem::dataset
