// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_SRC_SERDE_HPP_
#define UWBGEM_SRC_SERDE_HPP_

#include <json.hpp>

#include "uwbgem/errors.hpp"
#include "uwbgem/nn.hpp"

namespace uwbgem::detail {

// Checkpoints are JSON with numbers emitted as shortest-round-trip decimal
// text, so parameters survive save/load bit for bit.

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw ParseError("matrix: expected non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError("matrix: ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v(i));
  }
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) {
    throw ParseError("vector: expected array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  }
  return v;
}

inline const char* activation_name(nn::Activation a) {
  return a == nn::Activation::relu ? "relu" : "identity";
}

inline nn::Activation activation_from_name(const std::string& name) {
  if (name == "relu") return nn::Activation::relu;
  if (name == "identity") return nn::Activation::identity;
  throw ParseError("unknown activation: " + name);
}

inline nlohmann::json mlp_to_json(const nn::Mlp& mlp) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : mlp.layers) {
    layers.push_back({{"activation", activation_name(layer.activation)},
                      {"weights", matrix_to_json(layer.weights)},
                      {"biases", vector_to_json(layer.biases)}});
  }
  return {{"type", "mlp"}, {"layers", std::move(layers)}};
}

inline nn::Mlp mlp_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "mlp") {
    throw ParseError("checkpoint: expected type \"mlp\"");
  }
  nn::Mlp mlp;
  for (const auto& jl : j.at("layers")) {
    nn::Layer layer;
    layer.activation = activation_from_name(jl.at("activation").get<std::string>());
    layer.weights = matrix_from_json(jl.at("weights"));
    layer.biases = vector_from_json(jl.at("biases"));
    if (layer.biases.size() != layer.weights.rows()) {
      throw ParseError("checkpoint: bias/weight row mismatch");
    }
    mlp.layers.push_back(std::move(layer));
  }
  if (mlp.layers.empty()) {
    throw ParseError("checkpoint: empty layer list");
  }
  return mlp;
}

}  // namespace uwbgem::detail

#endif  // UWBGEM_SRC_SERDE_HPP_
