#pragma once

// ReLU feedforward regressor: scaled input -> (affine + ReLU)* -> affine ->
// inverse output scaling.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "assent/design_space.hpp"

namespace assent {

/// Per-coordinate map scaled = (x - offset) / scale.
struct AffineScaler {
  std::vector<double> offset;
  std::vector<double> scale;

  static AffineScaler identity(std::size_t n) {
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
  }

  /// Range normalization to [0, 1]; zero-range coordinates get scale 1.
  static AffineScaler fit_range(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    AffineScaler s = identity(dim);
    if (rows.empty()) return s;
    for (std::size_t j = 0; j < dim; ++j) {
      double lo = rows.front()[j], hi = lo;
      for (const auto& r : rows) {
        lo = std::min(lo, r[j]);
        hi = std::max(hi, r[j]);
      }
      s.offset[j] = lo;
      s.scale[j] = hi > lo ? hi - lo : 1.0;
    }
    return s;
  }

  std::size_t size() const { return offset.size(); }
  double apply(std::size_t j, double x) const { return (x - offset[j]) / scale[j]; }
  double invert(std::size_t j, double s) const { return offset[j] + scale[j] * s; }
  bool operator==(const AffineScaler&) const = default;
};

struct MLPModel {
  std::vector<std::size_t> layer_sizes;   // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;   // weights[i]: layer_sizes[i+1] x layer_sizes[i]
  std::vector<Eigen::VectorXd> biases;
  AffineScaler input_scaler;
  AffineScaler output_scaler;
  bool normalize_inputs = true;
  bool normalize_outputs = true;

  static MLPModel zeros(std::vector<std::size_t> sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("MLP needs input and output layers");
    MLPModel m;
    m.layer_sizes = std::move(sizes);
    for (std::size_t i = 0; i + 1 < m.layer_sizes.size(); ++i) {
      m.weights.push_back(Eigen::MatrixXd::Zero(m.layer_sizes[i + 1], m.layer_sizes[i]));
      m.biases.push_back(Eigen::VectorXd::Zero(m.layer_sizes[i + 1]));
    }
    m.input_scaler = AffineScaler::identity(m.layer_sizes.front());
    m.output_scaler = AffineScaler::identity(m.layer_sizes.back());
    return m;
  }

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t hidden_layers() const { return layer_sizes.size() - 2; }
  std::vector<std::size_t> hidden_sizes() const {
    return {layer_sizes.begin() + 1, layer_sizes.end() - 1};
  }

  void check() const {
    if (layer_sizes.size() < 2 || weights.size() != layer_sizes.size() - 1 ||
        biases.size() != weights.size())
      throw std::invalid_argument("MLP: inconsistent layer count");
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (std::size_t(weights[i].rows()) != layer_sizes[i + 1] ||
          std::size_t(weights[i].cols()) != layer_sizes[i] ||
          std::size_t(biases[i].size()) != layer_sizes[i + 1])
        throw std::invalid_argument("MLP: matrix shapes do not chain");
    if (input_scaler.size() != input_size() || output_scaler.size() != output_size())
      throw std::invalid_argument("MLP: scaler size mismatch");
  }

  Eigen::VectorXd scale_input(const std::vector<double>& x) const {
    if (x.size() != input_size()) throw std::invalid_argument("MLP: input size mismatch");
    Eigen::VectorXd u(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) u[j] = input_scaler.apply(j, x[j]);
    return u;
  }

  /// Forward pass in scaled space; `hidden` (optional) receives the
  /// post-activation value of every hidden layer.
  Eigen::VectorXd forward_scaled(const Eigen::VectorXd& u,
                                 std::vector<Eigen::VectorXd>* hidden = nullptr) const {
    Eigen::VectorXd a = u;
    if (hidden) hidden->clear();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      Eigen::VectorXd z = weights[i] * a + biases[i];
      if (i + 1 < weights.size()) {
        a = z.cwiseMax(0.0);
        if (hidden) hidden->push_back(a);
      } else {
        a = std::move(z);
      }
    }
    return a;
  }

  std::vector<double> forward(const std::vector<double>& x) const {
    Eigen::VectorXd s = forward_scaled(scale_input(x));
    std::vector<double> y(s.size());
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = output_scaler.invert(j, s[j]);
    return y;
  }
  std::vector<double> forward(const DesignPoint& x) const { return forward(x.values); }

  bool finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }

  /// Versioned JSON document; weight matrices stored row-major, flattened.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "assent-mlp";
    j["version"] = 1;
    j["layer_sizes"] = layer_sizes;
    auto layers = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      std::vector<double> w;
      for (Eigen::Index r = 0; r < weights[i].rows(); ++r)
        for (Eigen::Index c = 0; c < weights[i].cols(); ++c) w.push_back(weights[i](r, c));
      nlohmann::ordered_json l;
      l["weights"] = w;
      l["biases"] = std::vector<double>(biases[i].data(), biases[i].data() + biases[i].size());
      layers.push_back(l);
    }
    j["layers"] = layers;
    j["input_scaler"] = {{"offset", input_scaler.offset}, {"scale", input_scaler.scale}};
    j["output_scaler"] = {{"offset", output_scaler.offset}, {"scale", output_scaler.scale}};
    j["normalize_inputs"] = normalize_inputs;
    j["normalize_outputs"] = normalize_outputs;
    return j;
  }

  static MLPModel from_json(const nlohmann::ordered_json& j) {
    if (j.at("format") != "assent-mlp") throw std::runtime_error("not an assent-mlp document");
    if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported model version");
    MLPModel m = zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto& layers = j.at("layers");
    if (layers.size() != m.weights.size()) throw std::runtime_error("layer count mismatch");
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      auto w = layers[i].at("weights").get<std::vector<double>>();
      auto b = layers[i].at("biases").get<std::vector<double>>();
      if (w.size() != std::size_t(m.weights[i].size()) || b.size() != std::size_t(m.biases[i].size()))
        throw std::runtime_error("layer shape mismatch");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r)
        for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c) m.weights[i](r, c) = w[k++];
      for (std::size_t r = 0; r < b.size(); ++r) m.biases[i][r] = b[r];
    }
    m.input_scaler.offset = j.at("input_scaler").at("offset").get<std::vector<double>>();
    m.input_scaler.scale = j.at("input_scaler").at("scale").get<std::vector<double>>();
    m.output_scaler.offset = j.at("output_scaler").at("offset").get<std::vector<double>>();
    m.output_scaler.scale = j.at("output_scaler").at("scale").get<std::vector<double>>();
    m.normalize_inputs = j.at("normalize_inputs").get<bool>();
    m.normalize_outputs = j.at("normalize_outputs").get<bool>();
    m.check();
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << to_json().dump(2) << '\n';
  }

  static MLPModel load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    return from_json(nlohmann::ordered_json::parse(is));
  }
};

}  // namespace assent
