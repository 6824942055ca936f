#pragma once

// Reference feasibility check for small ReLU networks: fix every activation
// pattern, reduce the network to affine maps of the input, and solve one LP
// over the input coordinates per pattern.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "assent/core/random.hpp"
#include "assent/milp/encode.hpp"
#include "assent/milp/lp.hpp"
#include "assent/surrogate/mlp.hpp"

namespace assent::oracles {

struct EnumerationResult {
  bool feasible = false;
  std::uint64_t patterns_tried = 0;
  std::vector<double> input;  // scaled witness input when feasible
};

inline std::size_t hidden_neuron_count(const MLPModel& m) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < m.weights.size(); ++i) n += std::size_t(m.weights[i].rows());
  return n;
}

inline EnumerationResult enumerate_activation_patterns(const MLPModel& model, const Box& input_box,
                                                       const std::vector<OutputConstraint>& cons,
                                                       std::size_t max_neurons = 16) {
  const std::size_t H = hidden_neuron_count(model);
  if (H > max_neurons) throw std::invalid_argument("too many hidden neurons to enumerate");
  const Box ubox = scaled_box(model, input_box);
  const std::size_t n = model.input_size();
  EnumerationResult out;
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t(1) << H); ++pattern) {
    ++out.patterns_tried;
    LinearProgram lp = LinearProgram::with_vars(n);
    for (std::size_t j = 0; j < n; ++j) {
      lp.lower[j] = ubox[j].lower;
      lp.upper[j] = ubox[j].upper;
    }
    // Current layer as affine map of the input: value = M u + v.
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(n));
    std::size_t bit = 0;
    auto add_affine_row = [&](const Eigen::RowVectorXd& a, double offset, RowSense s, double rhs) {
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t j = 0; j < n; ++j) terms.push_back({j, a[Eigen::Index(j)]});
      lp.add_row(terms, s, rhs - offset);
    };
    for (std::size_t i = 0; i + 1 < model.weights.size(); ++i) {
      Eigen::MatrixXd Mz = model.weights[i] * M;
      Eigen::VectorXd vz = model.weights[i] * v + model.biases[i];
      for (Eigen::Index r = 0; r < Mz.rows(); ++r, ++bit) {
        const bool active = (pattern >> bit) & 1U;
        add_affine_row(Mz.row(r), vz[r], active ? RowSense::greater_equal : RowSense::less_equal, 0.0);
        if (!active) {
          Mz.row(r).setZero();
          vz[r] = 0.0;
        }
      }
      M = std::move(Mz);
      v = std::move(vz);
    }
    const Eigen::MatrixXd My = model.weights.back() * M;
    const Eigen::VectorXd vy = model.weights.back() * v + model.biases.back();
    for (const auto& c : cons)
      add_affine_row(My.row(Eigen::Index(c.output)), vy[Eigen::Index(c.output)], c.sense,
                     model.output_scaler.apply(c.output, c.bound));
    auto r = solve_lp(lp);
    if (r.status == LPStatus::optimal) {
      out.feasible = true;
      out.input = r.x;
      return out;
    }
  }
  return out;
}

/// Random ReLU network with 1..max_layers hidden layers and identity scalers.
inline MLPModel random_relu_net(Engine& rng, std::size_t inputs, std::size_t outputs,
                                std::size_t max_layers, std::size_t max_units,
                                std::size_t max_total_hidden = 0) {
  std::vector<std::size_t> sizes{inputs};
  const std::size_t layers = 1 + uniform_index(rng, max_layers);
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers; ++i) {
    std::size_t u = 1 + uniform_index(rng, max_units);
    if (max_total_hidden) {
      if (total >= max_total_hidden) break;
      u = std::min(u, max_total_hidden - total);
    }
    total += u;
    sizes.push_back(u);
  }
  sizes.push_back(outputs);
  MLPModel m = MLPModel::zeros(sizes);
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c)
        m.weights[i](r, c) = standard_normal(rng) / std::sqrt(double(m.weights[i].cols()));
      m.biases[i][r] = 0.3 * standard_normal(rng);
    }
  }
  return m;
}

inline Box random_box(Engine& rng, std::size_t dim) {
  Box b(dim);
  for (auto& I : b) {
    const double c = uniform_real(rng, -1.0, 1.0);
    const double w = uniform_real(rng, 0.2, 2.0);
    I = {c - w / 2, c + w / 2};
  }
  return b;
}

inline std::vector<double> random_point_in(Engine& rng, const Box& b) {
  std::vector<double> x(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) x[j] = uniform_real(rng, b[j].lower, b[j].upper);
  return x;
}

/// Constraints satisfied (with margin) by the network output at a random
/// point of the box, so the resulting problem is feasible.
inline std::vector<OutputConstraint> satisfiable_constraints(Engine& rng, const MLPModel& m,
                                                             const Box& box) {
  const auto y = m.forward(random_point_in(rng, box));
  std::vector<OutputConstraint> out;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double slack = uniform_real(rng, 0.0, 0.2);
    if (bernoulli(rng, 0.5)) out.push_back({k, RowSense::greater_equal, y[k] - slack});
    else out.push_back({k, RowSense::less_equal, y[k] + slack});
  }
  return out;
}

/// Thresholds drawn across (and slightly beyond) the propagated output range;
/// the resulting problems may be feasible or infeasible.
inline std::vector<OutputConstraint> random_constraints(Engine& rng, const MLPModel& m,
                                                        const Box& box) {
  const auto bounds = propagate_bounds(m, box);
  std::vector<OutputConstraint> out;
  for (std::size_t k = 0; k < m.output_size(); ++k) {
    const auto& I = bounds.output[k];
    const double t = uniform_real(rng, I.lower - 0.1, I.upper + 0.1);
    out.push_back({k, bernoulli(rng, 0.5) ? RowSense::greater_equal : RowSense::less_equal, t});
  }
  return out;
}

}  // namespace assent::oracles
