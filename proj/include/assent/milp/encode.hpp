#pragma once

// Big-M mixed-integer encoding of a trained ReLU network over an input box.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "assent/core/format.hpp"
#include "assent/design_space.hpp"
#include "assent/milp/lp.hpp"
#include "assent/surrogate/mlp.hpp"

namespace assent {

/// Pre-activation interval and big-M constant of every hidden neuron, in the
/// model's scaled space. Indexed [hidden layer][unit].
struct BigMBounds {
  std::vector<std::vector<Interval>> pre_activation;
  std::vector<std::vector<double>> Q;
  std::vector<Interval> output;  // affine output interval, scaled

  static constexpr double kSafety = 1.05;
  static constexpr double kMinQ = 1.0;
};

/// Input box expressed in scaled coordinates.
inline Box scaled_box(const MLPModel& model, const Box& raw) {
  if (raw.size() != model.input_size()) throw std::invalid_argument("input box size mismatch");
  Box out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (!std::isfinite(raw[j].lower) || !std::isfinite(raw[j].upper))
      throw std::invalid_argument("input box must be bounded");
    const double a = model.input_scaler.apply(j, raw[j].lower);
    const double b = model.input_scaler.apply(j, raw[j].upper);
    out[j] = {std::min(a, b), std::max(a, b)};
  }
  return out;
}

/// Layer-by-layer interval arithmetic from a raw input box.
inline BigMBounds propagate_bounds(const MLPModel& model, const Box& input_box) {
  model.check();
  Box cur = scaled_box(model, input_box);
  BigMBounds out;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    const auto& W = model.weights[i];
    Box next(std::size_t(W.rows()));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double lo = model.biases[i][r], hi = lo;
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        const double w = W(r, c);
        const auto& I = cur[std::size_t(c)];
        lo += std::min(w * I.lower, w * I.upper);
        hi += std::max(w * I.lower, w * I.upper);
      }
      next[std::size_t(r)] = {lo, hi};
    }
    if (i + 1 == model.weights.size()) {
      out.output = next;
      break;
    }
    std::vector<double> q(next.size());
    for (std::size_t r = 0; r < next.size(); ++r)
      q[r] = std::max(BigMBounds::kMinQ,
                      BigMBounds::kSafety * std::max(std::abs(next[r].lower), std::abs(next[r].upper)));
    out.pre_activation.push_back(next);
    out.Q.push_back(std::move(q));
    for (auto& I : next) I = {std::max(0.0, I.lower), std::max(0.0, I.upper)};
    cur = std::move(next);
  }
  return out;
}

enum class VarKind { input, neuron, binary, output };

struct VarRole {
  VarKind kind;
  std::size_t layer = 0;  // hidden layer (0-based) for neuron/binary
  std::size_t unit = 0;   // coordinate or unit index
};

/// Requirement on one network output, in raw (unscaled) units.
struct OutputConstraint {
  std::size_t output = 0;
  RowSense sense = RowSense::greater_equal;
  double bound = 0.0;
};

struct Improvement {
  std::size_t output = 0;
  Direction direction = Direction::minimize;
  double best = 0.0;
  std::optional<double> margin;  // default: 1% of |best|, at least 1e-6

  double epsilon() const {
    return margin ? *margin : std::max(1e-6, 0.01 * std::abs(best));
  }
};

struct MILPProblem {
  LinearProgram lp;
  std::vector<std::size_t> binary_vars;
  std::vector<VarRole> var_roles;
  BigMBounds bounds;
  std::vector<std::size_t> input_vars;
  std::vector<std::size_t> output_vars;
  std::vector<std::vector<std::size_t>> neuron_vars;  // [layer][unit]
  std::vector<std::vector<std::size_t>> delta_vars;   // [layer][unit]

  std::string var_name(std::size_t v) const {
    const auto& r = var_roles[v];
    switch (r.kind) {
      case VarKind::input: return "u" + std::to_string(r.unit);
      case VarKind::neuron: return "h" + std::to_string(r.layer + 1) + "_" + std::to_string(r.unit);
      case VarKind::binary: return "d" + std::to_string(r.layer + 1) + "_" + std::to_string(r.unit);
      case VarKind::output: return "y" + std::to_string(r.unit);
    }
    return "v" + std::to_string(v);
  }
};

/// Output bound converted to the model's scaled space.
inline double scale_output_value(const MLPModel& m, std::size_t k, double raw) {
  return m.output_scaler.apply(k, raw);
}

inline MILPProblem encode_network(const MLPModel& model, const Box& input_box,
                                  const std::vector<OutputConstraint>& output_constraints,
                                  const std::optional<Improvement>& improvement = std::nullopt) {
  MILPProblem p;
  p.bounds = propagate_bounds(model, input_box);
  const Box ubox = scaled_box(model, input_box);
  auto& lp = p.lp;
  lp = LinearProgram::with_vars(0);

  for (std::size_t j = 0; j < model.input_size(); ++j) {
    p.input_vars.push_back(lp.add_var(ubox[j].lower, ubox[j].upper));
    p.var_roles.push_back({VarKind::input, 0, j});
  }
  std::vector<std::size_t> prev = p.input_vars;
  const std::size_t hidden = model.weights.size() - 1;
  for (std::size_t i = 0; i < hidden; ++i) {
    const auto& W = model.weights[i];
    std::vector<std::size_t> xs, ds;
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      xs.push_back(lp.add_var(-kInf, kInf));
      p.var_roles.push_back({VarKind::neuron, i, std::size_t(r)});
      ds.push_back(lp.add_var(0.0, 1.0));
      p.var_roles.push_back({VarKind::binary, i, std::size_t(r)});
      p.binary_vars.push_back(ds.back());
    }
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      const std::size_t x = xs[std::size_t(r)], d = ds[std::size_t(r)];
      const double b = model.biases[i][r];
      const double Q = p.bounds.Q[i][std::size_t(r)];
      std::vector<std::pair<std::size_t, double>> affine{{x, 1.0}};
      for (Eigen::Index c = 0; c < W.cols(); ++c)
        if (W(r, c) != 0.0) affine.push_back({prev[std::size_t(c)], -W(r, c)});
      // x >= Wx + b ; x <= Wx + b + Q d ; x >= 0 ; x <= Q (1 - d)
      lp.add_row(affine, RowSense::greater_equal, b);
      auto upper = affine;
      upper.push_back({d, -Q});
      lp.add_row(upper, RowSense::less_equal, b);
      lp.add_row({{x, 1.0}}, RowSense::greater_equal, 0.0);
      lp.add_row({{x, 1.0}, {d, Q}}, RowSense::less_equal, Q);
    }
    p.neuron_vars.push_back(xs);
    p.delta_vars.push_back(ds);
    prev = std::move(xs);
  }
  const auto& Wout = model.weights.back();
  for (Eigen::Index r = 0; r < Wout.rows(); ++r) {
    const std::size_t y = lp.add_var(-kInf, kInf);
    p.var_roles.push_back({VarKind::output, 0, std::size_t(r)});
    p.output_vars.push_back(y);
    std::vector<std::pair<std::size_t, double>> terms{{y, 1.0}};
    for (Eigen::Index c = 0; c < Wout.cols(); ++c)
      if (Wout(r, c) != 0.0) terms.push_back({prev[std::size_t(c)], -Wout(r, c)});
    lp.add_row(terms, RowSense::equal, model.biases.back()[r]);
  }
  for (const auto& oc : output_constraints) {
    if (oc.output >= model.output_size()) throw std::invalid_argument("output constraint index out of range");
    lp.add_row({{p.output_vars[oc.output], 1.0}}, oc.sense,
               scale_output_value(model, oc.output, oc.bound));
  }
  if (improvement) {
    if (improvement->output >= model.output_size())
      throw std::invalid_argument("improvement output index out of range");
    const double eps = improvement->epsilon();
    const bool minimize = improvement->direction == Direction::minimize;
    const double target = minimize ? improvement->best - eps : improvement->best + eps;
    lp.add_row({{p.output_vars[improvement->output], 1.0}},
               minimize ? RowSense::less_equal : RowSense::greater_equal,
               scale_output_value(model, improvement->output, target));
  }
  return p;
}

/// CPLEX-LP text of the problem (diagnostic export).
inline void write_lp_text(std::ostream& os, const MILPProblem& p) {
  const auto& lp = p.lp;
  auto term = [&](double v, std::size_t j, bool first) {
    std::string s;
    if (v < 0) s = first ? "- " : " - ";
    else s = first ? "" : " + ";
    return s + format_double(std::abs(v)) + " " + p.var_name(j);
  };
  os << "\\ assent MILP encoding\nMinimize\n obj:";
  bool any = false;
  for (std::size_t j = 0; j < lp.num_vars(); ++j)
    if (lp.c[j] != 0.0) {
      os << ' ' << term(lp.c[j], j, !any);
      any = true;
    }
  if (!any) os << " 0 " << (lp.num_vars() ? p.var_name(0) : std::string("x"));
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    os << " c" << i << ":";
    bool first = true;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
      const double v = lp.A(Eigen::Index(i), Eigen::Index(j));
      if (v == 0.0) continue;
      os << ' ' << term(v, j, first);
      first = false;
    }
    if (first) os << " 0 " << p.var_name(0);
    os << (lp.sense[i] == RowSense::less_equal ? " <= " : lp.sense[i] == RowSense::greater_equal ? " >= " : " = ")
       << format_double(lp.b[i]) << '\n';
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    if (!std::isfinite(lo) && !std::isfinite(hi)) os << ' ' << p.var_name(j) << " free\n";
    else if (!std::isfinite(lo)) os << " -inf <= " << p.var_name(j) << " <= " << format_double(hi) << '\n';
    else if (!std::isfinite(hi)) os << ' ' << p.var_name(j) << " >= " << format_double(lo) << '\n';
    else os << ' ' << format_double(lo) << " <= " << p.var_name(j) << " <= " << format_double(hi) << '\n';
  }
  os << "Binaries\n";
  for (std::size_t j : p.binary_vars) os << ' ' << p.var_name(j) << '\n';
  os << "End\n";
}

inline std::string lp_text(const MILPProblem& p) {
  std::ostringstream os;
  write_lp_text(os, p);
  return os.str();
}

}  // namespace assent
