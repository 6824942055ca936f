#pragma once

// Depth-first branch-and-bound over the ReLU indicator variables of an
// encoded network. Feasibility only: stops at the first integral node.

#include <chrono>
#include <cmath>
#include <vector>

#include "assent/milp/encode.hpp"
#include "assent/milp/lp.hpp"

namespace assent {

enum class MILPStatus { feasible, infeasible, timeout };

inline const char* to_string(MILPStatus s) {
  switch (s) {
    case MILPStatus::feasible: return "feasible";
    case MILPStatus::infeasible: return "infeasible";
    case MILPStatus::timeout: return "timeout";
  }
  return "?";
}

struct SolveOutcome {
  MILPStatus status = MILPStatus::infeasible;
  std::vector<double> witness;  // full variable assignment
  std::vector<double> input;    // decoded raw input point
  std::vector<double> output;   // predicted raw outputs
  std::size_t nodes_explored = 0;
  std::chrono::duration<double> wall_time{0};
  bool numeric_warning = false;
};

struct MILPOptions {
  std::chrono::duration<double> time_limit{30.0};
  double integrality_tol = 1e-6;
  bool fix_stable_neurons = true;  // fix indicators of neurons whose sign is decided by the bounds
  std::size_t max_nodes = 0;       // 0: unlimited
  LPOptions lp;
};

namespace detail {

inline void decode_witness(const MILPProblem& p, const MLPModel& model, SolveOutcome& out) {
  out.input.resize(p.input_vars.size());
  for (std::size_t j = 0; j < p.input_vars.size(); ++j)
    out.input[j] = model.input_scaler.invert(j, out.witness[p.input_vars[j]]);
  out.output.resize(p.output_vars.size());
  for (std::size_t k = 0; k < p.output_vars.size(); ++k)
    out.output[k] = model.output_scaler.invert(k, out.witness[p.output_vars[k]]);
}

}  // namespace detail

inline SolveOutcome solve_milp(const MILPProblem& problem, const MLPModel& model,
                               const MILPOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  SolveOutcome out;

  LinearProgram root = problem.lp;
  if (opt.fix_stable_neurons) {
    for (std::size_t i = 0; i < problem.delta_vars.size(); ++i)
      for (std::size_t u = 0; u < problem.delta_vars[i].size(); ++u) {
        const auto& I = problem.bounds.pre_activation[i][u];
        const std::size_t d = problem.delta_vars[i][u];
        if (I.lower >= 0.0) root.lower[d] = root.upper[d] = 0.0;
        else if (I.upper <= 0.0) root.lower[d] = root.upper[d] = 1.0;
      }
  }

  struct Node {
    std::vector<std::pair<std::size_t, double>> fixings;
  };
  std::vector<Node> stack{Node{}};
  root.validate();
  detail::BoundedSimplex solver(root, opt.lp);
  bool first_solve = true;

  while (!stack.empty()) {
    if (clock::now() - start > opt.time_limit ||
        (opt.max_nodes && out.nodes_explored >= opt.max_nodes)) {
      out.status = MILPStatus::timeout;
      out.wall_time = clock::now() - start;
      return out;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++out.nodes_explored;
    for (std::size_t d : problem.binary_vars) solver.set_bounds(d, root.lower[d], root.upper[d]);
    for (auto [d, v] : node.fixings) solver.set_bounds(d, v, v);

    auto r = first_solve ? solver.solve() : solver.reoptimize();
    first_solve = false;
    out.numeric_warning = out.numeric_warning || r.numeric_warning;
    if (r.status != LPStatus::optimal) continue;

    // Most fractional indicator; ties resolve to the earliest (layer, unit).
    std::size_t branch = 0;
    double best_frac = -1.0;
    bool integral = true;
    for (std::size_t d : problem.binary_vars) {
      const double v = r.x[d];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac <= opt.integrality_tol) continue;
      integral = false;
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        branch = d;
      }
    }
    if (integral) {
      // Re-solve with exactly rounded indicators for a clean witness.
      for (std::size_t d : problem.binary_vars) solver.set_bounds(d, std::round(r.x[d]), std::round(r.x[d]));
      auto clean = solver.reoptimize();
      out.numeric_warning = out.numeric_warning || clean.numeric_warning;
      if (clean.status != LPStatus::optimal) continue;
      out.status = MILPStatus::feasible;
      out.witness = std::move(clean.x);
      detail::decode_witness(problem, model, out);
      out.wall_time = clock::now() - start;
      return out;
    }
    const double first = r.x[branch] >= 0.5 ? 1.0 : 0.0;
    Node later = node, sooner = std::move(node);
    later.fixings.push_back({branch, 1.0 - first});
    sooner.fixings.push_back({branch, first});
    stack.push_back(std::move(later));
    stack.push_back(std::move(sooner));
  }
  out.status = MILPStatus::infeasible;
  out.wall_time = clock::now() - start;
  return out;
}

}  // namespace assent
