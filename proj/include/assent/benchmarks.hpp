#pragma once

// Built-in problems and penalized-objective constructors.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "assent/design_space.hpp"
#include "assent/surrogate/mlp.hpp"

namespace assent::benchmarks {

enum class PenaltyDirection { above, below };

struct PenaltySpec {
  double reference = 1.0;
  double alpha = 15.0;
  PenaltyDirection direction = PenaltyDirection::above;
  /// When set, the ratio term is gated by the indicator too, so a satisfied
  /// requirement scores 0 instead of value/reference.
  bool gate_base = false;
};

/// value/ref + α·|value−ref|/|ref|·1{violated}; strict indicator.
inline double penalized_ratio(double value, const PenaltySpec& p) {
  if (p.reference == 0.0) throw std::invalid_argument("penalized_ratio: reference must be non-zero");
  const bool violated = p.direction == PenaltyDirection::above ? value > p.reference : value < p.reference;
  const double ratio = value / p.reference;
  const double penalty = violated ? p.alpha * std::abs(value - p.reference) / std::abs(p.reference) : 0.0;
  if (p.gate_base) return violated ? ratio + penalty : 0.0;
  return ratio + penalty;
}

inline double reward_objective(double reward, double numerator = 400.0, double neg_offset = 1000.0) {
  return reward > 0.0 ? numerator / reward : std::abs(reward) + neg_offset;
}

enum class ShiftedVariant {
  relative,   // (c + α(c−b)/b)·1{c ≥ b}
  sign,       // (c − α·c)·1{c ≤ 0}
  count,      // (c − b)·1{c > b}
};

inline double shifted_penalty(double value, double bound, double alpha, ShiftedVariant v) {
  switch (v) {
    case ShiftedVariant::relative:
      if (bound == 0.0) throw std::invalid_argument("shifted_penalty: relative variant needs bound != 0");
      return value >= bound ? value + alpha * (value - bound) / bound : 0.0;
    case ShiftedVariant::sign: return value <= 0.0 ? value - alpha * value : 0.0;
    case ShiftedVariant::count: return value > bound ? value - bound : 0.0;
  }
  return 0.0;
}

/// Named objective presets for the externally simulated case studies.
namespace presets {
inline PenaltySpec fuel(double f_max = 100.0) { return {f_max, 15.0, PenaltyDirection::above, true}; }
inline PenaltySpec noise(double n_ref) { return {n_ref, 15.0, PenaltyDirection::above, false}; }
inline double glider_deviation(double con1) { return shifted_penalty(con1, 0.05, 15.0, ShiftedVariant::relative); }
inline double boat_velocity(double con2) { return shifted_penalty(con2, 0.0, 15.0, ShiftedVariant::sign); }
inline double sensor_count(double used) { return shifted_penalty(used, 50.0, 15.0, ShiftedVariant::count); }
}  // namespace presets

/// Minimax of ten transcendental functions over 11 variables:
/// f_i(x) = Σ_{j=1..11} (1/j)·exp((x_j − sin(i − 1 + 2j))²), i = 1..10.
inline double polak3(const std::vector<double>& x) {
  if (x.size() != 11) throw std::invalid_argument("polak3 takes 11 variables");
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 10; ++i) {
    double f = 0.0;
    for (int j = 1; j <= 11; ++j) {
      const double d = x[j - 1] - std::sin(double(i - 1 + 2 * j));
      f += std::exp(d * d) / double(j);
    }
    worst = std::max(worst, f);
  }
  return worst;
}

inline constexpr double kPolak3Minimum = 5.933003;

inline DesignProblem polak3_problem(double bound = 1.0) {
  DesignProblem p;
  p.name = "polak3";
  for (int j = 0; j < 11; ++j)
    p.variables.push_back(DesignVariable::continuous("x" + std::to_string(j), -bound, bound));
  p.spec.output_names = {"max_f"};
  p.spec.objectives = {{0, Direction::minimize}};
  p.simulator = [](const DesignPoint& x) -> SimulationResult { return std::vector<double>{polak3(x.values)}; };
  return p;
}

inline DesignProblem sphere(std::size_t dim = 4, double bound = 5.0) {
  DesignProblem p;
  p.name = "sphere";
  for (std::size_t j = 0; j < dim; ++j)
    p.variables.push_back(DesignVariable::continuous("x" + std::to_string(j), -bound, bound));
  p.spec.output_names = {"f"};
  p.spec.objectives = {{0, Direction::minimize}};
  p.simulator = [](const DesignPoint& x) -> SimulationResult {
    double s = 0.0;
    for (double v : x.values) s += v * v;
    return std::vector<double>{s};
  };
  return p;
}

/// min Σx² subject to x0 ≥ threshold; optimum threshold² at (threshold, 0, ...).
inline DesignProblem constrained_sphere(std::size_t dim = 4, double bound = 1.0, double threshold = 0.2) {
  DesignProblem p = sphere(dim, bound);
  p.name = "constrained-sphere";
  p.spec.output_names = {"f", "x0"};
  p.spec.hard_constraints = {{1, Relation::greater_equal, threshold}};
  p.simulator = [](const DesignPoint& x) -> SimulationResult {
    double s = 0.0;
    for (double v : x.values) s += v * v;
    return std::vector<double>{s, x[0]};
  };
  return p;
}

/// Constrained sphere with an unreachable requirement (f ≤ -1).
inline DesignProblem impossible_sphere(std::size_t dim = 4, double bound = 1.0) {
  DesignProblem p = constrained_sphere(dim, bound);
  p.name = "impossible-sphere";
  p.spec.hard_constraints.push_back({0, Relation::less_equal, -1.0});
  return p;
}

/// Three inputs in [-1, 1], two hidden ReLUs that stay active on the box, so
/// the network is affine there: f = x0 + 2·x1 − x2 + 4, g = x0 − x1 + 1.
inline MLPModel linear_oracle_model() {
  auto m = MLPModel::zeros({3, 2, 2});
  m.weights[0] << 1.0, 2.0, -1.0,
                  1.0, -1.0, 0.0;
  m.biases[0] << 5.0, 3.0;
  m.weights[1] << 1.0, 0.0,
                  0.0, 1.0;
  m.biases[1] << -1.0, -2.0;
  return m;
}

/// minimize f subject to g ≥ 1.5. The constraint is active at the optimum
/// x = (-0.5, -1, 1), f = 0.5.
inline DesignProblem linear_oracle() {
  DesignProblem p;
  p.name = "linear-oracle";
  for (int j = 0; j < 3; ++j) p.variables.push_back(DesignVariable::continuous("x" + std::to_string(j), -1, 1));
  p.spec.output_names = {"f", "g"};
  p.spec.objectives = {{0, Direction::minimize}};
  p.spec.hard_constraints = {{1, Relation::greater_equal, 1.5}};
  const MLPModel model = linear_oracle_model();
  p.simulator = [model](const DesignPoint& x) -> SimulationResult { return model.forward(x.values); };
  return p;
}

/// Lander-shaped synthetic: four controller gains in [0, 1], outputs reward,
/// fuel and touchdown speed; maximize reward with fuel <= 100 and speed <= 1.
/// The unconstrained reward peak burns too much fuel.
inline DesignProblem lander_synthetic() {
  DesignProblem p;
  p.name = "lander-synthetic";
  for (const char* n : {"main_gain", "side_gain", "target_rate", "damping"})
    p.variables.push_back(DesignVariable::continuous(n, 0, 1));
  p.spec.output_names = {"reward", "fuel", "touchdown_speed"};
  p.spec.objectives = {{0, Direction::maximize}};
  p.spec.hard_constraints = {{1, Relation::less_equal, 100.0}, {2, Relation::less_equal, 1.0}};
  p.simulator = [](const DesignPoint& x) -> SimulationResult {
    const double a = x[0] - 0.6, b = x[1] - 0.3, c = x[2] - 0.5, d = x[3] - 0.7;
    const double reward = 450.0 - 600.0 * (a * a + b * b) - 300.0 * c * c - 100.0 * d * d;
    const double fuel = 30.0 + 110.0 * x[0] * (0.5 + x[3]) + 25.0 * x[1];
    const double speed = 1.8 * (1.0 - x[2]) * (1.2 - x[3]) + 0.1;
    return std::vector<double>{reward, fuel, speed};
  };
  return p;
}

struct RoverSettings {
  std::size_t waypoints = 30;
  struct Obstacle {
    double x, y, height, sigma;
  };
  std::vector<Obstacle> obstacles{{0.3, 0.35, 1.0, 0.08}, {0.7, 0.6, 1.0, 0.1}, {0.45, 0.8, 0.5, 0.07}};
  double smoothness_weight = 1.0;
};

/// Path cost of waypoints between (0,0) and (1,1): squared second
/// differences plus Gaussian obstacle bumps summed over the waypoints.
inline double rover_cost(const std::vector<double>& x, const RoverSettings& s = {}) {
  if (x.size() != 2 * s.waypoints) throw std::invalid_argument("rover_cost: wrong dimension");
  std::vector<double> px{0.0}, py{0.0};
  for (std::size_t k = 0; k < s.waypoints; ++k) {
    px.push_back(x[2 * k]);
    py.push_back(x[2 * k + 1]);
  }
  px.push_back(1.0);
  py.push_back(1.0);
  double smooth = 0.0;
  for (std::size_t k = 1; k + 1 < px.size(); ++k) {
    const double ax = px[k + 1] - 2 * px[k] + px[k - 1], ay = py[k + 1] - 2 * py[k] + py[k - 1];
    smooth += ax * ax + ay * ay;
  }
  double bumps = 0.0;
  for (std::size_t k = 0; k < px.size(); ++k)
    for (const auto& o : s.obstacles) {
      const double dx = px[k] - o.x, dy = py[k] - o.y;
      bumps += o.height * std::exp(-(dx * dx + dy * dy) / (2 * o.sigma * o.sigma));
    }
  return s.smoothness_weight * double(px.size()) * smooth + bumps;
}

inline DesignProblem rover(const RoverSettings& s = {}) {
  DesignProblem p;
  p.name = "rover";
  for (std::size_t k = 0; k < s.waypoints; ++k) {
    p.variables.push_back(DesignVariable::continuous("p" + std::to_string(k) + ".x", 0, 1));
    p.variables.push_back(DesignVariable::continuous("p" + std::to_string(k) + ".y", 0, 1));
  }
  p.spec.output_names = {"cost"};
  p.spec.objectives = {{0, Direction::minimize}};
  p.simulator = [s](const DesignPoint& x) -> SimulationResult { return std::vector<double>{rover_cost(x.values, s)}; };
  return p;
}

struct BenchmarkInfo {
  std::string name;
  std::string description;
  std::optional<double> reference_optimum;
  /// Unset for problems built elsewhere (architecture search) or bound to
  /// an external simulator.
  std::function<DesignProblem()> make;
};

inline std::vector<BenchmarkInfo> registry() {
  return {
      {"sphere", "min sum x_i^2 over [-5,5]^4", 0.0, [] { return sphere(); }},
      {"constrained-sphere", "min sum x_i^2 over [-1,1]^4 s.t. x0 >= 0.2", 0.04, [] { return constrained_sphere(); }},
      {"impossible-sphere", "constrained sphere plus f <= -1 (infeasible)", std::nullopt,
       [] { return impossible_sphere(); }},
      {"linear-oracle", "fixed affine ReLU network in [-1,1]^3, min f s.t. g >= 1.5", 0.5,
       [] { return linear_oracle(); }},
      {"polak3", "minimax of 10 transcendental functions, 11 variables in [-1,1]", kPolak3Minimum,
       [] { return polak3_problem(); }},
      {"rover", "30 2-D waypoints, smoothness + Gaussian obstacle cost (synthetic field)", std::nullopt,
       [] { return rover(); }},
      {"lander-synthetic", "4 gains in [0,1]; maximize reward s.t. fuel <= 100, touchdown speed <= 1 (synthetic)",
       std::nullopt, [] { return lander_synthetic(); }},
      {"lowpass", "R/L/C architecture search then R/C value tuning; gain in [-0.92,0.83] dB, bandwidth in "
                  "[990,1010] Hz", std::nullopt, nullptr},
      {"lunar-lander", "objective preset only: reward (400/r) and fuel penalty (F_max 100, alpha 15); "
                       "simulator adapter unbound", std::nullopt, nullptr},
      {"waveglider", "objective preset only: glider deviation and boat velocity penalties; simulator adapter "
                     "unbound", std::nullopt, nullptr},
      {"ieee118", "objective preset only: sensor count over 50; simulator adapter unbound", std::nullopt,
       nullptr},
  };
}

inline const BenchmarkInfo* find_benchmark(const std::string& name) {
  static const std::vector<BenchmarkInfo> reg = registry();
  for (const auto& b : reg)
    if (b.name == name) return &b;
  return nullptr;
}

}  // namespace assent::benchmarks
