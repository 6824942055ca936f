#pragma once

// Low-pass filter design problems: architecture search over R/L/C genes and
// value fine-tuning on a fixed netlist.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "assent/circuits/filter.hpp"
#include "assent/circuits/mna.hpp"
#include "assent/circuits/netlist.hpp"
#include "assent/design_space.hpp"
#include "assent/evolve/chromosome.hpp"

namespace assent::circuits {

struct LowpassSettings {
  FirstOrderTemplate target;
  double grid_lo_hz = 10.0;
  double grid_hi_hz = 1e6;
  std::size_t points_per_decade = 30;
  std::vector<double> probes_hz{200.0, 500.0, 2000.0};
  std::size_t input_node = 1;
  std::size_t output_node = 2;
  std::size_t node_count = 5;
  std::size_t max_components = 10;
  Interval gain_db{-0.92, 0.83};
  Interval bandwidth_hz{990.0, 1010.0};
  Interval resistor{400.0, 800.0};
  Interval capacitor{1e-8, 1e-6};
  Interval inductor{1e-3, 1e-1};

  std::vector<double> grid() const { return log_grid(grid_lo_hz, grid_hi_hz, points_per_decade); }
};

/// Discrete parts available to the architecture search.
inline ArchitectureSpace lowpass_architecture(const LowpassSettings& s = {}) {
  ArchitectureSpace a;
  a.types = {{"R", {1.0, 10.0, 600.0, 1200.0}},
             {"L", {1e-6, 10e-3, 15.24e-3, 61.86e-3}},
             {"C", {1e-12, 119.37e-9, 155.12e-9, 1e-5}}};
  a.node_count = s.node_count;
  a.max_components = s.max_components;
  a.fixed_terminals = {s.input_node, s.output_node, 0};
  a.validate();
  return a;
}

/// Third-order ladder: series R, shunt C, series L, shunt C at the output.
inline Netlist butterworth_seed_netlist(const LowpassSettings& s = {}) {
  Netlist n;
  n.input_node = s.input_node;
  n.output_node = s.output_node;
  n.add(ElementKind::R, s.input_node, 3, 600.0);
  n.add(ElementKind::C, 3, 0, 119.37e-9);
  n.add(ElementKind::L, 3, s.output_node, 61.86e-3);
  n.add(ElementKind::C, s.output_node, 0, 155.12e-9);
  return n;
}

inline Chromosome butterworth_seed(const ArchitectureSpace& space, const LowpassSettings& s = {}) {
  return encode(space, butterworth_seed_netlist(s));
}

/// Output layout of the architecture-search simulator.
inline std::vector<std::string> step1_output_names() {
  return {"magnitude_deviation", "phase_deviation", "active_count", "dc_gain_db",
          "bandwidth_hz",        "phase_at_bw_deg", "gain_200hz_db", "gain_500hz_db",
          "gain_2000hz_db"};
}

/// Architecture search: minimize the three filter objectives.
inline DesignProblem lowpass_step1_problem(const ArchitectureSpace& space, const LowpassSettings& s = {}) {
  DesignProblem p;
  p.name = "lowpass-architecture";
  p.variables = space.variables();
  p.spec.output_names = step1_output_names();
  p.spec.objectives = {{0, Direction::minimize}, {1, Direction::minimize}, {2, Direction::minimize}};
  const auto grid = s.grid();
  p.simulator = [space, s, grid](const DesignPoint& x) -> SimulationResult {
    try {
      const Netlist n = decode(space, x, s.input_node, s.output_node);
      const auto r = ac_solve(n, grid);
      const auto m = measure(r, s.probes_hz, n.elements.size());
      const auto obj = filter_objectives(r, n.elements.size(), s.target);
      std::vector<double> out{obj[0], obj[1], obj[2], m.dc_gain_db, m.bandwidth_hz, m.phase_at_bw_deg};
      out.insert(out.end(), m.probe_gains_db.begin(), m.probe_gains_db.end());
      for (double v : out)
        if (!std::isfinite(v)) return std::nullopt;
      return out;
    } catch (const InvalidDesign&) {
      return std::nullopt;
    }
  };
  return p;
}

inline std::vector<std::string> step2_output_names() {
  return {"gain_db", "bandwidth_hz", "gain_200hz_db", "gain_500hz_db", "gain_2000hz_db",
          "bandwidth_error_hz"};
}

/// A netlist whose element values are the design variables.
struct FixedArchitecture {
  Netlist netlist;
  DesignPoint nominal;  // element values, clamped into the variable ranges
};

/// Value tuning of a fixed netlist: gain and bandwidth are hard
/// constraints; the objective is |bandwidth - cutoff|.
inline DesignProblem lowpass_step2_problem(const Netlist& netlist, const LowpassSettings& s = {},
                                           DesignPoint* nominal = nullptr) {
  DesignProblem p;
  p.name = "lowpass-values";
  DesignPoint nom;
  for (const auto& e : netlist.elements) {
    const Interval range = e.kind == ElementKind::R   ? s.resistor
                           : e.kind == ElementKind::C ? s.capacitor
                                                      : s.inductor;
    p.variables.push_back(
        DesignVariable::continuous(std::string(to_string(e.kind)) + std::to_string(e.id), range.lower,
                                   range.upper, e.kind == ElementKind::R   ? "ohm"
                                                : e.kind == ElementKind::C ? "F"
                                                                           : "H"));
    nom.values.push_back(std::clamp(e.value, range.lower, range.upper));
  }
  if (nominal) *nominal = nom;
  p.spec.output_names = step2_output_names();
  p.spec.objectives = {{5, Direction::minimize}};
  p.spec.hard_constraints = {{0, Relation::greater_equal, s.gain_db.lower},
                             {0, Relation::less_equal, s.gain_db.upper},
                             {1, Relation::greater_equal, s.bandwidth_hz.lower},
                             {1, Relation::less_equal, s.bandwidth_hz.upper}};
  const auto grid = s.grid();
  p.simulator = [netlist, s, grid](const DesignPoint& x) -> SimulationResult {
    Netlist n = netlist;
    for (std::size_t i = 0; i < n.elements.size(); ++i) n.elements[i].value = x[i];
    try {
      const auto r = ac_solve(n, grid);
      const auto m = measure(r, s.probes_hz, n.elements.size());
      std::vector<double> out{m.dc_gain_db, m.bandwidth_hz};
      out.insert(out.end(), m.probe_gains_db.begin(), m.probe_gains_db.end());
      out.push_back(std::abs(m.bandwidth_hz - s.target.cutoff_hz));
      for (double v : out)
        if (!std::isfinite(v)) return std::nullopt;
      return out;
    } catch (const InvalidDesign&) {
      return std::nullopt;
    }
  };
  return p;
}

}  // namespace assent::circuits
