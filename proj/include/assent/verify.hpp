#pragma once

// Oracle agreement suites shared by `assent verify` and the acceptance runner.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "assent/circuits/filter.hpp"
#include "assent/circuits/mna.hpp"
#include "assent/evolve/ranking.hpp"
#include "assent/milp/branch_bound.hpp"
#include "assent/oracles/activation.hpp"
#include "assent/oracles/dominance.hpp"
#include "assent/oracles/lp_vertex.hpp"
#include "assent/oracles/mna.hpp"
#include "assent/oracles/sobol_reference.hpp"
#include "assent/sobol.hpp"

namespace assent::verify {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

template <class F>
SuiteResult timed(std::string name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  r.name = std::move(name);
  std::ostringstream detail;
  r.passed = body(detail);
  r.detail = detail.str();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline bool holds(const OutputConstraint& c, double scaled_value, double scaled_bound, double tol) {
  return c.sense == RowSense::less_equal ? scaled_value <= scaled_bound + tol : scaled_value >= scaled_bound - tol;
}

}  // namespace detail

/// Witnesses of satisfiable random problems, replayed through the forward pass.
inline SuiteResult milp_soundness(std::size_t nets = 100, std::uint64_t seed = 101) {
  return detail::timed("milp-soundness", [&](std::ostream& os) {
    Engine rng(seed);
    std::size_t feasible = 0, timeouts = 0, bad = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < nets; ++t) {
      const auto m = oracles::random_relu_net(rng, 1 + uniform_index(rng, 4), 1 + uniform_index(rng, 3), 3, 16);
      const auto box = oracles::random_box(rng, m.input_size());
      const auto cons = oracles::satisfiable_constraints(rng, m, box);
      const auto r = solve_milp(encode_network(m, box, cons), m);
      if (r.status == MILPStatus::timeout) {
        ++timeouts;
        continue;
      }
      if (r.status != MILPStatus::feasible) {
        ++bad;
        continue;
      }
      ++feasible;
      const auto y = m.forward(r.input);
      for (const auto& c : cons) {
        const double v = m.output_scaler.apply(c.output, y[c.output]);
        const double b = m.output_scaler.apply(c.output, c.bound);
        const double viol = c.sense == RowSense::less_equal ? v - b : b - v;
        worst = std::max(worst, viol);
        if (!detail::holds(c, v, b, 1e-5)) ++bad;
      }
    }
    os << nets << " nets, " << feasible << " witnesses, worst violation " << worst << ", " << timeouts
       << " timeouts, " << bad << " failures";
    return bad == 0 && timeouts == 0;
  });
}

/// Branch-and-bound verdicts against exhaustive activation-pattern LPs.
inline SuiteResult milp_completeness(std::size_t nets = 100, std::uint64_t seed = 202) {
  return detail::timed("milp-completeness", [&](std::ostream& os) {
    Engine rng(seed);
    std::size_t agree = 0, feasible = 0;
    for (std::size_t t = 0; t < nets; ++t) {
      const auto m = oracles::random_relu_net(rng, 1 + uniform_index(rng, 3), 1 + uniform_index(rng, 2), 3, 6, 10);
      const auto box = oracles::random_box(rng, m.input_size());
      const auto cons = oracles::random_constraints(rng, m, box);
      const auto r = solve_milp(encode_network(m, box, cons), m);
      const auto o = oracles::enumerate_activation_patterns(m, box, cons, 10);
      if (r.status != MILPStatus::timeout && (r.status == MILPStatus::feasible) == o.feasible) ++agree;
      feasible += o.feasible;
    }
    os << agree << "/" << nets << " verdicts agree (" << feasible << " feasible)";
    return agree == nets;
  });
}

/// Simplex optima and verdicts against vertex enumeration and recession cones.
inline SuiteResult simplex(std::size_t bounded = 500, std::size_t open = 200, std::uint64_t seed = 303) {
  return detail::timed("simplex", [&](std::ostream& os) {
    Engine rng(seed);
    std::size_t ok = 0, optimal = 0, unbounded = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < bounded; ++t) {
      const auto lp = oracles::random_bounded_lp(rng, 6, 8);
      const auto r = solve_lp(lp);
      const auto o = oracles::enumerate_vertices(lp);
      if ((r.status == LPStatus::optimal) != o.feasible || r.numeric_warning) continue;
      if (o.feasible) {
        ++optimal;
        const double err = std::abs(r.objective - o.objective);
        worst = std::max(worst, err);
        if (err > 1e-7) continue;
      }
      ++ok;
    }
    for (std::size_t t = 0; t < open; ++t) {
      const auto lp = oracles::random_feasible_open_lp(rng);
      const auto r = solve_lp(lp);
      const bool expect = oracles::is_unbounded_given_feasible(lp);
      if (r.status == LPStatus::infeasible || (r.status == LPStatus::unbounded) != expect) continue;
      unbounded += expect;
      ++ok;
    }
    os << ok << "/" << bounded + open << " agree (" << optimal << " optimal, " << bounded - optimal
       << " infeasible, " << unbounded << " unbounded), worst objective error " << worst;
    return ok == bounded + open;
  });
}

/// Fronts against the quadratic dominance oracle; crowding extremes are +inf.
inline SuiteResult ranking(std::size_t populations = 200, std::uint64_t seed = 404) {
  return detail::timed("nsga2-ranking", [&](std::ostream& os) {
    Engine rng(seed);
    std::size_t ok = 0;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < populations; ++t) {
      const auto objs = oracles::random_objectives(rng, 64, 2, 4);
      const auto r = rank_population(objs);
      bool good = r.front == oracles::brute_force_fronts(objs);
      for (const auto& f : r.fronts) {
        for (std::size_t m = 0; m < objs.front().size() && good; ++m) {
          double lo = inf, hi = -inf;
          for (auto i : f) {
            lo = std::min(lo, objs[i][m]);
            hi = std::max(hi, objs[i][m]);
          }
          bool lo_inf = false, hi_inf = false;
          for (auto i : f) {
            lo_inf = lo_inf || (objs[i][m] == lo && r.crowding[i] == inf);
            hi_inf = hi_inf || (objs[i][m] == hi && r.crowding[i] == inf);
          }
          good = lo_inf && hi_inf;
        }
      }
      ok += good;
    }
    os << ok << "/" << populations << " populations match";
    return ok == populations;
  });
}

/// 1-D prefix against the Gray-code van der Corput reference, plus dyadic
/// balance of every aligned block of 2^k points for k <= 6.
inline SuiteResult sobol() {
  return detail::timed("sobol", [&](std::ostream& os) {
    const std::vector<double> expect{0, 0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125};
    SobolStream s(1);
    bool prefix = true;
    for (std::size_t i = 0; i < expect.size(); ++i) {
      const double v = s.point_at(i)[0];
      prefix = prefix && v == expect[i] && v == oracles::sobol_first_dimension(i);
    }
    for (std::uint64_t i = 0; i < 4096; ++i) prefix = prefix && s.point_at(i)[0] == oracles::sobol_first_dimension(i);
    bool balanced = true;
    for (int k = 0; k <= 6; ++k) {
      const std::uint64_t len = 1ULL << k;
      for (std::uint64_t j = 0; j < 16; ++j) {
        std::set<std::uint64_t> cells;
        for (std::uint64_t i = 0; i < len; ++i) cells.insert(std::uint64_t(s.point_at(j * len + i)[0] * double(len)));
        balanced = balanced && cells.size() == len;
      }
    }
    os << "prefix " << (prefix ? "matches" : "differs") << ", dyadic balance " << (balanced ? "holds" : "fails");
    return prefix && balanced;
  });
}

/// RC corner and phase, RLC and divider responses against closed forms.
inline SuiteResult mna_fixtures() {
  return detail::timed("mna-fixtures", [&](std::ostream& os) {
    using namespace circuits;
    const auto grid = default_grid();
    const auto rc = ac_solve(oracles::rc_netlist(159.155, 1e-6), grid);
    const auto m = measure(rc, {}, 2);
    const double fc_err = std::abs(m.bandwidth_hz - 1000.0) / 1000.0;
    const auto at_fc = ac_solve(oracles::rc_netlist(159.155, 1e-6), {1000.0});
    const double phase = rad_to_deg(std::arg(at_fc.transfer[0]));
    const double phase_err = std::abs(m.phase_at_bw_deg + 45.0);
    const double phase_err_exact = std::abs(phase + 45.0);
    double rlc_err = 0.0, div_err = 0.0;
    const auto rlc = ac_solve(oracles::rlc_netlist(600, 61.86e-3, 155.12e-9), grid);
    const auto div = ac_solve(oracles::divider_netlist(1000, 3000), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto ref = oracles::rlc_lowpass(600, 61.86e-3, 155.12e-9, grid[i]);
      rlc_err = std::max(rlc_err, std::abs(rlc.transfer[i] - ref) / std::abs(ref));
      const double dref = oracles::divider(1000, 3000);
      div_err = std::max(div_err, std::abs(div.transfer[i] - dref) / dref);
    }
    os << "RC corner " << m.bandwidth_hz << " Hz (" << 100 * fc_err << "%), phase at corner " << m.phase_at_bw_deg
       << " deg (exact-frequency " << phase << "), RLC max rel err " << rlc_err << ", divider " << div_err;
    return fc_err <= 0.005 && m.bandwidth_crossed && phase_err <= 0.5 && phase_err_exact <= 0.5 && rlc_err <= 1e-3 &&
           div_err <= 1e-3;
  });
}

inline std::vector<SuiteResult> all() {
  return {milp_soundness(), milp_completeness(), simplex(), ranking(), sobol(), mna_fixtures()};
}

}  // namespace assent::verify
