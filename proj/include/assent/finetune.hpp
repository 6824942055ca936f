#pragma once

// Step 2: surrogate-guided fine-tuning. Each trial fits an MLP to simulations
// around a nominal design, asks the MILP encoding for an input predicted to
// meet every hard constraint (and to beat the best objective so far),
// simulates it, and repeats until the trial budget is spent.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "assent/core/format.hpp"
#include "assent/core/random.hpp"
#include "assent/design_space.hpp"
#include "assent/milp/branch_bound.hpp"
#include "assent/milp/encode.hpp"
#include "assent/sobol.hpp"
#include "assent/surrogate/train.hpp"

namespace assent {

struct FineTuneConfig {
  std::size_t trials = 50;
  std::size_t max_valid_sims = 20;                  // first trial
  std::optional<std::size_t> max_valid_sims_later;  // trials 2.. (defaults to the first)
  std::size_t architecture_update_freq = 10;
  double box_fraction = 0.7;
  std::size_t init_sobol_count = 10;
  bool reuse_step1_buffer = false;
  std::function<bool(const EvaluationRecord&)> reuse_filter;  // unset: every valid Step-1 record
  std::vector<std::vector<std::size_t>> architecture_library{
      {40, 20, 8}, {30}, {15}, {100}, {50}, {200}, {20, 20, 8}, {300}, {400}, {500}, {600}};
  std::optional<double> improvement_margin;  // default: Improvement::epsilon()
  std::optional<std::chrono::duration<double>> wall_clock_limit;
  std::uint64_t rng_seed = 0;
  TrainConfig train;
  MILPOptions milp;
  /// Consecutive invalid simulations tolerated before a trial gives up.
  std::size_t max_invalid_streak = 1000;

  std::size_t budget(std::size_t trial_index) const {
    return trial_index == 0 ? max_valid_sims : max_valid_sims_later.value_or(max_valid_sims);
  }

  void validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (max_valid_sims < 1 || (max_valid_sims_later && *max_valid_sims_later < 1))
      throw std::invalid_argument("max_valid_sims must be >= 1");
    if (architecture_update_freq < 1) throw std::invalid_argument("architecture_update_freq must be >= 1");
    if (!(box_fraction > 0.0)) throw std::invalid_argument("box_fraction must be > 0");
    if (architecture_library.empty()) throw std::invalid_argument("architecture_library is empty");
    for (const auto& a : architecture_library)
      if (a.empty() || std::find(a.begin(), a.end(), 0u) != a.end())
        throw std::invalid_argument("architecture entries need >= 1 layer of >= 1 unit");
  }
};

/// Σ |obs − bound| / |bound| over violated hard constraints; a zero bound
/// uses denominator 1.
inline double fractional_deviation(const Specification& spec, const EvaluationRecord& rec) {
  if (!rec.valid) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (const auto& c : spec.hard_constraints) {
    const double obs = rec.raw_outputs.at(c.output_index);
    if (c.satisfied(obs)) continue;
    d += std::abs(obs - c.bound) / (c.bound == 0.0 ? 1.0 : std::abs(c.bound));
  }
  return d;
}

enum class TraceSource { init, milp, fallback };

inline const char* to_string(TraceSource s) {
  switch (s) {
    case TraceSource::init: return "init";
    case TraceSource::milp: return "milp";
    case TraceSource::fallback: return "fallback";
  }
  return "";
}

struct TraceRow {
  std::size_t simulation_index = 0;
  int trial_id = 0;
  TraceSource source = TraceSource::init;
  double objective = 0.0;  // minimization convention
  double deviation = 0.0;
  double best_obj = 0.0;
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "simulation_index,trial_id,source,objective,deviation,best_obj\n";
  for (const auto& r : rows)
    os << r.simulation_index << ',' << r.trial_id << ',' << to_string(r.source) << ','
       << format_double(r.objective) << ',' << format_double(r.deviation) << ','
       << format_double(r.best_obj) << '\n';
}

struct FineTuneState {
  double best_obj = std::numeric_limits<double>::infinity();
  std::optional<EvaluationRecord> best_record;
  DesignPoint nominal;
  int trial_id = 0;
  std::size_t valid_sim_count = 0;  // this trial
  Dataset training_set;
  std::vector<TraceRow> trace;
  std::size_t milp_feasible = 0;
  std::size_t milp_infeasible = 0;
  std::size_t milp_timeouts = 0;
};

/// Step-2 counters used by the report.
struct Step2Result {
  DesignPoint best_point;
  EvaluationRecord best_record;
  bool feasible = false;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<TraceRow> trace;
  std::size_t trials_run = 0;
  std::size_t simulations = 0;  // fresh simulator calls
  std::size_t milp_feasible = 0;
  std::size_t milp_infeasible = 0;
  std::size_t milp_timeouts = 0;
};

namespace detail {

inline double step2_objective(const Specification& spec, const EvaluationRecord& rec) {
  return objective_values(spec, rec).at(0);
}

inline Sample to_sample(const EvaluationRecord& rec) { return {rec.input.values, rec.raw_outputs}; }

inline std::vector<OutputConstraint> output_constraints(const Specification& spec) {
  std::vector<OutputConstraint> out;
  for (const auto& c : spec.hard_constraints)
    out.push_back({c.output_index,
                   c.relation == Relation::less_equal ? RowSense::less_equal : RowSense::greater_equal,
                   c.bound});
  return out;
}

inline DesignPoint clip_to(const std::vector<double>& x, const Box& box) {
  DesignPoint p;
  p.values.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::clamp(x[i], box[i].lower, box[i].upper);
  return p;
}

/// Ordering used for nominal replacement: deviation, objective, index.
inline bool better_nominal(const Specification& spec, const EvaluationRecord& a, const EvaluationRecord& b) {
  const double da = fractional_deviation(spec, a), db = fractional_deviation(spec, b);
  if (da != db) return da < db;
  const double oa = step2_objective(spec, a), ob = step2_objective(spec, b);
  if (oa != ob) return oa < ob;
  return a.simulation_index < b.simulation_index;
}

}  // namespace detail

/// One trial around state.nominal. Updates best_obj/best_record, the trace,
/// and state.nominal (to the trial's least-deviation record).
inline void run_trial(const DesignProblem& problem, FineTuneState& state, const FineTuneConfig& cfg,
                      SobolStream& sobol, SimulationBuffer& buffer, std::size_t budget,
                      const std::vector<EvaluationRecord>& reuse = {},
                      std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) {
  using clock = std::chrono::steady_clock;
  const Specification& spec = problem.spec;
  const Box global = problem.box();
  const Box box = box_around(state.nominal, cfg.box_fraction, global);
  const auto& obj = spec.objectives.at(0);
  state.valid_sim_count = 0;
  state.training_set.clear();
  for (const auto& r : reuse) state.training_set.push_back(detail::to_sample(r));

  std::vector<EvaluationRecord> trial_records;
  std::size_t invalid_streak = 0;
  auto out_of_time = [&] { return deadline && clock::now() >= *deadline; };

  auto record = [&](const EvaluationRecord& rec, TraceSource source) {
    if (!rec.valid) {
      ++invalid_streak;
      return false;
    }
    invalid_streak = 0;
    ++state.valid_sim_count;
    trial_records.push_back(rec);
    state.training_set.push_back(detail::to_sample(rec));
    const double o = detail::step2_objective(spec, rec);
    if (satisfies_constraints(spec, rec) && o < state.best_obj) {
      state.best_obj = o;
      state.best_record = rec;
    }
    state.trace.push_back({rec.simulation_index, state.trial_id, source, o, fractional_deviation(spec, rec),
                           state.best_obj});
    return true;
  };
  // Sobol draws until one valid simulation (or the invalid streak limit).
  auto sobol_until_valid = [&](Provenance prov, TraceSource source) {
    while (invalid_streak < cfg.max_invalid_streak) {
      const auto rec = evaluate(problem, scale_to_box(sobol.next(), box), buffer, prov, state.trial_id);
      if (record(rec, source)) return true;
    }
    return false;
  };

  for (std::size_t i = 0; i < cfg.init_sobol_count && state.valid_sim_count < budget && !out_of_time(); ++i)
    if (!sobol_until_valid(Provenance::step2_init, TraceSource::init)) break;

  std::optional<MLPModel> model;
  std::vector<std::size_t> architecture;
  std::size_t since_selection = 0;
  std::size_t iteration = 0;
  while (state.valid_sim_count < budget && invalid_streak < cfg.max_invalid_streak && !out_of_time()) {
    TrainConfig tc = cfg.train;
    tc.rng_seed = derive_seed(cfg.rng_seed, "train/" + std::to_string(state.trial_id) + "/" +
                                                std::to_string(iteration++));
    if (state.training_set.size() < 5) {
      if (!sobol_until_valid(Provenance::step2_random, TraceSource::fallback)) break;
      continue;
    }
    if (!model || since_selection >= cfg.architecture_update_freq) {
      auto sel = select_architecture(cfg.architecture_library, state.training_set, tc);
      architecture = cfg.architecture_library[sel.library_index];
      model = std::move(sel.best.model);
      since_selection = 0;
    } else {
      model = train(state.training_set, architecture, tc, &*model).model;
    }

    std::optional<Improvement> improvement;
    if (std::isfinite(state.best_obj))
      improvement = Improvement{obj.output_index, obj.direction,
                                obj.direction == Direction::minimize ? state.best_obj : -state.best_obj,
                                cfg.improvement_margin};
    std::optional<DesignPoint> candidate;
    if (model->finite()) {
      const auto milp = encode_network(*model, box, detail::output_constraints(spec), improvement);
      const auto sol = solve_milp(milp, *model, cfg.milp);
      if (sol.status == MILPStatus::feasible) {
        ++state.milp_feasible;
        candidate = detail::clip_to(sol.input, box);
      } else if (sol.status == MILPStatus::timeout) {
        ++state.milp_timeouts;
      } else {
        ++state.milp_infeasible;
      }
    } else {
      ++state.milp_infeasible;
    }

    const std::size_t before = state.valid_sim_count;
    // A witness that is already in the buffer adds no information; sample
    // instead so the surrogate sees new data.
    if (candidate && !buffer.contains(*candidate)) {
      const auto rec = evaluate(problem, *candidate, buffer, Provenance::step2_milp, state.trial_id);
      if (!record(rec, TraceSource::milp)) sobol_until_valid(Provenance::step2_random, TraceSource::fallback);
    } else {
      sobol_until_valid(Provenance::step2_random, TraceSource::fallback);
    }
    since_selection += state.valid_sim_count - before;
  }

  if (!trial_records.empty()) {
    const EvaluationRecord* pick = &trial_records.front();
    for (const auto& r : trial_records)
      if (detail::better_nominal(spec, r, *pick)) pick = &r;
    state.nominal = pick->input;
  }
}

/// Runs the trials from `nominal`; returns the best hard-constraint
/// satisfying record, or the least-deviation record flagged infeasible.
inline Step2Result run_step2(const DesignProblem& problem, const DesignPoint& nominal, SimulationBuffer& buffer,
                             const FineTuneConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  problem.spec.validate();
  if (problem.spec.objectives.empty()) throw std::invalid_argument("step 2 needs an objective");
  if (!problem.contains(nominal)) throw std::invalid_argument("nominal design is outside the variable domains");
  const auto start = clock::now();
  std::optional<clock::time_point> deadline;
  if (cfg.wall_clock_limit)
    deadline = start + std::chrono::duration_cast<clock::duration>(*cfg.wall_clock_limit);
  const std::size_t start_sims = buffer.size();

  std::vector<EvaluationRecord> reuse;
  if (cfg.reuse_step1_buffer)
    for (const auto& r : buffer.records())
      if (r.provenance == Provenance::step1 && r.valid && r.input.size() == nominal.size() &&
          (!cfg.reuse_filter || cfg.reuse_filter(r)))
        reuse.push_back(r);

  FineTuneState state;
  state.nominal = nominal;
  const auto nominal_rec = evaluate(problem, nominal, buffer, Provenance::step2_init, 0);
  EvaluationRecord least_dev = nominal_rec;
  if (satisfies_constraints(problem.spec, nominal_rec)) {
    state.best_obj = detail::step2_objective(problem.spec, nominal_rec);
    state.best_record = nominal_rec;
  }

  SobolStream sobol(nominal.size(), 1);
  Step2Result result;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    if (deadline && clock::now() >= *deadline) break;
    state.trial_id = static_cast<int>(t + 1);
    const std::size_t first_row = state.trace.size();
    run_trial(problem, state, cfg, sobol, buffer, cfg.budget(t), reuse, deadline);
    ++result.trials_run;
    for (std::size_t k = first_row; k < state.trace.size(); ++k) {
      const auto& rec = buffer.at(state.trace[k].simulation_index);
      if (!least_dev.valid || detail::better_nominal(problem.spec, rec, least_dev)) least_dev = rec;
    }
  }

  result.trace = std::move(state.trace);
  result.milp_feasible = state.milp_feasible;
  result.milp_infeasible = state.milp_infeasible;
  result.milp_timeouts = state.milp_timeouts;
  result.simulations = buffer.size() - start_sims;
  if (state.best_record) {
    result.feasible = true;
    result.best_record = *state.best_record;
    result.best_obj = state.best_obj;
  } else {
    result.best_record = least_dev;
    result.best_obj = least_dev.valid ? detail::step2_objective(problem.spec, least_dev)
                                      : std::numeric_limits<double>::infinity();
  }
  result.best_point = result.best_record.input;
  return result;
}

}  // namespace assent
