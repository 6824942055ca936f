#pragma once

// Step 1: NSGA-II evolutionary search producing a coarse design.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "assent/core/format.hpp"
#include "assent/core/random.hpp"
#include "assent/design_space.hpp"
#include "assent/evolve/chromosome.hpp"
#include "assent/evolve/ranking.hpp"
#include "assent/sobol.hpp"

namespace assent {

struct StopCriteria {
  std::optional<double> metric_threshold;  // stop once best metric <= threshold
  std::size_t stall_generations = 0;       // 0 disables the stall test
  std::size_t min_generations = 0;         // stall test only after this many
  std::size_t max_simulations = 0;         // 0 = unlimited fresh simulations
};

struct GAConfig {
  std::size_t population_size = 50;
  std::size_t max_generations = 100;
  double crossover_prob = 0.9;
  double mutation_prob = 0.1;
  std::size_t tournament_size = 10;
  bool tournament_with_replacement = true;
  std::vector<Chromosome> seeds;
  StopCriteria stop;
  std::size_t final_metric = 0;
  std::uint64_t rng_seed = 0;
  unsigned jobs = 1;
  /// Adds one objective per hard constraint: its violation (0 when met).
  bool constraints_as_objectives = true;
  /// Architecture search when set; otherwise values mode over the problem's
  /// variables.
  std::optional<ArchitectureSpace> architecture;
  /// Values mode: continuous variables become Sobol catalogs of this size
  /// (0 keeps them continuous).
  std::size_t catalog_count = 100;

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
    if (max_generations < 1) throw std::invalid_argument("max_generations must be >= 1");
    if (crossover_prob < 0 || crossover_prob > 1 || mutation_prob < 0 || mutation_prob > 1)
      throw std::invalid_argument("probabilities must lie in [0, 1]");
    if (tournament_size < 2 || tournament_size > population_size)
      throw std::invalid_argument("tournament_size must be in [2, population_size]");
    if (seeds.size() > population_size) throw std::invalid_argument("more seeds than population");
    if (architecture) architecture->validate();
  }
};

struct RankedPopulation {
  std::vector<Chromosome> members;
  std::vector<EvaluationRecord> records;
  ObjectiveMatrix objectives;
  std::vector<std::size_t> front_index;
  std::vector<double> crowding;

  std::size_t size() const { return members.size(); }
  Ranking ranking() const { return {front_index, crowding, {}}; }
};

struct GenerationStats {
  std::size_t generation = 0;
  std::vector<double> best;
  std::vector<double> mean;
  std::size_t front0_count = 0;
  std::size_t cumulative_simulations = 0;
};

enum class StopReason { metric_threshold, stall, max_generations, max_simulations };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::metric_threshold: return "metric_threshold";
    case StopReason::stall: return "stall";
    case StopReason::max_generations: return "max_generations";
    case StopReason::max_simulations: return "max_simulations";
  }
  return "";
}

struct Step1Result {
  Chromosome best;
  std::size_t best_index = 0;
  EvaluationRecord best_record;
  RankedPopulation final_population;
  std::vector<GenerationStats> trace;
  StopReason stop_reason = StopReason::max_generations;
  std::size_t simulations = 0;  // fresh simulator calls made by this run
};

/// Search space as seen by the operators.
struct SearchSpace {
  const ArchitectureSpace* architecture = nullptr;
  std::vector<DesignVariable> variables;  // values mode (possibly discretized)
};

inline SearchSpace make_search_space(const DesignProblem& problem, const GAConfig& cfg) {
  SearchSpace s;
  if (cfg.architecture) {
    s.architecture = &*cfg.architecture;
  } else {
    s.variables = cfg.catalog_count ? discretize(problem.variables, cfg.catalog_count)
                                    : problem.variables;
  }
  return s;
}

inline DesignPoint decode_point(const Chromosome& c, const SearchSpace& space) {
  if (c.mode == ChromosomeMode::architecture) return space.architecture->encode(c.genes);
  return c.values;
}

/// Seeds first; the rest random. Architecture members are drawn gene by gene
/// and repaired; values members are Sobol points over the variable domains.
inline std::vector<Chromosome> initialize_population(const GAConfig& cfg, const SearchSpace& space,
                                                     SobolStream& sobol, Engine& rng) {
  std::vector<Chromosome> pop = cfg.seeds;
  if (space.architecture) {
    const auto& arch = *space.architecture;
    for (auto& s : pop)
      if (s.mode != ChromosomeMode::architecture || s.genes.size() != arch.max_components)
        throw std::invalid_argument("seed does not match the architecture space");
    while (pop.size() < cfg.population_size) {
      std::vector<Gene> genes;
      genes.reserve(arch.max_components);
      for (std::size_t g = 0; g < arch.max_components; ++g) genes.push_back(random_gene(arch, rng));
      pop.push_back(repair(make_architecture(std::move(genes)), arch.fixed_terminals));
    }
  } else {
    if (sobol.dimension() != space.variables.size())
      throw std::invalid_argument("Sobol stream dimension must equal the variable count");
    while (pop.size() < cfg.population_size) {
      auto u = sobol.next();
      DesignPoint p;
      p.values.resize(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) p[i] = value_from_unit(space.variables[i], u[i]);
      pop.push_back(make_values(std::move(p)));
    }
  }
  return pop;
}

/// k candidates drawn uniformly; the crowded-comparison winner is returned.
inline std::size_t tournament_select(const Ranking& ranking, std::size_t population,
                                     std::size_t k, Engine& rng, bool with_replacement = true) {
  std::size_t best = uniform_index(rng, population);
  std::vector<std::size_t> seen{best};
  for (std::size_t i = 1; i < k; ++i) {
    std::size_t c;
    if (with_replacement) {
      c = uniform_index(rng, population);
    } else {
      do c = uniform_index(rng, population);
      while (std::find(seen.begin(), seen.end(), c) != seen.end());
      seen.push_back(c);
    }
    if (crowded_less(ranking, c, best)) best = c;
  }
  return best;
}

inline std::vector<double> ga_objectives(const Specification& spec, const EvaluationRecord& rec,
                                         bool constraints_as_objectives) {
  auto obj = objective_values(spec, rec);
  if (constraints_as_objectives)
    for (const auto& c : spec.hard_constraints)
      obj.push_back(rec.valid ? std::max(0.0, -c.slack(rec.raw_outputs.at(c.output_index)))
                              : kInvalidObjective);
  return obj;
}

inline void write_generation_csv(std::ostream& os, const std::vector<GenerationStats>& trace) {
  const std::size_t m = trace.empty() ? 0 : trace.front().best.size();
  os << "generation";
  for (std::size_t k = 0; k < m; ++k) os << ",best_obj" << k;
  for (std::size_t k = 0; k < m; ++k) os << ",mean_obj" << k;
  os << ",front0_count,cumulative_simulations\n";
  for (const auto& g : trace) {
    os << g.generation;
    for (double v : g.best) os << ',' << format_double(v);
    for (double v : g.mean) os << ',' << format_double(v);
    os << ',' << g.front0_count << ',' << g.cumulative_simulations << '\n';
  }
}

/// Runs the evolutionary loop until a stop criterion fires. `max_generations`
/// counts evaluated populations, the initial one included.
inline Step1Result run_step1(const DesignProblem& problem, const GAConfig& cfg,
                             SimulationBuffer& buffer) {
  cfg.validate();
  problem.spec.validate();
  const SearchSpace space = make_search_space(problem, cfg);
  Engine rng(cfg.rng_seed);
  SobolStream sobol(space.architecture ? 1 : std::max<std::size_t>(1, space.variables.size()));
  const std::size_t start_sims = buffer.size();
  const std::size_t P = cfg.population_size;

  auto evaluate_members = [&](const std::vector<Chromosome>& members) {
    std::vector<DesignPoint> pts;
    pts.reserve(members.size());
    for (const auto& c : members) pts.push_back(decode_point(c, space));
    return evaluate_batch(problem, pts, buffer, Provenance::step1, 0, cfg.jobs);
  };
  auto objectives_of = [&](const std::vector<EvaluationRecord>& recs) {
    ObjectiveMatrix m;
    m.reserve(recs.size());
    for (const auto& r : recs) m.push_back(ga_objectives(problem.spec, r, cfg.constraints_as_objectives));
    return m;
  };

  RankedPopulation pop;
  pop.members = initialize_population(cfg, space, sobol, rng);
  pop.records = evaluate_members(pop.members);
  pop.objectives = objectives_of(pop.records);
  if (cfg.final_metric >= pop.objectives.front().size())
    throw std::invalid_argument("final_metric is not a valid objective index");

  auto rerank = [&](RankedPopulation& p) {
    auto r = rank_population(p.objectives);
    p.front_index = std::move(r.front);
    p.crowding = std::move(r.crowding);
  };
  rerank(pop);

  Step1Result result;
  double best_metric = std::numeric_limits<double>::infinity();
  std::size_t last_improvement = 0;

  for (std::size_t gen = 0;; ++gen) {
    GenerationStats st;
    st.generation = gen;
    const std::size_t m = pop.objectives.front().size();
    st.best.assign(m, std::numeric_limits<double>::infinity());
    st.mean.assign(m, 0.0);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        st.best[k] = std::min(st.best[k], pop.objectives[i][k]);
        st.mean[k] += pop.objectives[i][k] / double(pop.size());
      }
      st.front0_count += pop.front_index[i] == 0;
    }
    st.cumulative_simulations = buffer.size() - start_sims;
    result.trace.push_back(st);

    const double metric = st.best[cfg.final_metric];
    if (metric < best_metric) {
      best_metric = metric;
      last_improvement = gen;
    }

    std::optional<StopReason> stop;
    if (cfg.stop.metric_threshold && metric <= *cfg.stop.metric_threshold)
      stop = StopReason::metric_threshold;
    else if (cfg.stop.stall_generations && gen >= cfg.stop.min_generations &&
             gen - last_improvement >= cfg.stop.stall_generations)
      stop = StopReason::stall;
    else if (gen + 1 >= cfg.max_generations)
      stop = StopReason::max_generations;
    else if (cfg.stop.max_simulations && st.cumulative_simulations >= cfg.stop.max_simulations)
      stop = StopReason::max_simulations;
    if (stop) {
      result.stop_reason = *stop;
      break;
    }

    // Mating pool and reproduction.
    const Ranking ranking = pop.ranking();
    std::vector<std::size_t> pool(P);
    for (auto& idx : pool)
      idx = tournament_select(ranking, P, cfg.tournament_size, rng, cfg.tournament_with_replacement);

    std::vector<Chromosome> children;
    children.reserve(P);
    for (std::size_t i = 0; children.size() < P; i += 2) {
      const Chromosome& a = pop.members[pool[i % P]];
      const Chromosome& b = pop.members[pool[(i + 1) % P]];
      auto [x, y] = crossover(a, b, cfg.crossover_prob, rng);
      for (Chromosome* child : {&x, &y}) {
        if (children.size() == P) break;
        Chromosome c = mutate(std::move(*child), cfg.mutation_prob, rng, space.architecture,
                              &space.variables);
        if (space.architecture) c = repair(std::move(c), space.architecture->fixed_terminals);
        children.push_back(std::move(c));
      }
    }
    auto child_records = evaluate_members(children);
    auto child_objectives = objectives_of(child_records);

    // 2P -> P environmental selection.
    ObjectiveMatrix combined = pop.objectives;
    combined.insert(combined.end(), child_objectives.begin(), child_objectives.end());
    auto survivors = select_survivors(combined, P);
    RankedPopulation next;
    for (std::size_t idx : survivors) {
      if (idx < P) {
        next.members.push_back(pop.members[idx]);
        next.records.push_back(pop.records[idx]);
      } else {
        next.members.push_back(children[idx - P]);
        next.records.push_back(child_records[idx - P]);
      }
      next.objectives.push_back(combined[idx]);
    }
    rerank(next);
    pop = std::move(next);
  }

  // Final pick: hard-constraint-satisfying members first, then the metric.
  bool any_feasible = false;
  for (const auto& r : pop.records) any_feasible |= satisfies_constraints(problem.spec, r);
  std::size_t best = pop.size();
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (any_feasible && !satisfies_constraints(problem.spec, pop.records[i])) continue;
    if (best == pop.size()) {
      best = i;
      continue;
    }
    const double a = pop.objectives[i][cfg.final_metric];
    const double b = pop.objectives[best][cfg.final_metric];
    if (a < b || (a == b && pop.front_index[i] < pop.front_index[best])) best = i;
  }
  result.best_index = best;
  result.best = pop.members[best];
  result.best_record = pop.records[best];
  result.final_population = std::move(pop);
  result.simulations = buffer.size() - start_sims;
  return result;
}

}  // namespace assent
