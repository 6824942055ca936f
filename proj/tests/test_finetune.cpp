#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "assent/benchmarks.hpp"
#include "assent/finetune.hpp"

using namespace assent;

namespace {

EvaluationRecord valid_record(std::vector<double> outputs) {
  EvaluationRecord r;
  r.raw_outputs = std::move(outputs);
  r.valid = true;
  return r;
}

FineTuneConfig quick_config(std::uint64_t seed) {
  FineTuneConfig c;
  c.trials = 2;
  c.max_valid_sims = 12;
  c.init_sobol_count = 6;
  c.architecture_library = {{8}, {15}};
  c.rng_seed = seed;
  c.train.learning_rate = 3e-3;
  c.train.patience = 200;
  c.milp.time_limit = std::chrono::duration<double>(5.0);
  return c;
}

std::map<int, std::size_t> rows_per_trial(const std::vector<TraceRow>& trace) {
  std::map<int, std::size_t> n;
  for (const auto& r : trace) ++n[r.trial_id];
  return n;
}

}  // namespace

TEST(FractionalDeviation, SatisfiedConstraintContributesNothing) {
  Specification spec;
  spec.output_names = {"gain"};
  spec.hard_constraints = {{0, Relation::greater_equal, 57.6}};
  EXPECT_DOUBLE_EQ(fractional_deviation(spec, valid_record({58.1})), 0.0);
  EXPECT_NEAR(fractional_deviation(spec, valid_record({56.0})), 1.6 / 57.6, 1e-12);
  EXPECT_NEAR(fractional_deviation(spec, valid_record({56.0})), 0.02778, 1e-5);
}

TEST(FractionalDeviation, SumsViolations) {
  Specification spec;
  spec.output_names = {"peaking", "bandwidth"};
  spec.hard_constraints = {{0, Relation::less_equal, 1.0}, {1, Relation::greater_equal, 90.0}};
  EXPECT_NEAR(fractional_deviation(spec, valid_record({1.2, 81.0})), 0.3, 1e-12);
}

TEST(FractionalDeviation, ZeroBoundUsesUnitDenominator) {
  Specification spec;
  spec.output_names = {"v"};
  spec.hard_constraints = {{0, Relation::greater_equal, 0.0}};
  EXPECT_NEAR(fractional_deviation(spec, valid_record({-0.25})), 0.25, 1e-15);
}

TEST(FineTuneConfig, Validation) {
  FineTuneConfig c;
  EXPECT_NO_THROW(c.validate());
  c.trials = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.architecture_update_freq = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.architecture_library = {{10, 0}};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_valid_sims_later = 50;
  EXPECT_EQ(c.budget(0), 20u);
  EXPECT_EQ(c.budget(1), 50u);
}

TEST(Step2, ExactSurrogateFirstWitnessIsFeasible) {
  const auto p = benchmarks::linear_oracle();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    FineTuneConfig c;
    c.trials = 1;
    c.max_valid_sims = 12;
    c.architecture_library = {{8}};
    c.rng_seed = seed;
    c.train.learning_rate = 3e-3;
    c.train.patience = 500;
    SimulationBuffer buf;
    const auto res = run_step2(p, DesignPoint{{0, 0, 0}}, buf, c);
    const TraceRow* first = nullptr;
    for (const auto& r : res.trace)
      if (r.source == TraceSource::milp) {
        first = &r;
        break;
      }
    ASSERT_NE(first, nullptr) << seed;
    EXPECT_EQ(first->deviation, 0.0) << seed;
    EXPECT_TRUE(res.feasible);
  }
}

TEST(Step2, ImpossibleConstraintFallsBackEveryIteration) {
  const auto p = benchmarks::impossible_sphere();
  auto c = quick_config(4);
  c.trials = 3;
  c.max_valid_sims = 8;
  c.init_sobol_count = 3;
  SimulationBuffer buf;
  const auto res = run_step2(p, DesignPoint{{0.5, 0.5, 0.5, 0.5}}, buf, c);
  EXPECT_FALSE(res.feasible);
  EXPECT_EQ(res.milp_feasible, 0u);
  const auto counts = rows_per_trial(res.trace);
  for (int t = 1; t <= 3; ++t) EXPECT_EQ(counts.at(t), 8u) << t;
  std::size_t fallbacks = 0;
  for (const auto& r : res.trace) {
    EXPECT_FALSE(std::isfinite(r.best_obj));
    EXPECT_NE(r.source, TraceSource::milp);
    fallbacks += r.source == TraceSource::fallback;
  }
  EXPECT_EQ(fallbacks, 3u * (8 - 3));
}

TEST(Step2, BestObjectiveNeverIncreases) {
  const auto p = benchmarks::constrained_sphere();
  SimulationBuffer buf;
  const DesignPoint nominal{{0.3, 0.2, -0.1, 0.1}};
  const auto res = run_step2(p, nominal, buf, quick_config(2));
  ASSERT_TRUE(res.feasible);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : res.trace) {
    EXPECT_LE(r.best_obj, prev);
    prev = r.best_obj;
  }
  EXPECT_EQ(res.best_obj, prev);
  EXPECT_LE(res.best_obj, 0.3 * 0.3 + 0.04 + 0.01 + 0.01);
  // The returned point reproduces its objective through the simulator.
  const auto again = p.simulator(res.best_point);
  EXPECT_EQ((*again)[0], res.best_obj);
  EXPECT_GE((*again)[1], 0.2);
}

TEST(Step2, SphereImprovesTenfold) {
  const auto p = benchmarks::sphere(4, 1.0);
  auto c = quick_config(3);
  c.trials = 5;
  c.max_valid_sims = 20;
  SimulationBuffer buf;
  const auto res = run_step2(p, DesignPoint{{0.2, 0.1, 0, 0}}, buf, c);
  ASSERT_TRUE(res.feasible);
  EXPECT_LE(res.best_obj, 0.005);
}

TEST(Step2, OptimalNominalIsKept) {
  const auto p = benchmarks::constrained_sphere();
  auto c = quick_config(5);
  c.trials = 1;
  SimulationBuffer buf;
  const DesignPoint optimum{{0.2, 0, 0, 0}};
  const auto res = run_step2(p, optimum, buf, c);
  ASSERT_TRUE(res.feasible);
  EXPECT_EQ(res.best_point.values, optimum.values);
  EXPECT_DOUBLE_EQ(res.best_obj, 0.04);
}

TEST(Step2, InvalidSimulationsDoNotConsumeBudget) {
  auto p = benchmarks::sphere(2, 1.0);
  const auto inner = p.simulator;
  p.simulator = [inner](const DesignPoint& x) -> SimulationResult {
    if (x[0] > 0.3) return std::nullopt;
    return inner(x);
  };
  auto c = quick_config(6);
  c.trials = 1;
  c.max_valid_sims = 10;
  SimulationBuffer buf;
  const auto res = run_step2(p, DesignPoint{{0.25, 0.5}}, buf, c);
  EXPECT_EQ(rows_per_trial(res.trace).at(1), 10u);
  std::size_t invalid = 0;
  for (const auto& r : buf.records()) invalid += !r.valid;
  EXPECT_GT(invalid, 0u);
  EXPECT_EQ(res.simulations, buf.size());
}

TEST(Step2, LaterTrialBudget) {
  const auto p = benchmarks::constrained_sphere();
  auto c = quick_config(7);
  c.trials = 3;
  c.max_valid_sims = 7;
  c.max_valid_sims_later = 9;
  c.init_sobol_count = 4;
  SimulationBuffer buf;
  const auto res = run_step2(p, DesignPoint{{0.5, 0.5, 0.5, 0.5}}, buf, c);
  const auto counts = rows_per_trial(res.trace);
  EXPECT_EQ(counts.at(1), 7u);
  EXPECT_EQ(counts.at(2), 9u);
  EXPECT_EQ(counts.at(3), 9u);
}

TEST(Step2, Deterministic) {
  const auto p = benchmarks::constrained_sphere();
  const DesignPoint nominal{{0.4, 0.1, 0.1, -0.2}};
  SimulationBuffer a, b;
  const auto ra = run_step2(p, nominal, a, quick_config(9));
  const auto rb = run_step2(p, nominal, b, quick_config(9));
  std::ostringstream ta, tb, ba, bb;
  write_trace_csv(ta, ra.trace);
  write_trace_csv(tb, rb.trace);
  a.write_jsonl(ba);
  b.write_jsonl(bb);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(ba.str(), bb.str());
  EXPECT_EQ(ra.best_point.values, rb.best_point.values);
}

TEST(Step2, ProvenanceAndTraceHeader) {
  const auto p = benchmarks::constrained_sphere();
  SimulationBuffer buf;
  const auto res = run_step2(p, DesignPoint{{0.4, 0.1, 0.1, -0.2}}, buf, quick_config(10));
  ASSERT_GT(buf.size(), 1u);
  EXPECT_EQ(buf.at(0).provenance, Provenance::step2_init);
  EXPECT_EQ(buf.at(0).trial_id, 0);
  for (std::size_t i = 1; i < buf.size(); ++i) EXPECT_GE(buf.at(i).trial_id, 1);
  std::ostringstream os;
  write_trace_csv(os, res.trace);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "simulation_index,trial_id,source,objective,deviation,best_obj");
}

TEST(Step2, NominalOutsideDomainRejected) {
  const auto p = benchmarks::constrained_sphere();
  SimulationBuffer buf;
  EXPECT_THROW(run_step2(p, DesignPoint{{2, 0, 0, 0}}, buf, quick_config(1)), std::invalid_argument);
}
