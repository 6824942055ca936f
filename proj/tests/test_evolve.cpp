#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "assent/evolve/ga.hpp"
#include "assent/oracles/dominance.hpp"

using namespace assent;

namespace {

ArchitectureSpace small_space() {
  ArchitectureSpace s;
  s.types = {{"R", {100, 200, 300}}, {"C", {1e-9, 2e-9}}};
  s.node_count = 4;
  s.max_components = 10;
  s.fixed_terminals = {1, 2, 0};
  return s;
}

DesignProblem sphere(std::size_t dim, double half_width) {
  DesignProblem p;
  p.name = "sphere";
  for (std::size_t i = 0; i < dim; ++i)
    p.variables.push_back(DesignVariable::continuous("x" + std::to_string(i), -half_width, half_width));
  p.spec.output_names = {"f"};
  p.spec.objectives = {{0, Direction::minimize}};
  p.simulator = [](const DesignPoint& x) -> SimulationResult {
    double s = 0;
    for (double v : x.values) s += v * v;
    return std::vector<double>{s};
  };
  return p;
}

std::size_t field_diff(const Gene& a, const Gene& b) {
  return (a.component_type != b.component_type) + (a.node_a != b.node_a) + (a.node_b != b.node_b) +
         (a.value_index != b.value_index) + (a.active != b.active);
}

}  // namespace

TEST(NondominatedSort, SmallExamples) {
  auto a = fast_nondominated_sort({{1, 1}, {2, 2}});
  EXPECT_EQ(a.front_of, (std::vector<std::size_t>{0, 1}));
  auto b = fast_nondominated_sort({{1, 2}, {2, 1}});
  EXPECT_EQ(b.front_of, (std::vector<std::size_t>{0, 0}));
  auto c = fast_nondominated_sort({{1, 1}, {1, 1}});
  EXPECT_EQ(c.front_of, (std::vector<std::size_t>{0, 0}));
}

TEST(NondominatedSort, MatchesBruteForceOracle) {
  Engine rng(21);
  for (int t = 0; t < 300; ++t) {
    auto objs = oracles::random_objectives(rng, t < 50 ? 20 : 64);
    auto fa = fast_nondominated_sort(objs);
    ASSERT_EQ(fa.front_of, oracles::brute_force_fronts(objs)) << "population " << t;
  }
}

TEST(CrowdingDistance, Examples) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(crowding_distance({{0, 1}, {1, 0}}), (std::vector<double>{inf, inf}));
  auto d = crowding_distance({{0, 2}, {1, 1}, {2, 0}});
  EXPECT_EQ(d[0], inf);
  EXPECT_DOUBLE_EQ(d[1], 2.0);
  EXPECT_EQ(d[2], inf);
  auto same = crowding_distance({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  EXPECT_EQ(same[1], 0.0);
  EXPECT_EQ(same[2], 0.0);
}

TEST(CrowdingDistance, BoundaryMembersInfinite) {
  Engine rng(22);
  for (int t = 0; t < 100; ++t) {
    auto objs = oracles::random_objectives(rng, 30);
    auto r = rank_population(objs);
    for (const auto& f : r.fronts) {
      for (std::size_t m = 0; m < objs.front().size(); ++m) {
        double lo = objs[f[0]][m], hi = lo;
        for (auto i : f) {
          lo = std::min(lo, objs[i][m]);
          hi = std::max(hi, objs[i][m]);
        }
        bool lo_inf = false, hi_inf = false;
        for (auto i : f) {
          if (objs[i][m] == lo && r.crowding[i] == std::numeric_limits<double>::infinity()) lo_inf = true;
          if (objs[i][m] == hi && r.crowding[i] == std::numeric_limits<double>::infinity()) hi_inf = true;
        }
        EXPECT_TRUE(lo_inf && hi_inf);
      }
    }
  }
}

TEST(SelectSurvivors, KeepsFrontsInOrder) {
  ObjectiveMatrix objs{{3, 3}, {1, 1}, {0, 2}, {2, 0}, {2, 2}, {1.5, 1.5}};
  auto s = select_survivors(objs, 3);
  EXPECT_EQ(s, (std::vector<std::size_t>{1, 2, 3}));
  auto t = select_survivors(objs, 4);
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t[3], 5u);
}

TEST(Tournament, CrowdedComparison) {
  Ranking r;
  r.front = {0, 3};
  r.crowding = {0.5, 9.0};
  EXPECT_TRUE(crowded_less(r, 0, 1));
  r.front = {1, 1};
  r.crowding = {1.2, std::numeric_limits<double>::infinity()};
  EXPECT_TRUE(crowded_less(r, 1, 0));
  r.crowding = {1.0, 1.0};
  EXPECT_TRUE(crowded_less(r, 0, 1));
}

TEST(Tournament, FrontZeroWinsAtLeastItsShare) {
  Engine rng(23);
  Ranking r;
  r.front.assign(100, 2);
  r.crowding.assign(100, 1.0);
  for (std::size_t i = 0; i < 10; ++i) r.front[i * 7] = 0;
  std::size_t wins = 0;
  for (int t = 0; t < 10000; ++t) wins += r.front[tournament_select(r, 100, 10, rng)] == 0;
  EXPECT_GE(double(wins) / 10000.0, 0.10);
  EXPECT_GE(double(wins) / 10000.0, 0.60);  // 1 - 0.9^10
}

TEST(Crossover, ExchangesSuffixes) {
  auto mk = [](std::initializer_list<int> ids) {
    std::vector<Gene> g;
    for (int i : ids) g.push_back({0, 0, 0, std::size_t(i), true});
    return make_architecture(g);
  };
  auto a = mk({0, 1, 2, 3}), b = mk({10, 11, 12, 13});
  auto [x, y] = crossover_at(a, b, 2);
  EXPECT_EQ(x, mk({0, 1, 12, 13}));
  EXPECT_EQ(y, mk({10, 11, 2, 3}));
  Engine rng(1);
  auto [p, q] = crossover(a, b, 0.0, rng);
  EXPECT_EQ(p, a);
  EXPECT_EQ(q, b);
  for (std::size_t cut = 1; cut < 4; ++cut) {
    auto [u, v] = crossover_at(a, b, cut);
    std::multiset<std::size_t> parents, kids;
    for (const auto* c : {&a, &b})
      for (const auto& g : c->genes) parents.insert(g.value_index);
    for (const auto* c : {&u, &v})
      for (const auto& g : c->genes) kids.insert(g.value_index);
    EXPECT_EQ(parents, kids);
  }
  auto one = mk({5});
  auto [s, t] = crossover(one, mk({6}), 1.0, rng);
  EXPECT_EQ(s, one);
}

TEST(Mutation, OneFieldPerMutatingGene) {
  auto space = small_space();
  Engine rng(24);
  for (int t = 0; t < 1000; ++t) {
    Gene g = random_gene(space, rng);
    auto c = make_architecture({g});
    auto m = mutate(c, 1.0, rng, &space, nullptr);
    EXPECT_EQ(field_diff(g, m.genes[0]), 1u);
    EXPECT_LT(m.genes[0].value_index, space.types[m.genes[0].component_type].catalog.size());
  }
  auto c = make_architecture({random_gene(space, rng), random_gene(space, rng)});
  EXPECT_EQ(mutate(c, 0.0, rng, &space, nullptr), c);
}

TEST(Mutation, ValuesModeStaysInBounds) {
  std::vector<DesignVariable> vars{DesignVariable::continuous("a", -2, 3),
                                   DesignVariable::catalog("b", {1, 2, 4})};
  Engine rng(25);
  auto c = make_values({0.0, 2.0});
  for (int t = 0; t < 200; ++t) {
    c = mutate(c, 1.0, rng, nullptr, &vars);
    EXPECT_TRUE(vars[0].contains(c.values[0]));
    EXPECT_TRUE(vars[1].contains(c.values[1]));
  }
}

TEST(Repair, AlreadyCoveredIsUnchanged) {
  std::vector<Gene> genes{{0, 1, 3, 0, true}, {1, 3, 2, 0, true}, {1, 2, 0, 0, true}, {0, 0, 0, 0, false}};
  auto c = make_architecture(genes);
  EXPECT_EQ(repair(c, {1, 2, 0}), c);
}

TEST(Repair, AllInactiveActivatesGeneZero) {
  std::vector<Gene> genes(4, Gene{0, 3, 3, 0, false});
  auto r = repair(make_architecture(genes), {1});
  EXPECT_TRUE(r.genes[0].active);
  EXPECT_EQ(r.genes[0].node_a, 1u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_FALSE(r.genes[i].active);
}

TEST(Repair, UncoveredOutputRewiresGeneZero) {
  // Output terminal 2 uncovered; every gene active and gene 0's node_a (3) is
  // not a terminal.
  std::vector<Gene> genes;
  for (int i = 0; i < 10; ++i) genes.push_back({0, 3, i % 2 ? 1u : 0u, std::size_t(i % 3), true});
  auto before = genes[0];
  auto r = repair(make_architecture(genes), {1, 2, 0});
  EXPECT_EQ(r.genes[0].node_a, 2u);
  EXPECT_EQ(r.genes[0].node_b, before.node_b);
  EXPECT_EQ(r.genes[0].component_type, before.component_type);
  EXPECT_EQ(r.genes[0].value_index, before.value_index);
  for (std::size_t i = 1; i < 10; ++i) EXPECT_EQ(r.genes[i], genes[i]);
}

TEST(Repair, RandomChromosomesCoverTerminals) {
  auto space = small_space();
  Engine rng(26);
  for (int t = 0; t < 500; ++t) {
    std::vector<Gene> genes;
    for (std::size_t g = 0; g < 3; ++g) genes.push_back(random_gene(space, rng));
    auto r = repair(make_architecture(genes), space.fixed_terminals);
    EXPECT_GE(r.active_count(), 1u);
    for (auto term : space.fixed_terminals) {
      bool hit = false;
      for (const auto& g : r.genes) hit |= g.active && (g.node_a == term || g.node_b == term);
      EXPECT_TRUE(hit);
    }
  }
}

TEST(InitializePopulation, SeedsFirstAndFixedLength) {
  GAConfig cfg;
  cfg.population_size = 100;
  cfg.architecture = small_space();
  std::vector<Gene> seed(10, Gene{0, 1, 2, 1, false});
  seed[0].active = true;
  seed[1] = {1, 2, 0, 0, true};
  cfg.seeds = {make_architecture(seed)};
  DesignProblem dummy;
  auto space = make_search_space(dummy, cfg);
  SobolStream sobol(1);
  Engine rng(27);
  auto pop = initialize_population(cfg, space, sobol, rng);
  ASSERT_EQ(pop.size(), 100u);
  EXPECT_EQ(pop[0], cfg.seeds[0]);
  for (const auto& c : pop) EXPECT_EQ(c.genes.size(), 10u);
}

TEST(InitializePopulation, ValuesModeInsideBounds) {
  auto p = sphere(3, 2.0);
  GAConfig cfg;
  cfg.population_size = 30;
  cfg.tournament_size = 5;
  auto space = make_search_space(p, cfg);
  SobolStream sobol(3);
  Engine rng(28);
  auto pop = initialize_population(cfg, space, sobol, rng);
  ASSERT_EQ(pop.size(), 30u);
  for (const auto& c : pop) EXPECT_TRUE(p.contains(c.values));
}

TEST(RunStep1, SphereConverges) {
  auto p = sphere(4, 5.0);
  GAConfig cfg;
  cfg.population_size = 40;
  cfg.max_generations = 100;
  cfg.rng_seed = 7;
  SimulationBuffer buf;
  auto r = run_step1(p, cfg, buf);
  EXPECT_LE(r.best_record.raw_outputs[0], 0.05);
  EXPECT_EQ(r.final_population.size(), 40u);
  EXPECT_EQ(r.trace.size(), 100u);
  EXPECT_EQ(r.stop_reason, StopReason::max_generations);
}

TEST(RunStep1, ElitismAndReproducibility) {
  auto p = sphere(3, 5.0);
  GAConfig cfg;
  cfg.population_size = 20;
  cfg.max_generations = 30;
  cfg.rng_seed = 9;
  cfg.jobs = 3;
  SimulationBuffer a, b;
  auto ra = run_step1(p, cfg, a);
  cfg.jobs = 1;
  auto rb = run_step1(p, cfg, b);
  for (std::size_t g = 1; g < ra.trace.size(); ++g) EXPECT_LE(ra.trace[g].best[0], ra.trace[g - 1].best[0]);
  std::ostringstream sa, sb;
  a.write_jsonl(sa);
  b.write_jsonl(sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(ra.best, rb.best);
  // Each evaluated point was simulated exactly once.
  std::map<std::string, int> seen;
  for (const auto& rec : a.records()) EXPECT_EQ(++seen[canonical_key(rec.input)], 1);
}

TEST(RunStep1, StopCriteria) {
  auto p = sphere(2, 5.0);
  GAConfig cfg;
  cfg.population_size = 10;
  cfg.tournament_size = 2;
  cfg.max_generations = 500;
  cfg.stop.metric_threshold = 1.0;
  SimulationBuffer buf;
  auto r = run_step1(p, cfg, buf);
  EXPECT_EQ(r.stop_reason, StopReason::metric_threshold);
  cfg.stop = {};
  cfg.stop.stall_generations = 5;
  cfg.stop.min_generations = 10;
  cfg.stop.metric_threshold = -1.0;
  SimulationBuffer buf2;
  r = run_step1(p, cfg, buf2);
  EXPECT_EQ(r.stop_reason, StopReason::stall);
  EXPECT_GE(r.trace.size(), 11u);
  cfg.stop = {};
  cfg.stop.max_simulations = 25;
  SimulationBuffer buf3;
  r = run_step1(p, cfg, buf3);
  EXPECT_EQ(r.stop_reason, StopReason::max_simulations);
}

TEST(RunStep1, SimulatorFailuresDoNotAbort) {
  auto p = sphere(2, 5.0);
  p.simulator = [](const DesignPoint& x) -> SimulationResult {
    if (x[0] > 0) return std::nullopt;
    return std::vector<double>{x[0] * x[0] + x[1] * x[1]};
  };
  GAConfig cfg;
  cfg.population_size = 12;
  cfg.tournament_size = 3;
  cfg.max_generations = 10;
  SimulationBuffer buf;
  auto r = run_step1(p, cfg, buf);
  EXPECT_TRUE(r.best_record.valid);
  EXPECT_LT(buf.count_valid(), buf.size());
}

TEST(GenerationCsv, Header) {
  std::ostringstream os;
  write_generation_csv(os, {{0, {1.0, 2.0}, {1.5, 2.5}, 3, 10}});
  EXPECT_EQ(os.str(),
            "generation,best_obj0,best_obj1,mean_obj0,mean_obj1,front0_count,cumulative_simulations\n"
            "0,1,2,1.5,2.5,3,10\n");
}
