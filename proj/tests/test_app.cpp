#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "assent/app/config.hpp"
#include "assent/app/run.hpp"

using namespace assent;
using namespace assent::app;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(ASSENT_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("assent_test_app_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto c = parse_config("problem = \"sphere\"\n");
  EXPECT_EQ(c.problem, "sphere");
  EXPECT_EQ(c.step, StepSelection::pipeline);
  EXPECT_EQ(c.output_dir, fs::path("out/sphere"));
  EXPECT_EQ(c.ga.population_size, 50u);
  EXPECT_EQ(c.finetune.trials, 50u);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("step = \"step1\"\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"nope\"\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"sphere\"\nstep = \"both\"\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"sphere\"\n[ga]\npopulaton_size = 10\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"sphere\"\ncolour = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"sphere\"\n[ga]\npopulation_size = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"sphere\"\n[finetune]\ntrials = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"sphere\"\nstep = \"step2\"\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = \"lowpass\"\nstep = \"step2\"\n"), ConfigError);
  EXPECT_THROW(parse_config("problem = = 1\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/assent.toml"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".toml") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(Config, LanderPresetCarriesDefaults) {
  const auto c = load_config(kConfigs / "lander-synthetic.toml");
  EXPECT_EQ(c.ga.crossover_prob, 0.9);
  EXPECT_EQ(c.ga.mutation_prob, 0.1);
  EXPECT_EQ(c.finetune.trials, 50u);
  EXPECT_EQ(c.finetune.architecture_update_freq, 10u);
  EXPECT_EQ(c.finetune.box_fraction, 0.7);
  EXPECT_EQ(c.finetune.architecture_library.size(), 11u);
}

TEST(Run, ImpossibleConstraintExitsTwo) {
  auto c = load_config(kConfigs / "impossible-sphere.toml");
  c.output_dir = scratch("impossible");
  std::ostringstream log;
  const auto s = run(c, log);
  EXPECT_EQ(s.exit_code, 2);
  EXPECT_FALSE(s.report["result"]["feasible"].get<bool>());
  std::istringstream trace(slurp(c.output_dir / "step2_trace.csv"));
  std::string line;
  std::getline(trace, line);
  std::map<std::string, std::size_t> per_trial;
  std::size_t fallbacks = 0;
  while (std::getline(trace, line)) {
    std::istringstream ls(line);
    std::string idx, trial, source;
    std::getline(ls, idx, ',');
    std::getline(ls, trial, ',');
    std::getline(ls, source, ',');
    ++per_trial[trial];
    fallbacks += source == "fallback";
  }
  ASSERT_EQ(per_trial.size(), c.finetune.trials);
  for (const auto& [t, n] : per_trial) EXPECT_EQ(n, c.finetune.max_valid_sims) << t;
  EXPECT_EQ(fallbacks, c.finetune.trials * (c.finetune.max_valid_sims - c.finetune.init_sobol_count));
}

TEST(Run, ReportIsRebuiltFromFiles) {
  auto c = load_config(kConfigs / "linear-oracle.toml");
  c.output_dir = scratch("report");
  std::ostringstream log;
  const auto s = run(c, log);
  EXPECT_EQ(s.exit_code, 0);
  for (const char* f : {"config.toml", "buffer.jsonl", "step1_generations.csv", "step2_trace.csv", "report.json",
                        "timing.json"})
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  EXPECT_EQ(slurp(c.output_dir / "report.json"), build_report(c, c.output_dir).dump(2) + "\n");
  EXPECT_EQ(slurp(c.output_dir / "config.toml"), slurp(kConfigs / "linear-oracle.toml"));
  const auto& slacks = s.report["result"]["design"]["constraint_slacks"];
  ASSERT_EQ(slacks.size(), 1u);
  EXPECT_GE(slacks[0]["slack"].get<double>(), 0.0);

  std::ostringstream plot;
  write_plotdata(c, c.output_dir, plot);
  std::istringstream rows(plot.str());
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "step,simulation_index,trial_id,provenance,valid,feasible,objective,best_obj");
  std::size_t n = 0;
  while (std::getline(rows, line)) ++n;
  EXPECT_EQ(n, SimulationBuffer::load((c.output_dir / "buffer.jsonl").string()).size());
}

TEST(Run, StepOneOnly) {
  auto c = parse_config("problem = \"sphere\"\nstep = \"step1\"\n[ga]\npopulation_size = 10\nmax_generations = 3\n"
                        "tournament_size = 3\n");
  c.output_dir = scratch("step1");
  std::ostringstream log;
  const auto s = run(c, log);
  EXPECT_EQ(s.exit_code, 0);
  EXPECT_FALSE(s.report.contains("step2"));
  EXPECT_FALSE(fs::exists(c.output_dir / "step2_trace.csv"));
}

TEST(Cli, MissingConfigExitsOneWithoutOutputs) {
  const auto dir = scratch("cli_missing");
  const std::string cmd = std::string("\"") + ASSENT_CLI + "\" run -q /nonexistent/assent.toml -o \"" +
                          dir.string() + "\" >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), 1);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const std::string cmd = std::string("\"") + ASSENT_CLI + "\" frobnicate >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), 1);
}
