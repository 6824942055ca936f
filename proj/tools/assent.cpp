// assent: two-step design optimization from the command line.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "assent/app/config.hpp"
#include "assent/app/run.hpp"
#include "assent/benchmarks.hpp"
#include "assent/verify.hpp"

namespace {

unsigned env_jobs() {
  const char* v = std::getenv("ASSENT_JOBS");
  if (!v || !*v) return 0;
  try {
    const long n = std::stol(v);
    return n > 0 ? unsigned(n) : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

int cmd_run(const std::string& path, unsigned jobs, std::optional<std::uint64_t> seed,
            const std::string& output_dir, bool quiet) {
  assent::app::RunConfig cfg;
  try {
    cfg = assent::app::load_config(path);
    if (jobs) cfg.jobs = jobs;
    if (seed) cfg.seed = *seed;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
  } catch (const std::exception& e) {
    std::cerr << "assent: " << e.what() << "\n";
    return 1;
  }
  std::ostringstream sink;
  std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cerr;
  try {
    const auto s = assent::app::run(cfg, log);
    std::cout << s.report.dump(2) << "\n";
    log << "outputs in " << s.output_dir.string() << "\n";
    return s.exit_code;
  } catch (const assent::app::ConfigError& e) {
    std::cerr << "assent: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "assent: run failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_list() {
  for (const auto& b : assent::benchmarks::registry()) {
    std::cout << b.name << "\n  " << b.description << "\n";
    if (b.reference_optimum) std::cout << "  reference optimum: " << assent::format_double(*b.reference_optimum) << "\n";
    if (!b.make) {
      if (b.name == "lowpass") std::cout << "  runnable: pipeline (architecture search, then value tuning)\n";
      else std::cout << "  runnable: no\n";
      continue;
    }
    const auto p = b.make();
    std::cout << "  variables:";
    for (const auto& v : p.variables) std::cout << ' ' << v.name;
    std::cout << "\n  outputs:";
    for (const auto& o : p.spec.output_names) std::cout << ' ' << o;
    std::cout << "\n  objectives:";
    for (const auto& o : p.spec.objectives)
      std::cout << ' ' << (o.direction == assent::Direction::minimize ? "min " : "max ")
                << p.spec.output_names[o.output_index];
    std::cout << "\n  constraints:";
    if (p.spec.hard_constraints.empty()) std::cout << " none";
    for (const auto& c : p.spec.hard_constraints)
      std::cout << ' ' << p.spec.output_names[c.output_index]
                << (c.relation == assent::Relation::less_equal ? "<=" : ">=") << assent::format_double(c.bound);
    std::cout << "\n";
  }
  return 0;
}

int cmd_verify() {
  bool ok = true;
  for (const auto& r : assent::verify::all()) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [" << r.seconds << " s]\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int cmd_plotdata(const std::string& dir, const std::string& out) {
  try {
    const auto cfg = assent::app::load_config(std::filesystem::path(dir) / "config.toml");
    if (out.empty()) {
      assent::app::write_plotdata(cfg, dir, std::cout);
    } else {
      std::ofstream os(out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + out);
      assent::app::write_plotdata(cfg, dir, os);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "assent: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step design optimization: genetic search, then surrogate/MILP fine-tuning"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the steps selected in a TOML config");
  std::string config_path, output_dir;
  unsigned jobs = 0;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  run->add_option("config", config_path, "Run configuration (TOML)")->required();
  run->add_option("-j,--jobs", jobs, "Concurrent simulations and training threads (env ASSENT_JOBS)");
  run->add_option("-s,--seed", seed, "Override the config's master seed");
  run->add_option("-o,--output-dir", output_dir, "Override the config's output directory");
  run->add_flag("-q,--quiet", quiet, "No progress log on stderr");

  app.add_subcommand("list-benchmarks", "List built-in problems with variables, outputs and constraints");
  app.add_subcommand("verify", "Run the oracle agreement suites");

  auto* plot = app.add_subcommand("trace-plotdata", "Best objective against simulation count, as CSV");
  std::string run_dir, plot_out;
  plot->add_option("run_dir", run_dir, "Output directory of a finished run")->required()->check(CLI::ExistingDirectory);
  plot->add_option("-o,--output", plot_out, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (*run) return cmd_run(config_path, jobs ? jobs : env_jobs(), seed, output_dir, quiet);
  if (app.got_subcommand("list-benchmarks")) return cmd_list();
  if (app.got_subcommand("verify")) return cmd_verify();
  return cmd_plotdata(run_dir, plot_out);
}
