// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assent/app/config.hpp"
#include "assent/app/run.hpp"
#include "assent/verify.hpp"

namespace fs = std::filesystem;
using assent::app::Json;

namespace {

const fs::path kConfigs = fs::path(ASSENT_SOURCE_DIR) / "configs";
const fs::path kOut = fs::path(ASSENT_ACCEPTANCE_OUT);

struct Criterion {
  int id;
  bool passed;
  std::string detail;
  double seconds;
};

std::vector<Criterion> results;

void report(int id, bool passed, const std::string& detail, double seconds) {
  results.push_back({id, passed, detail, seconds});
  std::cout << (passed ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << " [" << seconds << " s]"
            << std::endl;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

struct Run {
  assent::app::RunConfig config;
  assent::app::RunSummary summary;
};

Run run_config(const std::string& name, std::uint64_t seed, const std::string& tag, unsigned jobs = 4) {
  Run r;
  r.config = assent::app::load_config(kConfigs / name);
  r.config.seed = seed;
  r.config.jobs = jobs;
  r.config.output_dir = kOut / tag;
  std::ostringstream log;
  r.summary = assent::app::run(r.config, log);
  return r;
}

double output(const Json& record, const std::string& name) { return record.at("outputs").at(name).get<double>(); }

/// Last column of step2_trace.csv never increases.
bool trace_monotone(const fs::path& csv) {
  std::istringstream is(slurp(csv));
  std::string line;
  std::getline(is, line);
  double prev = std::numeric_limits<double>::infinity();
  while (std::getline(is, line)) {
    const double v = std::stod(line.substr(line.rfind(',') + 1));
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

int verify_id(const std::string& suite) {
  if (suite == "milp-soundness") return 1;
  if (suite == "milp-completeness") return 2;
  if (suite == "simplex") return 3;
  if (suite == "nsga2-ranking") return 4;
  if (suite == "sobol") return 5;
  return 6;
}

void oracle_criteria() {
  for (const auto& s : assent::verify::all()) report(verify_id(s.name), s.passed, s.name + ": " + s.detail, s.seconds);
}

void lowpass_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  int passed = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = run_config("lowpass.toml", seed, "lowpass-seed" + std::to_string(seed));
    const auto& c = r.config;
    const fs::path dir = c.output_dir;
    const auto h = read_json(dir / "handoff.json");
    const auto& rep = r.summary.report;
    const bool setup = c.ga.population_size == 50 && c.ga.max_generations <= 100 && c.seed_reference_design &&
                       c.settings.lowpass.resistor.lower == 400 && c.settings.lowpass.resistor.upper == 800 &&
                       c.settings.lowpass.capacitor.lower == 1e-8 && c.settings.lowpass.capacitor.upper == 1e-6;
    const bool step1 = h.at("qualified").get<bool>() && h.at("active_count").get<double>() <= 4 &&
                       h.at("bandwidth_hz").get<double>() >= 900 && h.at("bandwidth_hz").get<double>() <= 1100;
    bool step2 = false;
    std::ostringstream s;
    if (rep.at("result").at("feasible").get<bool>()) {
      const auto& d = rep.at("result").at("design");
      const double gain = output(d, "gain_db"), bw = output(d, "bandwidth_hz");
      const auto& first = rep.at("step2").at("valid_sims_to_first_feasible");
      step2 = gain >= -0.92 && gain <= 0.83 && bw >= 990 && bw <= 1010 && !first.is_null() &&
              first.get<std::size_t>() <= 150;
      s << ", gain " << gain << " dB, bandwidth " << bw << " Hz, first feasible at valid sim "
        << (first.is_null() ? std::string("-") : std::to_string(first.get<std::size_t>()));
    }
    const bool ok = setup && step1 && step2;
    passed += ok;
    detail << "seed " << seed << (ok ? " ok" : " failed") << " (hand-off " << h.at("active_count").get<double>()
           << " parts at " << h.at("bandwidth_hz").get<double>() << " Hz" << s.str() << "); ";
  }
  detail << passed << "/3 seeds pass";
  report(7, passed >= 2, detail.str(), since(t0));
}

void polak3_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_config("polak3.toml", 1, "polak3");
  const auto& c = r.config;
  const double best = output(r.summary.report.at("result").at("design"), "max_f");
  const auto sims = r.summary.report.at("step1").at("simulations").get<std::size_t>();
  std::ostringstream d;
  d << "best " << best << " after " << sims << " simulations (P=" << c.ga.population_size << ", "
    << c.ga.max_generations << " generations max, threshold 6.23)";
  report(8, c.ga.population_size == 100 && c.ga.max_generations <= 400 && best <= 6.23, d.str(), since(t0));
}

void pipeline_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream d;
  bool ok = true;
  d << "constrained sphere:";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_config("constrained-sphere.toml", seed, "constrained-sphere-seed" + std::to_string(seed));
    const auto& rep = r.summary.report;
    const double s1 = output(rep.at("step1").at("best"), "f");
    const bool feasible = rep.at("result").at("feasible").get<bool>();
    const double s2 = output(rep.at("result").at("design"), "f");
    const bool mono = trace_monotone(r.config.output_dir / "step2_trace.csv");
    const bool good = feasible && rep.at("step1").at("best").at("feasible").get<bool>() && s2 <= s1 && mono &&
                      std::abs(s2 - 0.04) <= 0.01 * 0.04;
    ok = ok && good;
    d << " " << s1 << " -> " << s2 << (good ? "" : " (fail)") << ";";
  }
  const auto lo = run_config("linear-oracle.toml", 1, "linear-oracle");
  const auto& rep = lo.summary.report;
  const double s1 = output(rep.at("step1").at("best"), "f");
  const double s2 = output(rep.at("result").at("design"), "f");
  const bool good = rep.at("result").at("feasible").get<bool>() && s2 <= s1 &&
                    trace_monotone(lo.config.output_dir / "step2_trace.csv");
  ok = ok && good;
  d << " linear oracle: " << s1 << " -> " << s2 << (good ? "" : " (fail)");
  report(9, ok, d.str(), since(t0));
}

void reproducibility_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream d;
  bool ok = true;
  // Second runs use a different job count; outputs must not depend on it.
  const std::vector<std::pair<std::string, std::string>> pairs{{"lowpass.toml", "lowpass-seed1"},
                                                                {"linear-oracle.toml", "linear-oracle"}};
  for (const auto& [config, first] : pairs) {
    const auto again = run_config(config, 1, first + "-again", 1);
    for (const char* f : {"buffer.jsonl", "buffer_step2.jsonl", "report.json"}) {
      const fs::path a = kOut / first / f, b = again.config.output_dir / f;
      if (!fs::exists(a) && !fs::exists(b)) continue;
      const bool same = fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b);
      ok = ok && same;
      d << config << ":" << f << (same ? " identical" : " DIFFERS") << "; ";
    }
  }
  report(10, ok, d.str(), since(t0));
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  try {
    oracle_criteria();
    lowpass_criterion();
    polak3_criterion();
    pipeline_criterion();
    reproducibility_criterion();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::size_t failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << results.size() - failed << "/" << results.size() << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}
