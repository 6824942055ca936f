#pragma once

// Orchestration behind `assent run`: Step 1, hand-off, Step 2, output files
// and the report, which is rebuilt from the written buffers.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "assent/app/config.hpp"
#include "assent/benchmarks.hpp"
#include "assent/circuits/lowpass.hpp"
#include "assent/core/random.hpp"
#include "assent/evolve/ga.hpp"
#include "assent/finetune.hpp"

namespace assent::app {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr const char* kBufferFile = "buffer.jsonl";
inline constexpr const char* kStep2BufferFile = "buffer_step2.jsonl";
inline constexpr const char* kNetlistFile = "step2_netlist.cir";

inline bool is_lowpass(const RunConfig& c) { return c.problem == "lowpass"; }

inline circuits::LowpassSettings lowpass_settings(const RunConfig& c) { return c.settings.lowpass; }

/// The problem searched by Step 1 (and by Step 2 for every problem except
/// the low-pass filter, whose Step 2 tunes a fixed netlist).
inline DesignProblem make_problem(const RunConfig& c) {
  using namespace benchmarks;
  const auto& s = c.settings;
  if (c.problem == "sphere") return sphere(s.dim.value_or(4), s.bound.value_or(5.0));
  if (c.problem == "constrained-sphere")
    return constrained_sphere(s.dim.value_or(4), s.bound.value_or(1.0), s.threshold.value_or(0.2));
  if (c.problem == "impossible-sphere") return impossible_sphere(s.dim.value_or(4), s.bound.value_or(1.0));
  if (c.problem == "linear-oracle") return linear_oracle();
  if (c.problem == "polak3") return polak3_problem(s.bound.value_or(1.0));
  if (c.problem == "lander-synthetic") return lander_synthetic();
  if (c.problem == "rover") {
    RoverSettings r;
    if (s.waypoints) r.waypoints = *s.waypoints;
    if (s.smoothness_weight) r.smoothness_weight = *s.smoothness_weight;
    return rover(r);
  }
  if (is_lowpass(c)) return circuits::lowpass_step1_problem(circuits::lowpass_architecture(s.lowpass), s.lowpass);
  throw ConfigError("problem '" + c.problem + "' has no simulator bound in this build");
}

inline circuits::Netlist read_netlist(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ConfigError("cannot read netlist " + p.string());
  std::ostringstream os;
  os << is.rdbuf();
  try {
    return circuits::Netlist::parse(os.str());
  } catch (const std::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

namespace detail {

inline Json named(const std::vector<std::string>& names, const std::vector<double>& values) {
  Json j = Json::object();
  for (std::size_t i = 0; i < values.size(); ++i) j[i < names.size() ? names[i] : "v" + std::to_string(i)] = values[i];
  return j;
}

inline std::vector<std::string> variable_names(const DesignProblem& p) {
  std::vector<std::string> n;
  for (const auto& v : p.variables) n.push_back(v.name);
  return n;
}

inline Json record_summary(const DesignProblem& p, const EvaluationRecord& r) {
  Json j;
  j["simulation_index"] = r.simulation_index;
  j["provenance"] = to_string(r.provenance);
  j["trial_id"] = r.trial_id;
  j["valid"] = r.valid;
  j["feasible"] = satisfies_constraints(p.spec, r);
  j["input"] = named(variable_names(p), r.input.values);
  if (!r.valid) return j;
  j["outputs"] = named(p.spec.output_names, r.raw_outputs);
  Json objectives = Json::array();
  for (const auto& o : p.spec.objectives)
    objectives.push_back({{"output", p.spec.output_names.at(o.output_index)},
                          {"direction", o.direction == Direction::minimize ? "minimize" : "maximize"},
                          {"value", r.raw_outputs.at(o.output_index)}});
  j["objectives"] = objectives;
  Json slacks = Json::array();
  for (const auto& c : p.spec.hard_constraints)
    slacks.push_back({{"output", p.spec.output_names.at(c.output_index)},
                      {"relation", c.relation == Relation::less_equal ? "<=" : ">="},
                      {"bound", c.bound},
                      {"slack", c.slack(r.raw_outputs.at(c.output_index))}});
  j["constraint_slacks"] = slacks;
  return j;
}

/// Best feasible record by objective `metric` (earliest on ties); without a
/// feasible record, the least total violation.
inline std::optional<EvaluationRecord> best_record(const Specification& spec, const std::vector<EvaluationRecord>& rs,
                                                   std::size_t metric = 0) {
  std::optional<EvaluationRecord> best;
  bool best_feasible = false;
  for (const auto& r : rs) {
    if (!r.valid) continue;
    const bool f = satisfies_constraints(spec, r);
    if (!best || (f && !best_feasible)) {
      best = r;
      best_feasible = f;
      continue;
    }
    if (f != best_feasible) continue;
    const double a = f ? objective_values(spec, r).at(metric) : total_violation(spec, r);
    const double b = f ? objective_values(spec, *best).at(metric) : total_violation(spec, *best);
    if (a < b) best = r;
  }
  return best;
}

inline bool is_step2(const EvaluationRecord& r) { return r.provenance != Provenance::step1; }

}  // namespace detail

/// Problems as they stand after a run; the low-pass value problem is rebuilt
/// from the hand-off netlist in the output directory.
struct RunProblems {
  DesignProblem step1;
  std::optional<DesignProblem> step2;  // set when Step 2 has a separate problem
  std::optional<circuits::Netlist> netlist;
};

inline RunProblems run_problems(const RunConfig& c, const fs::path& dir) {
  RunProblems p;
  if (is_lowpass(c) && c.step != StepSelection::step1) {
    auto net = read_netlist(c.step == StepSelection::step2 && c.netlist ? *c.netlist : dir / kNetlistFile);
    p.step2 = circuits::lowpass_step2_problem(net, lowpass_settings(c));
    p.netlist = std::move(net);
  }
  if (!(is_lowpass(c) && c.step == StepSelection::step2)) p.step1 = make_problem(c);
  return p;
}

/// report.json content: a pure function of the config and the written files.
inline Json build_report(const RunConfig& c, const fs::path& dir) {
  const auto probs = run_problems(c, dir);
  const bool split = probs.step2.has_value();
  const bool step1_ran = c.step != StepSelection::step2;
  const bool step2_ran = c.step != StepSelection::step1;
  const auto main_buf = SimulationBuffer::load((dir / kBufferFile).string()).records();
  std::vector<EvaluationRecord> buf2;
  if (split && step1_ran) buf2 = SimulationBuffer::load((dir / kStep2BufferFile).string()).records();
  const auto& step2_records = split && step1_ran ? buf2 : main_buf;
  const DesignProblem& p2 = split ? *probs.step2 : probs.step1;

  Json j;
  j["problem"] = c.problem;
  j["step"] = to_string(c.step);
  j["seed"] = c.seed;

  if (step1_ran) {
    std::vector<EvaluationRecord> s1;
    for (const auto& r : main_buf)
      if (r.provenance == Provenance::step1) s1.push_back(r);
    Json s;
    s["simulations"] = s1.size();
    s["valid"] = std::count_if(s1.begin(), s1.end(), [](const auto& r) { return r.valid; });
    if (auto b = detail::best_record(probs.step1.spec, s1, c.ga.final_metric)) {
      s["best"] = detail::record_summary(probs.step1, *b);
      if (is_lowpass(c)) {
        const auto space = circuits::lowpass_architecture(c.settings.lowpass);
        s["best"]["netlist"] = circuits::decode(space, b->input, c.settings.lowpass.input_node,
                                                c.settings.lowpass.output_node).text();
      }
    }
    j["step1"] = s;
  }

  std::optional<EvaluationRecord> result;
  const DesignProblem* result_problem = &p2;
  if (step2_ran) {
    Json s;
    std::size_t sims = 0, valid = 0, first_feasible = 0;
    int trials = 0;
    std::vector<EvaluationRecord> s2;
    for (const auto& r : step2_records) {
      if (!detail::is_step2(r)) continue;
      s2.push_back(r);
      ++sims;
      if (!r.valid) continue;
      ++valid;
      trials = std::max(trials, r.trial_id);
      if (!first_feasible && satisfies_constraints(p2.spec, r)) first_feasible = valid;
    }
    s["simulations"] = sims;
    s["valid"] = valid;
    s["trials"] = trials;
    if (first_feasible) s["valid_sims_to_first_feasible"] = first_feasible;
    else s["valid_sims_to_first_feasible"] = nullptr;
    if (auto b = detail::best_record(p2.spec, s2)) s["best"] = detail::record_summary(p2, *b);
    j["step2"] = s;
    // Step 2 keeps the Step-1 records when both steps share a problem, so
    // the overall best is taken over the whole buffer.
    result = detail::best_record(p2.spec, step2_records);
  } else {
    result = detail::best_record(probs.step1.spec, main_buf, c.ga.final_metric);
    result_problem = &probs.step1;
  }

  Json r;
  r["feasible"] = result && satisfies_constraints(result_problem->spec, *result);
  if (result) {
    r["design"] = detail::record_summary(*result_problem, *result);
    if (probs.netlist && step2_ran) {
      auto net = *probs.netlist;
      for (std::size_t i = 0; i < net.elements.size(); ++i) net.elements[i].value = result->input[i];
      r["netlist"] = net.text();
    }
  }
  j["result"] = r;
  return j;
}

/// Best-so-far curve over the written buffers, one row per simulation.
inline void write_plotdata(const RunConfig& c, const fs::path& dir, std::ostream& os) {
  const auto probs = run_problems(c, dir);
  const bool split = probs.step2.has_value() && c.step != StepSelection::step2;
  os << "step,simulation_index,trial_id,provenance,valid,feasible,objective,best_obj\n";
  auto emit = [&](const std::vector<EvaluationRecord>& rs, const DesignProblem& p, bool only_step2, const char* fixed) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rs) {
      if (only_step2 && !detail::is_step2(r)) continue;
      const bool f = satisfies_constraints(p.spec, r);
      const double o = r.valid ? objective_values(p.spec, r).at(0) : std::numeric_limits<double>::infinity();
      if (f && o < best) best = o;
      const char* step = fixed ? fixed : (detail::is_step2(r) ? "step2" : "step1");
      os << step << ',' << r.simulation_index << ',' << r.trial_id << ',' << to_string(r.provenance) << ','
         << (r.valid ? 1 : 0) << ',' << (f ? 1 : 0) << ',' << format_double(o) << ',' << format_double(best) << '\n';
    }
  };
  const auto main_buf = SimulationBuffer::load((dir / kBufferFile).string()).records();
  if (split) {
    emit(main_buf, probs.step1, false, "step1");
    emit(SimulationBuffer::load((dir / kStep2BufferFile).string()).records(), *probs.step2, false, "step2");
  } else {
    emit(main_buf, probs.step2 ? *probs.step2 : probs.step1, false, nullptr);
  }
}

/// Low-pass hand-off: front-0 member in the bandwidth window with the fewest
/// components (then closest to the cutoff, then lowest index); the Step-1
/// pick when none qualifies.
struct HandoffChoice {
  circuits::Netlist netlist;
  bool qualified = false;
  std::optional<std::size_t> member;
  EvaluationRecord record;
};

inline HandoffChoice lowpass_handoff(const RunConfig& c, const Step1Result& r) {
  const auto& s = c.settings.lowpass;
  const auto space = circuits::lowpass_architecture(s);
  const auto& P = r.final_population;
  std::optional<std::size_t> pick;
  auto key = [&](std::size_t i) {
    const auto& o = P.records[i].raw_outputs;
    return std::make_pair(o[2], std::abs(o[4] - s.target.cutoff_hz));
  };
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P.front_index[i] != 0 || !P.records[i].valid) continue;
    const auto& o = P.records[i].raw_outputs;
    if (o[4] < c.handoff.bandwidth_hz.lower || o[4] > c.handoff.bandwidth_hz.upper ||
        o[2] > double(c.handoff.max_components))
      continue;
    if (!pick || key(i) < key(*pick)) pick = i;
  }
  HandoffChoice h;
  h.qualified = pick.has_value();
  h.member = pick;
  h.record = pick ? P.records[*pick] : r.best_record;
  h.netlist = circuits::decode(space, pick ? P.members[*pick] : r.best, s.input_node, s.output_node);
  if (c.handoff.cleanup) {
    auto cleaned = circuits::cleanup(h.netlist);
    try {
      cleaned.validate();
      if (!cleaned.elements.empty()) h.netlist = std::move(cleaned);
    } catch (const circuits::InvalidDesign&) {
    }
  }
  return h;
}

struct RunSummary {
  int exit_code = 1;
  Json report;
  fs::path output_dir;
};

/// Runs the configured steps, writes every output file, and returns the
/// report. Exit code 0: feasible result; 2: no feasible design found.
inline RunSummary run(const RunConfig& c, std::ostream& log) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const fs::path dir = c.output_dir;

  // Everything that can fail on configuration is checked before any output.
  std::optional<DesignProblem> p1;
  if (!(is_lowpass(c) && c.step == StepSelection::step2)) p1 = make_problem(c);
  std::optional<circuits::Netlist> given_netlist;
  if (is_lowpass(c) && c.step == StepSelection::step2) given_netlist = read_netlist(*c.netlist);
  SimulationBuffer buffer;
  if (c.preload_buffer) {
    try {
      buffer = SimulationBuffer::load(c.preload_buffer->string());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cannot load buffer: ") + e.what());
    }
  }
  if (c.nominal && p1 && !p1->contains(DesignPoint{*c.nominal}))
    throw ConfigError("[step2] nominal is outside the variable domains");

  fs::create_directories(dir);
  write_text(dir / "config.toml", c.source_text);
  for (const char* stale : {kStep2BufferFile, kNetlistFile, "handoff.json", "step1_generations.csv", "step2_trace.csv"})
    fs::remove(dir / stale);

  Json timing;
  SimulationBuffer buffer2;
  bool split = false;
  auto flush = [&] {
    buffer.save((dir / kBufferFile).string());
    if (split) buffer2.save((dir / kStep2BufferFile).string());
  };

  try {
    std::optional<Step1Result> s1;
    if (c.step != StepSelection::step2) {
      const auto ts = clock::now();
      GAConfig g = c.ga;
      g.rng_seed = derive_seed(c.seed, "step1");
      g.jobs = c.jobs;
      if (is_lowpass(c)) {
        const auto space = circuits::lowpass_architecture(c.settings.lowpass);
        g.architecture = space;
        if (c.seed_reference_design) g.seeds = {circuits::butterworth_seed(space, c.settings.lowpass)};
      }
      log << "step 1: " << p1->name << ", population " << g.population_size << ", up to " << g.max_generations
          << " generations\n";
      s1 = run_step1(*p1, g, buffer);
      std::ofstream gen(dir / "step1_generations.csv", std::ios::binary);
      write_generation_csv(gen, s1->trace);
      timing["step1_s"] = std::chrono::duration<double>(clock::now() - ts).count();
      log << "step 1 done: " << s1->simulations << " simulations, stop " << to_string(s1->stop_reason) << "\n";
      flush();
    }

    if (c.step != StepSelection::step1) {
      const auto ts = clock::now();
      FineTuneConfig f = c.finetune;
      f.rng_seed = derive_seed(c.seed, "step2");
      f.train.jobs = c.jobs;
      DesignProblem p2;
      DesignPoint nominal;
      if (is_lowpass(c)) {
        circuits::Netlist net;
        if (given_netlist) {
          net = *given_netlist;
        } else {
          const auto h = lowpass_handoff(c, *s1);
          net = h.netlist;
          Json hj;
          hj["qualified"] = h.qualified;
          if (h.member) hj["member"] = *h.member;
          else hj["member"] = nullptr;
          hj["simulation_index"] = h.record.simulation_index;
          if (h.record.valid) {
            hj["active_count"] = h.record.raw_outputs.at(2);
            hj["bandwidth_hz"] = h.record.raw_outputs.at(4);
          }
          hj["cleaned_elements"] = net.elements.size();
          write_text(dir / "handoff.json", hj.dump(2) + "\n");
        }
        write_text(dir / kNetlistFile, net.text());
        p2 = circuits::lowpass_step2_problem(net, c.settings.lowpass, &nominal);
        split = s1.has_value();
      } else {
        p2 = *p1;
        nominal = c.nominal ? DesignPoint{*c.nominal} : s1->best_record.input;
      }
      if (c.reuse_output) {
        const auto& names = p2.spec.output_names;
        const auto it = std::find(names.begin(), names.end(), *c.reuse_output);
        if (it == names.end()) throw ConfigError("reuse_output '" + *c.reuse_output + "' is not an output");
        const std::size_t k = std::size_t(it - names.begin());
        const double lo = c.reuse_min.value_or(-kInf), hi = c.reuse_max.value_or(kInf);
        f.reuse_filter = [k, lo, hi](const EvaluationRecord& r) {
          return r.raw_outputs.at(k) >= lo && r.raw_outputs.at(k) <= hi;
        };
      }
      SimulationBuffer& b = split ? buffer2 : buffer;
      log << "step 2: " << p2.name << ", " << f.trials << " trials\n";
      const auto res = run_step2(p2, nominal, b, f);
      std::ofstream tr(dir / "step2_trace.csv", std::ios::binary);
      write_trace_csv(tr, res.trace);
      timing["step2_s"] = std::chrono::duration<double>(clock::now() - ts).count();
      timing["milp_feasible"] = res.milp_feasible;
      timing["milp_infeasible"] = res.milp_infeasible;
      timing["milp_timeouts"] = res.milp_timeouts;
      log << "step 2 done: " << res.simulations << " simulations, " << (res.feasible ? "feasible" : "infeasible")
          << "\n";
      flush();
    }
  } catch (...) {
    flush();
    throw;
  }

  RunSummary out;
  out.output_dir = dir;
  out.report = build_report(c, dir);
  write_text(dir / "report.json", out.report.dump(2) + "\n");
  out.exit_code = out.report["result"]["feasible"].get<bool>() ? 0 : 2;
  timing["total_s"] = std::chrono::duration<double>(clock::now() - t0).count();
  write_text(dir / "timing.json", timing.dump(2) + "\n");
  return out;
}

}  // namespace assent::app
