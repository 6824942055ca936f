#pragma once

// TOML run configuration: problem, GA and fine-tuning settings, seeds and
// output location.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <toml.hpp>

#include "assent/benchmarks.hpp"
#include "assent/circuits/lowpass.hpp"
#include "assent/evolve/ga.hpp"
#include "assent/finetune.hpp"

namespace assent::app {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StepSelection { step1, step2, pipeline };

inline const char* to_string(StepSelection s) {
  switch (s) {
    case StepSelection::step1: return "step1";
    case StepSelection::step2: return "step2";
    case StepSelection::pipeline: return "pipeline";
  }
  return "";
}

/// Problem-specific knobs; each problem reads only its own.
struct ProblemSettings {
  std::optional<std::size_t> dim;
  std::optional<double> bound;
  std::optional<double> threshold;
  std::optional<std::size_t> waypoints;
  std::optional<double> smoothness_weight;
  circuits::LowpassSettings lowpass;
};

/// Low-pass hand-off from the architecture search to value tuning: the
/// front-0 member inside the bandwidth window with the fewest components.
struct Handoff {
  Interval bandwidth_hz{900.0, 1100.0};
  std::size_t max_components = 4;
  bool cleanup = true;
};

struct RunConfig {
  std::string problem;
  StepSelection step = StepSelection::pipeline;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  unsigned jobs = 1;
  ProblemSettings settings;
  GAConfig ga;
  bool seed_reference_design = false;
  FineTuneConfig finetune;
  std::optional<std::string> reuse_output;
  std::optional<double> reuse_min, reuse_max;
  Handoff handoff;
  std::optional<std::vector<double>> nominal;
  std::optional<std::filesystem::path> netlist;
  std::optional<std::filesystem::path> preload_buffer;
  std::string source_text;
};

namespace detail {

/// Reads typed keys from one table and rejects keys nobody asked for.
class TableReader {
 public:
  TableReader(const toml::table* t, std::string where) : t_(t), where_(std::move(where)) {}

  template <class T>
  std::optional<T> get(const std::string& key) {
    seen_.insert(key);
    if (!t_) return std::nullopt;
    const auto* node = t_->get(key);
    if (!node) return std::nullopt;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value<bool>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value<std::string>()) return *v;
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node->value<double>()) return *v;
    } else {
      if (auto v = node->value<std::int64_t>()) {
        if (*v < 0) fail(key, "must be non-negative");
        return static_cast<T>(*v);
      }
    }
    fail(key, "has the wrong type");
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    seen_.insert(key);
    if (!t_ || !t_->get(key)) return std::nullopt;
    const auto* arr = t_->get(key)->as_array();
    if (!arr) fail(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      auto v = e.value<double>();
      if (!v) fail(key, "must be an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  std::optional<Interval> interval(const std::string& key) {
    auto v = numbers(key);
    if (!v) return std::nullopt;
    if (v->size() != 2 || !((*v)[0] <= (*v)[1])) fail(key, "must be [lower, upper]");
    return Interval{(*v)[0], (*v)[1]};
  }

  std::optional<std::vector<std::vector<std::size_t>>> layer_lists(const std::string& key) {
    seen_.insert(key);
    if (!t_ || !t_->get(key)) return std::nullopt;
    const auto* arr = t_->get(key)->as_array();
    if (!arr) fail(key, "must be an array of layer-size arrays");
    std::vector<std::vector<std::size_t>> out;
    for (const auto& e : *arr) {
      const auto* inner = e.as_array();
      if (!inner) fail(key, "must be an array of layer-size arrays");
      std::vector<std::size_t> layers;
      for (const auto& u : *inner) {
        auto v = u.value<std::int64_t>();
        if (!v || *v < 1) fail(key, "layer sizes must be positive integers");
        layers.push_back(static_cast<std::size_t>(*v));
      }
      out.push_back(std::move(layers));
    }
    return out;
  }

  const toml::table* table(const std::string& key) {
    seen_.insert(key);
    if (!t_ || !t_->get(key)) return nullptr;
    const auto* sub = t_->get(key)->as_table();
    if (!sub) fail(key, "must be a table");
    return sub;
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!seen_.count(std::string(k.str()))) throw ConfigError(where_ + ": unknown key '" + std::string(k.str()) + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(where_ + "." + key + " " + why);
  }

  const toml::table* t_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class T>
void assign(T& dst, const std::optional<T>& v) {
  if (v) dst = *v;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::string& source_name = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source_name << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
  RunConfig c;
  c.source_text = text;
  detail::TableReader top(&root, source_name);
  const auto problem = top.get<std::string>("problem");
  if (!problem) throw ConfigError(source_name + ": 'problem' is required");
  c.problem = *problem;
  if (auto s = top.get<std::string>("step")) {
    if (*s == "step1") c.step = StepSelection::step1;
    else if (*s == "step2") c.step = StepSelection::step2;
    else if (*s == "pipeline") c.step = StepSelection::pipeline;
    else throw ConfigError(source_name + ": step must be step1, step2 or pipeline");
  }
  detail::assign(c.seed, top.get<std::uint64_t>("seed"));
  c.output_dir = top.get<std::string>("output_dir").value_or("out/" + c.problem);
  detail::assign(c.jobs, top.get<unsigned>("jobs"));

  {
    detail::TableReader t(top.table("settings"), "settings");
    auto& s = c.settings;
    s.dim = t.get<std::size_t>("dim");
    s.bound = t.get<double>("bound");
    s.threshold = t.get<double>("threshold");
    s.waypoints = t.get<std::size_t>("waypoints");
    s.smoothness_weight = t.get<double>("smoothness_weight");
    auto& lp = s.lowpass;
    detail::assign(lp.gain_db, t.interval("gain_db"));
    detail::assign(lp.bandwidth_hz, t.interval("bandwidth_hz"));
    detail::assign(lp.resistor, t.interval("resistor"));
    detail::assign(lp.capacitor, t.interval("capacitor"));
    detail::assign(lp.inductor, t.interval("inductor"));
    detail::assign(lp.points_per_decade, t.get<std::size_t>("points_per_decade"));
    detail::assign(lp.node_count, t.get<std::size_t>("node_count"));
    detail::assign(lp.max_components, t.get<std::size_t>("max_components"));
    detail::assign(lp.target.cutoff_hz, t.get<double>("cutoff_hz"));
    detail::assign(lp.target.passband_weight, t.get<double>("passband_weight"));
    detail::assign(lp.target.stopband_weight, t.get<double>("stopband_weight"));
    t.finish();
  }
  {
    detail::TableReader t(top.table("ga"), "ga");
    auto& g = c.ga;
    detail::assign(g.population_size, t.get<std::size_t>("population_size"));
    detail::assign(g.max_generations, t.get<std::size_t>("max_generations"));
    detail::assign(g.crossover_prob, t.get<double>("crossover_prob"));
    detail::assign(g.mutation_prob, t.get<double>("mutation_prob"));
    detail::assign(g.tournament_size, t.get<std::size_t>("tournament_size"));
    detail::assign(g.tournament_with_replacement, t.get<bool>("tournament_with_replacement"));
    detail::assign(g.catalog_count, t.get<std::size_t>("catalog_count"));
    detail::assign(g.constraints_as_objectives, t.get<bool>("constraints_as_objectives"));
    detail::assign(g.final_metric, t.get<std::size_t>("final_metric"));
    detail::assign(c.seed_reference_design, t.get<bool>("seed_reference_design"));
    g.stop.metric_threshold = t.get<double>("stop_metric_threshold");
    detail::assign(g.stop.stall_generations, t.get<std::size_t>("stall_generations"));
    detail::assign(g.stop.min_generations, t.get<std::size_t>("min_generations"));
    detail::assign(g.stop.max_simulations, t.get<std::size_t>("max_simulations"));
    t.finish();
  }
  {
    detail::TableReader t(top.table("finetune"), "finetune");
    auto& f = c.finetune;
    detail::assign(f.trials, t.get<std::size_t>("trials"));
    detail::assign(f.max_valid_sims, t.get<std::size_t>("max_valid_sims"));
    f.max_valid_sims_later = t.get<std::size_t>("max_valid_sims_later");
    detail::assign(f.architecture_update_freq, t.get<std::size_t>("architecture_update_freq"));
    detail::assign(f.box_fraction, t.get<double>("box_fraction"));
    detail::assign(f.init_sobol_count, t.get<std::size_t>("init_sobol_count"));
    detail::assign(f.reuse_step1_buffer, t.get<bool>("reuse_step1_buffer"));
    c.reuse_output = t.get<std::string>("reuse_output");
    c.reuse_min = t.get<double>("reuse_min");
    c.reuse_max = t.get<double>("reuse_max");
    detail::assign(f.architecture_library, t.layer_lists("architecture_library"));
    f.improvement_margin = t.get<double>("improvement_margin");
    if (auto s = t.get<double>("wall_clock_limit_s")) f.wall_clock_limit = std::chrono::duration<double>(*s);
    if (auto s = t.get<double>("milp_time_limit_s")) f.milp.time_limit = std::chrono::duration<double>(*s);
    detail::assign(f.milp.max_nodes, t.get<std::size_t>("milp_max_nodes"));
    detail::assign(f.train.learning_rate, t.get<double>("learning_rate"));
    detail::assign(f.train.patience, t.get<std::size_t>("patience"));
    detail::assign(f.train.max_epochs, t.get<std::size_t>("max_epochs"));
    detail::assign(f.train.validation_fraction, t.get<double>("validation_fraction"));
    detail::assign(f.max_invalid_streak, t.get<std::size_t>("max_invalid_streak"));
    t.finish();
  }
  {
    detail::TableReader t(top.table("handoff"), "handoff");
    detail::assign(c.handoff.bandwidth_hz, t.interval("bandwidth_hz"));
    detail::assign(c.handoff.max_components, t.get<std::size_t>("max_components"));
    detail::assign(c.handoff.cleanup, t.get<bool>("cleanup"));
    t.finish();
  }
  {
    detail::TableReader t(top.table("step2"), "step2");
    c.nominal = t.numbers("nominal");
    if (auto n = t.get<std::string>("netlist")) c.netlist = *n;
    if (auto b = t.get<std::string>("buffer")) c.preload_buffer = *b;
    t.finish();
  }
  top.finish();

  if (!benchmarks::find_benchmark(c.problem)) throw ConfigError("unknown problem '" + c.problem + "'");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  try {
    c.ga.validate();
    c.finetune.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.step == StepSelection::step2) {
    if (c.problem == "lowpass" && !c.netlist) throw ConfigError("lowpass step2 needs [step2] netlist");
    if (c.problem != "lowpass" && !c.nominal) throw ConfigError("step2 needs [step2] nominal");
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  RunConfig c = parse_config(os.str(), path.string());
  // Relative input files resolve against the config's directory.
  const auto base = path.parent_path();
  if (c.netlist && c.netlist->is_relative()) c.netlist = base / *c.netlist;
  if (c.preload_buffer && c.preload_buffer->is_relative()) c.preload_buffer = base / *c.preload_buffer;
  return c;
}

}  // namespace assent::app
