#pragma once

// Problem definition (variables, objectives, hard constraints) and the
// simulation buffer shared by both search steps. The buffer doubles as a
// lookup table: a design point is simulated at most once per buffer.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "assent/core/format.hpp"

namespace assent {

enum class VariableKind { continuous, catalog };

struct DesignVariable {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> catalog_values;
  std::string unit;

  static DesignVariable continuous(std::string name, double lower, double upper,
                                   std::string unit = {}) {
    if (!(lower < upper))
      throw std::invalid_argument("variable '" + name + "': lower must be < upper");
    DesignVariable v;
    v.name = std::move(name);
    v.kind = VariableKind::continuous;
    v.lower = lower;
    v.upper = upper;
    v.unit = std::move(unit);
    return v;
  }

  static DesignVariable catalog(std::string name, std::vector<double> values,
                                std::string unit = {}) {
    if (values.empty())
      throw std::invalid_argument("variable '" + name + "': empty catalog");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i - 1] < values[i]))
        throw std::invalid_argument("variable '" + name +
                                    "': catalog must be strictly increasing");
    DesignVariable v;
    v.name = std::move(name);
    v.kind = VariableKind::catalog;
    v.lower = values.front();
    v.upper = values.back();
    v.catalog_values = std::move(values);
    v.unit = std::move(unit);
    return v;
  }

  bool is_catalog() const { return kind == VariableKind::catalog; }

  bool contains(double x) const {
    if (kind == VariableKind::continuous) return x >= lower && x <= upper;
    return std::binary_search(catalog_values.begin(), catalog_values.end(), x);
  }

  /// Index of x in the catalog; throws if absent.
  std::size_t catalog_index(double x) const {
    auto it = std::lower_bound(catalog_values.begin(), catalog_values.end(), x);
    if (it == catalog_values.end() || *it != x)
      throw std::invalid_argument("value not in catalog of '" + name + "'");
    return static_cast<std::size_t>(it - catalog_values.begin());
  }
};

struct DesignPoint {
  std::vector<double> values;

  DesignPoint() = default;
  explicit DesignPoint(std::vector<double> v) : values(std::move(v)) {}
  DesignPoint(std::initializer_list<double> v) : values(v) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const DesignPoint&) const = default;
};

/// Per-dimension closed interval.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
  bool operator==(const Interval&) const = default;
};
using Box = std::vector<Interval>;

enum class Direction { minimize, maximize };
enum class Relation { less_equal, greater_equal };

struct Objective {
  std::size_t output_index = 0;
  Direction direction = Direction::minimize;
};

struct HardConstraint {
  std::size_t output_index = 0;
  Relation relation = Relation::less_equal;
  double bound = 0.0;

  /// Non-negative when satisfied.
  double slack(double observed) const {
    return relation == Relation::less_equal ? bound - observed : observed - bound;
  }
  bool satisfied(double observed) const { return slack(observed) >= 0.0; }
};

struct Specification {
  std::vector<Objective> objectives;
  std::vector<HardConstraint> hard_constraints;
  std::vector<std::string> output_names;

  /// An equality h = value is stored as the pair h <= value, h >= value.
  void add_equality(std::size_t output, double value) {
    hard_constraints.push_back({output, Relation::less_equal, value});
    hard_constraints.push_back({output, Relation::greater_equal, value});
  }

  void validate() const {
    if (objectives.empty()) throw std::invalid_argument("specification needs an objective");
    for (const auto& o : objectives)
      if (o.output_index >= output_names.size())
        throw std::invalid_argument("objective references unknown output");
    for (const auto& c : hard_constraints)
      if (c.output_index >= output_names.size())
        throw std::invalid_argument("constraint references unknown output");
  }
};

enum class Provenance { step1, step2_init, step2_milp, step2_random };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::step1: return "step1";
    case Provenance::step2_init: return "step2-init";
    case Provenance::step2_milp: return "step2-milp";
    case Provenance::step2_random: return "step2-random";
  }
  return "step1";
}

inline Provenance parse_provenance(const std::string& s) {
  if (s == "step1") return Provenance::step1;
  if (s == "step2-init") return Provenance::step2_init;
  if (s == "step2-milp") return Provenance::step2_milp;
  if (s == "step2-random") return Provenance::step2_random;
  throw std::invalid_argument("unknown provenance '" + s + "'");
}

struct EvaluationRecord {
  DesignPoint input;
  std::vector<double> raw_outputs;
  bool valid = false;
  Provenance provenance = Provenance::step1;
  int trial_id = 0;
  std::size_t simulation_index = 0;
};

/// nullopt signals a failed simulation.
using SimulationResult = std::optional<std::vector<double>>;
using Simulator = std::function<SimulationResult(const DesignPoint&)>;

struct DesignProblem {
  std::string name;
  std::vector<DesignVariable> variables;
  Specification spec;
  Simulator simulator;

  Box box() const {
    Box b;
    b.reserve(variables.size());
    for (const auto& v : variables) b.push_back({v.lower, v.upper});
    return b;
  }

  bool contains(const DesignPoint& p) const {
    if (p.size() != variables.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!variables[i].contains(p[i])) return false;
    return true;
  }
};

/// Exact decimal serialization at full precision.
inline std::string canonical_key(const DesignPoint& p) { return join_doubles(p.values); }

class SimulationBuffer {
 public:
  SimulationBuffer() = default;
  SimulationBuffer(const SimulationBuffer& other) {
    std::shared_lock lock(other.mutex_);
    records_ = other.records_;
    index_ = other.index_;
  }
  SimulationBuffer& operator=(const SimulationBuffer& other) {
    if (this != &other) {
      std::unique_lock a(mutex_, std::defer_lock);
      std::shared_lock b(other.mutex_, std::defer_lock);
      std::lock(a, b);
      records_ = other.records_;
      index_ = other.index_;
    }
    return *this;
  }

  std::optional<EvaluationRecord> find(const DesignPoint& p) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(canonical_key(p));
    if (it == index_.end()) return std::nullopt;
    return records_[it->second];
  }

  bool contains(const DesignPoint& p) const {
    std::shared_lock lock(mutex_);
    return index_.count(canonical_key(p)) != 0;
  }

  /// Appends a fresh record; its simulation_index is assigned here. A record
  /// whose input is already indexed is rejected.
  EvaluationRecord append(EvaluationRecord rec) {
    std::unique_lock lock(mutex_);
    auto key = canonical_key(rec.input);
    if (index_.count(key)) throw std::logic_error("buffer already holds input " + key);
    rec.simulation_index = records_.size();
    index_.emplace(std::move(key), records_.size());
    records_.push_back(rec);
    return rec;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
  }

  std::vector<EvaluationRecord> records() const {
    std::shared_lock lock(mutex_);
    return records_;
  }

  EvaluationRecord at(std::size_t i) const {
    std::shared_lock lock(mutex_);
    return records_.at(i);
  }

  std::size_t count_valid() const {
    std::shared_lock lock(mutex_);
    return static_cast<std::size_t>(std::count_if(
        records_.begin(), records_.end(), [](const auto& r) { return r.valid; }));
  }

  void write_jsonl(std::ostream& os) const {
    std::shared_lock lock(mutex_);
    for (const auto& r : records_) os << record_to_json(r).dump() << '\n';
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_jsonl(os);
  }

  static SimulationBuffer read_jsonl(std::istream& is) {
    SimulationBuffer buf;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto rec = record_from_json(nlohmann::ordered_json::parse(line));
      auto key = canonical_key(rec.input);
      if (buf.index_.count(key)) throw std::runtime_error("duplicate input in buffer file");
      buf.index_.emplace(std::move(key), buf.records_.size());
      buf.records_.push_back(std::move(rec));
    }
    return buf;
  }

  static SimulationBuffer load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    return read_jsonl(is);
  }

  static nlohmann::ordered_json record_to_json(const EvaluationRecord& r) {
    nlohmann::ordered_json j;
    j["input"] = r.input.values;
    j["outputs"] = r.raw_outputs;
    j["valid"] = r.valid;
    j["provenance"] = to_string(r.provenance);
    j["trial_id"] = r.trial_id;
    j["simulation_index"] = r.simulation_index;
    return j;
  }

  static EvaluationRecord record_from_json(const nlohmann::ordered_json& j) {
    EvaluationRecord r;
    r.input.values = j.at("input").get<std::vector<double>>();
    r.raw_outputs = j.at("outputs").get<std::vector<double>>();
    r.valid = j.at("valid").get<bool>();
    r.provenance = parse_provenance(j.at("provenance").get<std::string>());
    r.trial_id = j.at("trial_id").get<int>();
    r.simulation_index = j.at("simulation_index").get<std::size_t>();
    return r;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::vector<EvaluationRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline SimulationResult run_simulator(const DesignProblem& problem, const DesignPoint& p) {
  SimulationResult out;
  try {
    out = problem.simulator(p);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!out) return std::nullopt;
  if (out->size() != problem.spec.output_names.size()) return std::nullopt;
  for (double v : *out)
    if (!std::isfinite(v)) return std::nullopt;
  return out;
}

inline void check_point(const DesignProblem& problem, const DesignPoint& p) {
  if (!problem.contains(p))
    throw std::invalid_argument("design point " + canonical_key(p) +
                                " violates the variable bounds of '" + problem.name + "'");
}

inline EvaluationRecord make_record(const DesignPoint& p, SimulationResult result,
                                    Provenance provenance, int trial_id) {
  EvaluationRecord rec;
  rec.input = p;
  rec.valid = result.has_value();
  if (result) rec.raw_outputs = std::move(*result);
  rec.provenance = provenance;
  rec.trial_id = trial_id;
  return rec;
}

}  // namespace detail

/// Looks the point up in the buffer; simulates and appends on a miss.
/// Simulator failures (nullopt, exception, wrong arity, non-finite outputs)
/// produce a stored record with valid=false.
inline EvaluationRecord evaluate(const DesignProblem& problem, const DesignPoint& point,
                                 SimulationBuffer& buffer,
                                 Provenance provenance = Provenance::step1, int trial_id = 0) {
  detail::check_point(problem, point);
  if (auto hit = buffer.find(point)) return *hit;
  return buffer.append(
      detail::make_record(point, detail::run_simulator(problem, point), provenance, trial_id));
}

/// Evaluates a batch, running simulator calls for buffer misses on up to
/// `jobs` threads. Records are appended in input order, so the buffer is the
/// same as for serial evaluation.
inline std::vector<EvaluationRecord> evaluate_batch(const DesignProblem& problem,
                                                    const std::vector<DesignPoint>& points,
                                                    SimulationBuffer& buffer,
                                                    Provenance provenance, int trial_id,
                                                    unsigned jobs = 1) {
  std::vector<std::size_t> misses;
  std::unordered_map<std::string, std::size_t> first_miss;
  for (std::size_t i = 0; i < points.size(); ++i) {
    detail::check_point(problem, points[i]);
    if (buffer.contains(points[i])) continue;
    if (first_miss.emplace(canonical_key(points[i]), i).second) misses.push_back(i);
  }

  std::vector<SimulationResult> results(misses.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(misses.size())));
  if (workers <= 1) {
    for (std::size_t k = 0; k < misses.size(); ++k)
      results[k] = detail::run_simulator(problem, points[misses[k]]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < misses.size(); k = next++)
          results[k] = detail::run_simulator(problem, points[misses[k]]);
      });
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < misses.size(); ++k)
    buffer.append(detail::make_record(points[misses[k]], std::move(results[k]), provenance,
                                      trial_id));

  std::vector<EvaluationRecord> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(*buffer.find(p));
  return out;
}

/// Objective value assigned to every objective of a failed simulation.
inline constexpr double kInvalidObjective = 1e18;

/// One value per objective in minimization convention: maximize objectives
/// are negated.
inline std::vector<double> objective_values(const Specification& spec,
                                            const EvaluationRecord& record) {
  std::vector<double> out(spec.objectives.size(), kInvalidObjective);
  if (!record.valid) return out;
  for (std::size_t m = 0; m < spec.objectives.size(); ++m) {
    const auto& o = spec.objectives[m];
    const double v = record.raw_outputs.at(o.output_index);
    out[m] = o.direction == Direction::minimize ? v : -v;
  }
  return out;
}

inline bool satisfies_constraints(const Specification& spec, const EvaluationRecord& record) {
  if (!record.valid) return false;
  return std::all_of(spec.hard_constraints.begin(), spec.hard_constraints.end(),
                     [&](const HardConstraint& c) {
                       return c.satisfied(record.raw_outputs.at(c.output_index));
                     });
}

/// Sum of constraint violations in raw output units (0 when all hold).
inline double total_violation(const Specification& spec, const EvaluationRecord& record) {
  if (!record.valid) return kInvalidObjective;
  double v = 0.0;
  for (const auto& c : spec.hard_constraints)
    v += std::max(0.0, -c.slack(record.raw_outputs.at(c.output_index)));
  return v;
}

}  // namespace assent
