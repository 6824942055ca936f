#pragma once

// Chromosome encodings and genetic operators.
//
// Architecture mode: a fixed-length sequence of genes, each a two-terminal
// component (type, node_a, node_b, catalog value, active bit). Inactive genes
// pad the sequence so crossover points line up.
// Values mode: one coordinate per design variable of a fixed architecture.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "assent/core/random.hpp"
#include "assent/design_space.hpp"
#include "assent/sobol.hpp"

namespace assent {

struct Gene {
  std::size_t component_type = 0;
  std::size_t node_a = 0;
  std::size_t node_b = 0;
  std::size_t value_index = 0;
  bool active = false;

  bool operator==(const Gene&) const = default;
};

struct ComponentType {
  std::string name;              // e.g. "R", "L", "C"
  std::vector<double> catalog;   // strictly increasing, positive
};

/// Catalog of `count` values drawn from a 1-D Sobol coordinate over
/// [lower, upper], sorted and de-duplicated.
inline std::vector<double> sobol_catalog(double lower, double upper, std::size_t count,
                                         std::size_t coordinate = 0,
                                         std::size_t dimension = 1) {
  if (!(lower < upper)) throw std::invalid_argument("sobol_catalog: empty range");
  SobolStream s(std::max(dimension, coordinate + 1));
  std::vector<double> out;
  out.reserve(count);
  for (const auto& u : s.next_points(count))
    out.push_back(lower + u[coordinate] * (upper - lower));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Replaces each continuous variable by a catalog of `count` Sobol samples
/// over its range (one Sobol coordinate per variable). Catalog variables are
/// kept as given.
inline std::vector<DesignVariable> discretize(const std::vector<DesignVariable>& vars,
                                              std::size_t count) {
  std::vector<DesignVariable> out;
  out.reserve(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& v = vars[i];
    if (v.is_catalog()) {
      out.push_back(v);
      continue;
    }
    out.push_back(DesignVariable::catalog(
        v.name, sobol_catalog(v.lower, v.upper, count, i, vars.size()), v.unit));
  }
  return out;
}

struct ArchitectureSpace {
  std::vector<ComponentType> types;
  std::size_t node_count = 0;       // nodes 0 .. node_count-1, 0 is ground
  std::size_t max_components = 0;   // chromosome length
  std::vector<std::size_t> fixed_terminals;

  static constexpr std::size_t kFieldsPerGene = 5;

  void validate() const {
    if (types.empty()) throw std::invalid_argument("architecture space has no component types");
    for (const auto& t : types) {
      if (t.catalog.empty()) throw std::invalid_argument("component type without catalog");
      for (std::size_t i = 0; i < t.catalog.size(); ++i) {
        if (!(t.catalog[i] > 0.0)) throw std::invalid_argument("catalog values must be > 0");
        if (i && !(t.catalog[i - 1] < t.catalog[i]))
          throw std::invalid_argument("catalog must be strictly increasing");
      }
    }
    if (node_count < 2) throw std::invalid_argument("need at least two nodes");
    if (max_components == 0) throw std::invalid_argument("max_components must be >= 1");
    for (auto t : fixed_terminals)
      if (t >= node_count) throw std::invalid_argument("fixed terminal out of range");
    if (2 * max_components < fixed_terminals.size())
      throw std::invalid_argument("too few components to reach every fixed terminal");
  }

  double value_of(const Gene& g) const { return types.at(g.component_type).catalog.at(g.value_index); }

  /// Design-point layout used as the simulator input and buffer key:
  /// per gene (active, type, node_a, node_b, value); inactive genes are all
  /// zeros, so chromosomes that differ only in inactive genes share a key.
  std::vector<DesignVariable> variables() const {
    std::vector<double> type_ids, node_ids, values{0.0};
    for (std::size_t t = 0; t < types.size(); ++t) type_ids.push_back(double(t));
    for (std::size_t n = 0; n < node_count; ++n) node_ids.push_back(double(n));
    for (const auto& t : types) values.insert(values.end(), t.catalog.begin(), t.catalog.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<DesignVariable> vars;
    for (std::size_t g = 0; g < max_components; ++g) {
      const std::string p = "gene" + std::to_string(g) + ".";
      vars.push_back(DesignVariable::catalog(p + "active", {0.0, 1.0}));
      vars.push_back(DesignVariable::catalog(p + "type", type_ids));
      vars.push_back(DesignVariable::catalog(p + "node_a", node_ids));
      vars.push_back(DesignVariable::catalog(p + "node_b", node_ids));
      vars.push_back(DesignVariable::catalog(p + "value", values));
    }
    return vars;
  }

  DesignPoint encode(const std::vector<Gene>& genes) const {
    DesignPoint p;
    p.values.assign(genes.size() * kFieldsPerGene, 0.0);
    for (std::size_t g = 0; g < genes.size(); ++g) {
      if (!genes[g].active) continue;
      double* f = p.values.data() + g * kFieldsPerGene;
      f[0] = 1.0;
      f[1] = double(genes[g].component_type);
      f[2] = double(genes[g].node_a);
      f[3] = double(genes[g].node_b);
      f[4] = value_of(genes[g]);
    }
    return p;
  }

  /// Active components of an encoded point, in gene order.
  struct Component {
    std::size_t type = 0;
    std::size_t node_a = 0;
    std::size_t node_b = 0;
    double value = 0.0;
  };
  std::vector<Component> active_components(const DesignPoint& p) const {
    if (p.size() % kFieldsPerGene) throw std::invalid_argument("malformed architecture point");
    std::vector<Component> out;
    for (std::size_t g = 0; g * kFieldsPerGene < p.size(); ++g) {
      const double* f = p.values.data() + g * kFieldsPerGene;
      if (f[0] != 1.0) continue;
      out.push_back({static_cast<std::size_t>(f[1]), static_cast<std::size_t>(f[2]),
                     static_cast<std::size_t>(f[3]), f[4]});
    }
    return out;
  }
};

enum class ChromosomeMode { architecture, values };

struct Chromosome {
  ChromosomeMode mode = ChromosomeMode::values;
  std::vector<Gene> genes;   // architecture mode
  DesignPoint values;        // values mode

  std::size_t length() const { return mode == ChromosomeMode::architecture ? genes.size() : values.size(); }
  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count_if(genes.begin(), genes.end(),
                                                  [](const Gene& g) { return g.active; }));
  }
  bool operator==(const Chromosome&) const = default;
};

inline Chromosome make_architecture(std::vector<Gene> genes) {
  Chromosome c;
  c.mode = ChromosomeMode::architecture;
  c.genes = std::move(genes);
  return c;
}

inline Chromosome make_values(DesignPoint p) {
  Chromosome c;
  c.mode = ChromosomeMode::values;
  c.values = std::move(p);
  return c;
}

inline Gene random_gene(const ArchitectureSpace& space, Engine& rng) {
  Gene g;
  g.component_type = uniform_index(rng, space.types.size());
  g.node_a = uniform_index(rng, space.node_count);
  g.node_b = uniform_index(rng, space.node_count);
  g.value_index = uniform_index(rng, space.types[g.component_type].catalog.size());
  g.active = bernoulli(rng, 0.5);
  return g;
}

/// Makes every fixed terminal incident to an active gene.
///
/// For each uncovered terminal (in the given order) the lowest-indexed active
/// gene whose node_a can be moved without uncovering another terminal gets
/// node_a rewired; failing that, the same check on node_b; failing that, the
/// lowest inactive gene is activated on that terminal. All-inactive input
/// first activates gene 0.
inline Chromosome repair(Chromosome c, const std::vector<std::size_t>& fixed_terminals) {
  if (c.mode != ChromosomeMode::architecture)
    throw std::invalid_argument("repair applies to architecture chromosomes");
  if (c.genes.empty()) throw std::invalid_argument("repair: empty chromosome");
  auto& genes = c.genes;
  if (c.active_count() == 0) genes[0].active = true;

  auto incidence = [&](std::size_t node) {
    std::size_t n = 0;
    for (const auto& g : genes)
      if (g.active) n += (g.node_a == node) + (g.node_b == node);
    return n;
  };
  auto is_terminal = [&](std::size_t node) {
    return std::find(fixed_terminals.begin(), fixed_terminals.end(), node) !=
           fixed_terminals.end();
  };
  // Moving an endpoint off `node` is safe unless it strands a terminal.
  auto can_move = [&](std::size_t node) { return !is_terminal(node) || incidence(node) > 1; };

  for (std::size_t t : fixed_terminals) {
    if (incidence(t) > 0) continue;
    bool done = false;
    for (auto& g : genes)
      if (g.active && can_move(g.node_a)) {
        g.node_a = t;
        done = true;
        break;
      }
    if (!done)
      for (auto& g : genes)
        if (g.active && can_move(g.node_b)) {
          g.node_b = t;
          done = true;
          break;
        }
    if (!done)
      for (auto& g : genes)
        if (!g.active) {
          g.active = true;
          g.node_a = t;
          done = true;
          break;
        }
    if (!done) break;
  }

  // Fallback for tiny chromosomes: pin terminals onto consecutive endpoints.
  bool covered = std::all_of(fixed_terminals.begin(), fixed_terminals.end(),
                             [&](std::size_t t) { return incidence(t) > 0; });
  if (!covered) {
    std::size_t slot = 0;
    for (std::size_t t : fixed_terminals) {
      Gene& g = genes[slot / 2];
      g.active = true;
      (slot % 2 == 0 ? g.node_a : g.node_b) = t;
      ++slot;
    }
  }
  return c;
}

/// Values-mode coordinate from a unit sample.
inline double value_from_unit(const DesignVariable& v, double u) {
  if (v.is_catalog()) {
    auto idx = static_cast<std::size_t>(u * double(v.catalog_values.size()));
    return v.catalog_values[std::min(idx, v.catalog_values.size() - 1)];
  }
  return v.lower + u * (v.upper - v.lower);
}

inline double random_value(const DesignVariable& v, Engine& rng) {
  if (v.is_catalog()) return v.catalog_values[uniform_index(rng, v.catalog_values.size())];
  return uniform_real(rng, v.lower, v.upper);
}

/// Single-point crossover at gene (or coordinate) boundaries.
inline std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b,
                                                      std::size_t cut) {
  Chromosome x = a, y = b;
  if (a.mode == ChromosomeMode::architecture) {
    for (std::size_t i = cut; i < a.genes.size(); ++i) std::swap(x.genes[i], y.genes[i]);
  } else {
    for (std::size_t i = cut; i < a.values.size(); ++i) std::swap(x.values[i], y.values[i]);
  }
  return {std::move(x), std::move(y)};
}

inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b,
                                                   double prob, Engine& rng) {
  if (a.mode != b.mode || a.length() != b.length())
    throw std::invalid_argument("crossover: parents differ in mode or length");
  const std::size_t len = a.length();
  if (len < 2 || !bernoulli(rng, prob)) return {a, b};
  const std::size_t cut = 1 + uniform_index(rng, len - 1);
  return crossover_at(a, b, cut);
}

namespace detail {

/// Uniform draw from [0, n) excluding `current` (n >= 2).
inline std::size_t redraw_other(std::size_t n, std::size_t current, Engine& rng) {
  std::size_t v = uniform_index(rng, n - 1);
  return v >= current ? v + 1 : v;
}

/// Re-draws exactly one field of the gene to a different value.
inline void mutate_gene(Gene& g, const ArchitectureSpace& space, Engine& rng) {
  std::vector<std::size_t> type_choices;
  for (std::size_t t = 0; t < space.types.size(); ++t)
    if (t != g.component_type && g.value_index < space.types[t].catalog.size())
      type_choices.push_back(t);
  const std::size_t catalog_len = space.types[g.component_type].catalog.size();

  std::vector<int> fields;
  if (!type_choices.empty()) fields.push_back(0);
  if (space.node_count > 1) {
    fields.push_back(1);
    fields.push_back(2);
  }
  if (catalog_len > 1) fields.push_back(3);
  fields.push_back(4);

  switch (fields[uniform_index(rng, fields.size())]) {
    case 0: g.component_type = type_choices[uniform_index(rng, type_choices.size())]; break;
    case 1: g.node_a = redraw_other(space.node_count, g.node_a, rng); break;
    case 2: g.node_b = redraw_other(space.node_count, g.node_b, rng); break;
    case 3: g.value_index = redraw_other(catalog_len, g.value_index, rng); break;
    default: g.active = !g.active; break;
  }
}

}  // namespace detail

/// Architecture mode: each gene mutates with probability `prob`, changing
/// exactly one of its fields. Values mode: each coordinate is re-drawn
/// uniformly within its variable's domain with probability `prob`.
inline Chromosome mutate(Chromosome c, double prob, Engine& rng,
                         const ArchitectureSpace* space,
                         const std::vector<DesignVariable>* vars) {
  if (c.mode == ChromosomeMode::architecture) {
    if (!space) throw std::invalid_argument("mutate: architecture space required");
    for (auto& g : c.genes)
      if (bernoulli(rng, prob)) detail::mutate_gene(g, *space, rng);
  } else {
    if (!vars || vars->size() != c.values.size())
      throw std::invalid_argument("mutate: variables required");
    for (std::size_t i = 0; i < c.values.size(); ++i)
      if (bernoulli(rng, prob)) c.values[i] = random_value((*vars)[i], rng);
  }
  return c;
}

}  // namespace assent
