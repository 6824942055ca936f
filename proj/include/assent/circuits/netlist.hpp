#pragma once

// Two-terminal R/L/C netlists driven by one ideal AC voltage source.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "assent/core/format.hpp"
#include "assent/evolve/chromosome.hpp"

namespace assent::circuits {

enum class ElementKind { R, L, C, VAC };

inline const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::R: return "R";
    case ElementKind::L: return "L";
    case ElementKind::C: return "C";
    case ElementKind::VAC: return "VAC";
  }
  return "";
}

inline ElementKind parse_kind(const std::string& s) {
  if (s == "R") return ElementKind::R;
  if (s == "L") return ElementKind::L;
  if (s == "C") return ElementKind::C;
  if (s == "VAC") return ElementKind::VAC;
  throw std::invalid_argument("unknown element kind '" + s + "'");
}

struct Element {
  ElementKind kind = ElementKind::R;
  std::size_t id = 1;
  std::size_t node_a = 0;
  std::size_t node_b = 0;
  double value = 0.0;

  bool operator==(const Element&) const = default;
};

/// Thrown for netlists that cannot be analysed; evaluate() turns it into an
/// invalid record.
struct InvalidDesign : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Netlist {
  /// Passive elements only; the source is implicit below.
  std::vector<Element> elements;
  std::size_t input_node = 1;   // source drives input_node against ground
  std::size_t output_node = 2;
  double source_amplitude = 1.0;

  static constexpr double kMinValue = 1e-15;

  std::size_t max_node() const {
    std::size_t n = std::max(input_node, output_node);
    for (const auto& e : elements) n = std::max({n, e.node_a, e.node_b});
    return n;
  }

  std::size_t count(ElementKind k) const {
    return static_cast<std::size_t>(
        std::count_if(elements.begin(), elements.end(), [k](const Element& e) { return e.kind == k; }));
  }

  void add(ElementKind kind, std::size_t a, std::size_t b, double value) {
    if (kind == ElementKind::VAC) throw std::invalid_argument("the source is not an element");
    elements.push_back({kind, count(kind) + 1, a, b, value});
  }

  void validate() const {
    if (input_node == 0) throw InvalidDesign("input node must not be ground");
    if (!(source_amplitude > 0.0)) throw InvalidDesign("source amplitude must be > 0");
    for (const auto& e : elements) {
      if (e.kind == ElementKind::VAC) throw InvalidDesign("more than one VAC source");
      if (!(e.value > kMinValue)) throw InvalidDesign("element value must exceed 1e-15");
    }
    auto touches = [&](std::size_t n) {
      return std::any_of(elements.begin(), elements.end(), [n](const Element& e) {
        return e.node_a != e.node_b && (e.node_a == n || e.node_b == n);
      });
    };
    if (output_node != input_node && !touches(output_node)) throw InvalidDesign("floating output node");
  }

  /// Canonical text: the VAC line, one line per element, then `.output`.
  void write(std::ostream& os) const {
    os << "VAC1 " << input_node << " 0 " << format_double(source_amplitude) << '\n';
    for (const auto& e : elements)
      os << to_string(e.kind) << e.id << ' ' << e.node_a << ' ' << e.node_b << ' '
         << format_double(e.value) << '\n';
    os << ".output " << output_node << '\n';
  }

  std::string text() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static Netlist parse(std::istream& is) {
    Netlist n;
    bool have_source = false, have_output = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto where = [&] { return " (line " + std::to_string(lineno) + ")"; };
      if (line.empty() || line[0] == '*') continue;
      std::istringstream ls(line);
      std::string name;
      ls >> name;
      if (name == ".output") {
        if (!(ls >> n.output_node)) throw std::invalid_argument("bad .output" + where());
        have_output = true;
        continue;
      }
      const auto digit = name.find_first_of("0123456789");
      if (digit == std::string::npos || digit == 0) throw std::invalid_argument("bad element name" + where());
      Element e;
      e.kind = parse_kind(name.substr(0, digit));
      auto [p, ec] = std::from_chars(name.data() + digit, name.data() + name.size(), e.id);
      if (ec != std::errc{} || p != name.data() + name.size())
        throw std::invalid_argument("bad element id" + where());
      std::string value;
      if (!(ls >> e.node_a >> e.node_b >> value)) throw std::invalid_argument("bad element line" + where());
      auto [vp, vec] = std::from_chars(value.data(), value.data() + value.size(), e.value);
      if (vec != std::errc{} || vp != value.data() + value.size())
        throw std::invalid_argument("bad value" + where());
      if (e.kind == ElementKind::VAC) {
        if (have_source) throw std::invalid_argument("more than one VAC source" + where());
        if (e.node_b != 0) throw std::invalid_argument("VAC must return to ground" + where());
        have_source = true;
        n.input_node = e.node_a;
        n.source_amplitude = e.value;
      } else {
        n.elements.push_back(e);
      }
    }
    if (!have_source) throw std::invalid_argument("netlist has no VAC source");
    if (!have_output) throw std::invalid_argument("netlist has no .output line");
    return n;
  }

  static Netlist parse(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }
};

inline ElementKind kind_of_type(const ComponentType& t) {
  const ElementKind k = parse_kind(t.name);
  if (k == ElementKind::VAC) throw std::invalid_argument("VAC is not a gene component type");
  return k;
}

/// Active genes of an encoded architecture point become elements, in gene
/// order; inactive genes are skipped. No merging of parallel elements.
inline Netlist decode(const ArchitectureSpace& space, const DesignPoint& point,
                      std::size_t input_node, std::size_t output_node) {
  Netlist n;
  n.input_node = input_node;
  n.output_node = output_node;
  for (const auto& c : space.active_components(point)) {
    if (c.type >= space.types.size()) throw InvalidDesign("component type out of range");
    n.add(kind_of_type(space.types[c.type]), c.node_a, c.node_b, c.value);
  }
  return n;
}

inline Netlist decode(const ArchitectureSpace& space, const Chromosome& c, std::size_t input_node,
                      std::size_t output_node) {
  return decode(space, space.encode(c.genes), input_node, output_node);
}

/// Genes reproducing the netlist's elements; every value must be in its
/// type's catalog. The rest of the chromosome is inactive padding.
inline Chromosome encode(const ArchitectureSpace& space, const Netlist& n) {
  if (n.elements.size() > space.max_components)
    throw std::invalid_argument("netlist has more elements than genes");
  std::vector<Gene> genes(space.max_components);
  for (std::size_t i = 0; i < n.elements.size(); ++i) {
    const auto& e = n.elements[i];
    std::optional<std::size_t> type;
    for (std::size_t t = 0; t < space.types.size(); ++t)
      if (kind_of_type(space.types[t]) == e.kind) type = t;
    if (!type) throw std::invalid_argument("element kind not in the architecture space");
    const auto& cat = space.types[*type].catalog;
    auto it = std::find(cat.begin(), cat.end(), e.value);
    if (it == cat.end()) throw std::invalid_argument("element value not in catalog");
    if (e.node_a >= space.node_count || e.node_b >= space.node_count)
      throw std::invalid_argument("element node out of range");
    genes[i] = {*type, e.node_a, e.node_b, static_cast<std::size_t>(it - cat.begin()), true};
  }
  return make_architecture(std::move(genes));
}

/// Optional simplification: merges parallel elements of the same kind
/// (R and L combine reciprocally, C additively) and removes elements that lie
/// on no input-to-output path. Element ids are renumbered.
inline Netlist cleanup(const Netlist& in) {
  // Merge parallels.
  std::map<std::tuple<int, std::size_t, std::size_t>, double> merged;
  std::vector<std::tuple<int, std::size_t, std::size_t>> order;
  for (const auto& e : in.elements) {
    if (e.node_a == e.node_b) continue;
    auto key = std::make_tuple(int(e.kind), std::min(e.node_a, e.node_b), std::max(e.node_a, e.node_b));
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged[key] = e.value;
      order.push_back(key);
    } else if (e.kind == ElementKind::C) {
      it->second += e.value;
    } else {
      it->second = it->second * e.value / (it->second + e.value);
    }
  }

  // An element is kept when it is not a bridge of the graph formed by the
  // elements plus two virtual edges (source and output probe, both to
  // ground), and its piece of the graph reaches ground.
  const std::size_t nodes = in.max_node() + 1;
  const std::size_t m = order.size();
  auto connected_without = [&](std::size_t skip, std::size_t from, std::size_t to) {
    std::vector<std::size_t> parent(nodes);
    std::iota(parent.begin(), parent.end(), std::size_t(0));
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    parent[find(in.input_node)] = find(0);
    parent[find(in.output_node)] = find(0);
    for (std::size_t i = 0; i < m; ++i)
      if (i != skip) parent[find(std::get<1>(order[i]))] = find(std::get<2>(order[i]));
    return find(from) == find(to);
  };

  Netlist out;
  out.input_node = in.input_node;
  out.output_node = in.output_node;
  out.source_amplitude = in.source_amplitude;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& [kind, a, b] = order[i];
    if (!connected_without(i, a, b) || !connected_without(m, a, 0)) continue;
    out.add(static_cast<ElementKind>(kind), a, b, merged[order[i]]);
  }
  return out;
}

}  // namespace assent::circuits
