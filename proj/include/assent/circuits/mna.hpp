#pragma once

// AC small-signal analysis by modified nodal analysis.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "assent/circuits/netlist.hpp"

namespace assent::circuits {

using Complex = std::complex<double>;

struct FrequencyResponse {
  std::vector<double> frequencies;  // Hz
  std::vector<Complex> transfer;    // V(output) / V(source)

  std::size_t size() const { return frequencies.size(); }
};

/// Log-spaced grid, `per_decade` points per decade, both ends included.
inline std::vector<double> log_grid(double f_lo, double f_hi, std::size_t per_decade) {
  if (!(f_lo > 0.0 && f_lo < f_hi) || per_decade == 0)
    throw std::invalid_argument("log_grid: need 0 < f_lo < f_hi and per_decade >= 1");
  const double decades = std::log10(f_hi / f_lo);
  const auto steps = static_cast<std::size_t>(std::llround(decades * double(per_decade)));
  std::vector<double> f(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    f[k] = f_lo * std::pow(10.0, double(k) / double(per_decade));
  f.back() = f_hi;
  return f;
}

/// 30 points per decade over 10 Hz .. 1 MHz.
inline std::vector<double> default_grid() { return log_grid(10.0, 1e6, 30); }

namespace detail {

/// Maps netlist nodes to unknown indices (ground and unused labels get
/// none) after checking that every used node reaches ground.
struct NodeMap {
  std::vector<long> index;
  std::size_t unknowns = 0;
};

inline NodeMap map_nodes(const Netlist& n) {
  const std::size_t nodes = n.max_node() + 1;
  std::vector<std::size_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), std::size_t(0));
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<bool> used(nodes, false);
  used[n.input_node] = used[n.output_node] = true;
  parent[find(n.input_node)] = find(0);
  for (const auto& e : n.elements) {
    used[e.node_a] = used[e.node_b] = true;
    parent[find(e.node_a)] = find(e.node_b);
  }
  NodeMap m;
  m.index.assign(nodes, -1);
  for (std::size_t k = 1; k < nodes; ++k) {
    if (!used[k]) continue;
    if (find(k) != find(0)) throw InvalidDesign("floating subcircuit at node " + std::to_string(k));
    m.index[k] = static_cast<long>(m.unknowns++);
  }
  return m;
}

inline Complex admittance(const Element& e, double omega) {
  switch (e.kind) {
    case ElementKind::R: return {1.0 / e.value, 0.0};
    case ElementKind::C: return {0.0, omega * e.value};
    case ElementKind::L: return Complex(1.0, 0.0) / Complex(0.0, omega * e.value);
    case ElementKind::VAC: break;
  }
  throw InvalidDesign("source stamped as an element");
}

}  // namespace detail

/// Transfer V(output)/V(source) at each frequency. Throws InvalidDesign for
/// malformed netlists and singular systems.
inline FrequencyResponse ac_solve(const Netlist& netlist, const std::vector<double>& frequencies) {
  netlist.validate();
  const auto map = detail::map_nodes(netlist);
  const auto n = static_cast<Eigen::Index>(map.unknowns + 1);  // + source branch current
  const Eigen::Index src_row = n - 1;
  const long in = map.index[netlist.input_node];

  FrequencyResponse r;
  r.frequencies = frequencies;
  r.transfer.reserve(frequencies.size());
  for (double f : frequencies) {
    if (!(f > 0.0)) throw std::invalid_argument("ac_solve: frequencies must be > 0");
    const double omega = 2.0 * std::numbers::pi * f;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    for (const auto& e : netlist.elements) {
      if (e.node_a == e.node_b) continue;
      const Complex y = detail::admittance(e, omega);
      const long a = map.index[e.node_a], b = map.index[e.node_b];
      if (a >= 0) A(a, a) += y;
      if (b >= 0) A(b, b) += y;
      if (a >= 0 && b >= 0) {
        A(a, b) -= y;
        A(b, a) -= y;
      }
    }
    A(in, src_row) += 1.0;
    A(src_row, in) += 1.0;
    rhs(src_row) = netlist.source_amplitude;

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(A);
    if (!lu.isInvertible()) throw InvalidDesign("singular MNA matrix");
    Eigen::VectorXcd v = lu.solve(rhs);
    const double residual = (A * v - rhs).norm();
    if (!v.allFinite() || !(residual <= 1e-8 * (A.norm() * v.norm() + rhs.norm())))
      throw InvalidDesign("ill-conditioned MNA system");
    const long out = map.index[netlist.output_node];
    const Complex vout = out >= 0 ? v(out) : Complex(0.0, 0.0);
    r.transfer.push_back(vout / netlist.source_amplitude);
  }
  return r;
}

}  // namespace assent::circuits
