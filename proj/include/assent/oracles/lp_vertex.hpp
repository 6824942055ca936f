#pragma once

// Brute-force LP reference: enumerate every basic solution formed by choosing
// n tight constraints among rows and finite variable bounds.

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "assent/core/random.hpp"
#include "assent/milp/lp.hpp"

namespace assent::oracles {

struct VertexOracleResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t vertices = 0;
};

namespace detail {

struct Hyperplane {
  Eigen::VectorXd a;
  double b;
};

inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Minimum of c'x over the vertices of a polyhedron that is assumed to be
/// bounded (every variable has finite bounds).
inline VertexOracleResult enumerate_vertices(const LinearProgram& lp, double tol = 1e-9) {
  const std::size_t n = lp.num_vars();
  std::vector<detail::Hyperplane> planes;
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    planes.push_back({lp.A.row(static_cast<Eigen::Index>(i)).transpose(), lp.b[i]});
  for (std::size_t j = 0; j < n; ++j) {
    for (double bound : {lp.lower[j], lp.upper[j]}) {
      if (!std::isfinite(bound)) continue;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      e[static_cast<Eigen::Index>(j)] = 1.0;
      planes.push_back({e, bound});
    }
  }
  VertexOracleResult out;
  if (n == 0 || planes.size() < n) return out;
  std::vector<std::size_t> pick(n);
  for (std::size_t k = 0; k < n; ++k) pick[k] = k;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  do {
    for (std::size_t k = 0; k < n; ++k) {
      M.row(static_cast<Eigen::Index>(k)) = planes[pick[k]].a.transpose();
      rhs[static_cast<Eigen::Index>(k)] = planes[pick[k]].b;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() < static_cast<Eigen::Index>(n)) continue;
    Eigen::VectorXd v = lu.solve(rhs);
    std::vector<double> x(v.data(), v.data() + v.size());
    double scale = 1.0;
    for (double xi : x) scale = std::max(scale, std::abs(xi));
    if (lp.max_violation(x) > tol * scale) continue;
    ++out.vertices;
    const double obj = lp.objective(x);
    if (!out.feasible || obj < out.objective) {
      out.feasible = true;
      out.objective = obj;
      out.x = x;
    }
  } while (detail::next_combination(pick, planes.size()));
  return out;
}

/// Recession cone of the feasible set intersected with [-1, 1]^n.
inline LinearProgram recession_program(const LinearProgram& lp) {
  LinearProgram r = lp;
  for (auto& v : r.b) v = 0.0;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    r.lower[j] = std::isfinite(lp.lower[j]) ? 0.0 : -1.0;
    r.upper[j] = std::isfinite(lp.upper[j]) ? 0.0 : 1.0;
  }
  return r;
}

/// For a feasible LP: unbounded iff some recession direction decreases c'x.
inline bool is_unbounded_given_feasible(const LinearProgram& lp, double tol = 1e-9) {
  auto r = enumerate_vertices(recession_program(lp), tol);
  return r.feasible && r.objective < -tol;
}

/// Random LP with integer data and finite bounds: up to `max_vars` variables
/// in [-5, 5]-ish boxes and up to `max_rows` rows of mixed sense.
inline LinearProgram random_bounded_lp(Engine& rng, std::size_t max_vars = 6,
                                       std::size_t max_rows = 8) {
  const std::size_t n = 1 + uniform_index(rng, max_vars);
  const std::size_t m = 1 + uniform_index(rng, max_rows);
  LinearProgram lp = LinearProgram::with_vars(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = -double(uniform_index(rng, 6));
    lp.lower[j] = lo;
    lp.upper[j] = lo + 1.0 + double(uniform_index(rng, 8));
    lp.c[j] = double(int(uniform_index(rng, 11)) - 5);
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < n; ++j) terms.push_back({j, double(int(uniform_index(rng, 9)) - 4)});
    const auto r = uniform_index(rng, 5);
    const RowSense s = r < 2 ? RowSense::less_equal : r < 4 ? RowSense::greater_equal : RowSense::equal;
    lp.add_row(terms, s, double(int(uniform_index(rng, 21)) - 10));
  }
  return lp;
}

/// Random LP with some infinite bounds whose rows are satisfied by a known
/// interior point, so it is feasible and possibly unbounded.
inline LinearProgram random_feasible_open_lp(Engine& rng, std::size_t max_vars = 5,
                                             std::size_t max_rows = 6) {
  const std::size_t n = 1 + uniform_index(rng, max_vars);
  const std::size_t m = 1 + uniform_index(rng, max_rows);
  LinearProgram lp = LinearProgram::with_vars(n);
  std::vector<double> x0(n);
  for (std::size_t j = 0; j < n; ++j) {
    x0[j] = double(int(uniform_index(rng, 7)) - 3);
    switch (uniform_index(rng, 4)) {
      case 0: lp.lower[j] = -kInf; lp.upper[j] = kInf; break;
      case 1: lp.lower[j] = x0[j] - double(uniform_index(rng, 3)); lp.upper[j] = kInf; break;
      case 2: lp.lower[j] = -kInf; lp.upper[j] = x0[j] + double(uniform_index(rng, 3)); break;
      default:
        lp.lower[j] = x0[j] - double(uniform_index(rng, 3));
        lp.upper[j] = x0[j] + double(uniform_index(rng, 3));
    }
    lp.c[j] = double(int(uniform_index(rng, 7)) - 3);
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<std::size_t, double>> terms;
    double ax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = double(int(uniform_index(rng, 7)) - 3);
      terms.push_back({j, a});
      ax += a * x0[j];
    }
    const auto r = uniform_index(rng, 5);
    const double slack = double(uniform_index(rng, 4));
    if (r < 2) lp.add_row(terms, RowSense::less_equal, ax + slack);
    else if (r < 4) lp.add_row(terms, RowSense::greater_equal, ax - slack);
    else lp.add_row(terms, RowSense::equal, ax);
  }
  return lp;
}

/// LP copy with every infinite bound replaced by +/- `radius`.
inline LinearProgram boxed(const LinearProgram& lp, double radius) {
  LinearProgram r = lp;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (!std::isfinite(r.lower[j])) r.lower[j] = -radius;
    if (!std::isfinite(r.upper[j])) r.upper[j] = radius;
  }
  return r;
}

}  // namespace assent::oracles
