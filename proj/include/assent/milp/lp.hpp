#pragma once

// Dense two-phase bounded-variable primal simplex for
//   min c'x  s.t.  A x (<=|>=|=) b,  l <= x <= u.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace assent {

enum class RowSense { less_equal, greater_equal, equal };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinearProgram {
  std::vector<double> c;
  Eigen::MatrixXd A;
  std::vector<RowSense> sense;
  std::vector<double> b;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_vars() const { return c.size(); }
  std::size_t num_rows() const { return b.size(); }

  /// Empty program over n variables with bounds [lo, hi].
  static LinearProgram with_vars(std::size_t n, double lo = 0.0, double hi = kInf) {
    LinearProgram lp;
    lp.c.assign(n, 0.0);
    lp.A.resize(0, static_cast<Eigen::Index>(n));
    lp.lower.assign(n, lo);
    lp.upper.assign(n, hi);
    return lp;
  }

  std::size_t add_var(double lo, double hi, double cost = 0.0) {
    c.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    A.conservativeResize(A.rows(), A.cols() + 1);
    A.col(A.cols() - 1).setZero();
    return c.size() - 1;
  }

  /// Appends a row given as (index, coefficient) terms.
  std::size_t add_row(const std::vector<std::pair<std::size_t, double>>& terms, RowSense s,
                      double rhs) {
    A.conservativeResize(A.rows() + 1, static_cast<Eigen::Index>(num_vars()));
    A.row(A.rows() - 1).setZero();
    for (auto [j, v] : terms) A(A.rows() - 1, static_cast<Eigen::Index>(j)) += v;
    sense.push_back(s);
    b.push_back(rhs);
    return b.size() - 1;
  }

  void validate() const {
    const auto n = num_vars(), m = num_rows();
    if (std::size_t(A.rows()) != m || std::size_t(A.cols()) != n || sense.size() != m ||
        lower.size() != n || upper.size() != n)
      throw std::invalid_argument("LinearProgram: inconsistent dimensions");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(lower[j] <= upper[j])) throw std::invalid_argument("LinearProgram: lower > upper");
      if (lower[j] == kInf || upper[j] == -kInf)
        throw std::invalid_argument("LinearProgram: empty bound");
      if (!std::isfinite(c[j])) throw std::invalid_argument("LinearProgram: non-finite cost");
    }
    if (!A.allFinite()) throw std::invalid_argument("LinearProgram: non-finite matrix");
    for (double v : b)
      if (!std::isfinite(v)) throw std::invalid_argument("LinearProgram: non-finite rhs");
  }

  /// Largest violation of rows and bounds at x.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < num_vars(); ++j) {
      worst = std::max(worst, lower[j] - x[j]);
      worst = std::max(worst, x[j] - upper[j]);
    }
    for (std::size_t i = 0; i < num_rows(); ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < num_vars(); ++j) ax += A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
      if (sense[i] != RowSense::greater_equal) worst = std::max(worst, ax - b[i]);
      if (sense[i] != RowSense::less_equal) worst = std::max(worst, b[i] - ax);
    }
    return worst;
  }

  double objective(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < num_vars(); ++j) v += c[j] * x[j];
    return v;
  }
};

enum class LPStatus { optimal, infeasible, unbounded };

inline const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct LPResult {
  LPStatus status = LPStatus::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool numeric_warning = false;  // breakdown; status reported as infeasible
  std::string message;
};

struct LPOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;        // entries below this are ignored in the ratio test
  double breakdown_tol = 1e-11;   // pivots below this abort the solve
  std::size_t refactor_every = 64;
  std::size_t degenerate_switch = 32;  // consecutive degenerate pivots before Bland
  std::size_t max_iterations = 200000;
};

namespace detail {

/// Bounded-variable simplex over the columns [A | I | diag(sign)]: structural
/// variables, one slack per row, one artificial per row. Cold solves run the
/// two-phase primal method. After an optimal solve, variable bounds may be
/// changed and reoptimize() restarts from the last basis with the dual
/// method, falling back to a cold solve when that basis is not dual feasible.
class BoundedSimplex {
 public:
  enum class VarState { basic, at_lower, at_upper, free_zero };

  BoundedSimplex(const LinearProgram& lp, const LPOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    total_ = n_ + 2 * m_;
    lo_.assign(total_, 0.0);
    hi_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.lower[j];
      hi_[j] = lp.upper[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t s = n_ + i;
      switch (lp.sense[i]) {
        case RowSense::less_equal: lo_[s] = 0.0; hi_[s] = kInf; break;
        case RowSense::greater_equal: lo_[s] = -kInf; hi_[s] = 0.0; break;
        case RowSense::equal: lo_[s] = 0.0; hi_[s] = 0.0; break;
      }
    }
    art_sign_.assign(m_, 1.0);
    cost2_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost2_[j] = lp.c[j];
    refactor_interval_ = std::max(opt_.refactor_every, m_);
  }

  void set_bounds(std::size_t j, double lo, double hi) {
    lo_[j] = lo;
    hi_[j] = hi;
  }

  LPResult solve() {
    LPResult res;
    cold_start();
    refactor();
    // Phase 1: minimize the sum of artificials.
    std::vector<double> cost1(total_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) cost1[n_ + m_ + i] = 1.0;
    auto st = primal(cost1, res);
    if (st == Outcome::breakdown) return breakdown(res);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeas += x_[n_ + m_ + i];
    if (infeas > opt_.feasibility_tol * std::max<double>(1.0, double(m_))) {
      res.status = LPStatus::infeasible;
      return res;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t a = n_ + m_ + i;
      hi_[a] = 0.0;
      if (state_[a] != VarState::basic) {
        state_[a] = VarState::at_lower;
        x_[a] = 0.0;
      }
    }
    // Phase 2.
    st = primal(cost2_, res);
    return finish(st, res);
  }

  /// Re-solves after set_bounds() calls, warm from the last optimal basis.
  LPResult reoptimize() {
    if (!warm_) return solve();
    LPResult res;
    const Eigen::RowVectorXd d = reduced_costs(cost2_);
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == VarState::basic) continue;
      const double dj = d[Eigen::Index(j)];
      const bool has_lo = std::isfinite(lo_[j]), has_hi = std::isfinite(hi_[j]);
      if (lo_[j] == hi_[j]) {
        state_[j] = VarState::at_lower;
      } else if (dj > opt_.optimality_tol) {
        if (!has_lo) return solve();
        state_[j] = VarState::at_lower;
      } else if (dj < -opt_.optimality_tol) {
        if (!has_hi) return solve();
        state_[j] = VarState::at_upper;
      } else if (state_[j] == VarState::at_lower && !has_lo) {
        state_[j] = has_hi ? VarState::at_upper : VarState::free_zero;
      } else if (state_[j] == VarState::at_upper && !has_hi) {
        state_[j] = has_lo ? VarState::at_lower : VarState::free_zero;
      }
      x_[j] = state_[j] == VarState::at_lower ? lo_[j] : state_[j] == VarState::at_upper ? hi_[j] : 0.0;
    }
    recompute_basics();
    auto st = dual(cost2_, res);
    if (st == Outcome::infeasible) {
      res.status = LPStatus::infeasible;
      return res;
    }
    if (st == Outcome::breakdown) return solve();
    st = primal(cost2_, res);
    auto out = finish(st, res);
    if (out.numeric_warning) return solve();
    return out;
  }

 private:
  enum class Outcome { optimal, unbounded, infeasible, breakdown };

  void cold_start() {
    warm_ = false;
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::at_lower);
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (std::isfinite(lo_[j])) {
        state_[j] = VarState::at_lower;
        x_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        state_[j] = VarState::at_upper;
        x_[j] = hi_[j];
      } else {
        state_[j] = VarState::free_zero;
        x_[j] = 0.0;
      }
    }
    // Artificials absorb the initial residual b - A x_N.
    basis_.resize(m_);
    const Eigen::VectorXd ax = lp_.A * Eigen::Map<const Eigen::VectorXd>(x_.data(), Eigen::Index(n_));
    for (std::size_t i = 0; i < m_; ++i) {
      const double r = lp_.b[i] - ax[Eigen::Index(i)] - x_[n_ + i];
      const std::size_t a = n_ + m_ + i;
      art_sign_[i] = r >= 0.0 ? 1.0 : -1.0;
      lo_[a] = 0.0;
      hi_[a] = kInf;
      x_[a] = std::abs(r);
      state_[a] = VarState::basic;
      basis_[i] = a;
    }
  }

  LPResult finish(Outcome st, LPResult& res) {
    if (st == Outcome::breakdown) return breakdown(res);
    if (st == Outcome::unbounded) {
      res.status = LPStatus::unbounded;
      return res;
    }
    recompute_basics();
    if (max_violation(x_) > opt_.feasibility_tol) {
      if (!refactor()) return breakdown(res);
      recompute_basics();
    }
    res.x.assign(x_.begin(), x_.begin() + std::ptrdiff_t(n_));
    for (std::size_t j = 0; j < n_; ++j) {
      // Snap tiny bound excursions produced by round-off.
      if (res.x[j] < lo_[j]) res.x[j] = lo_[j];
      if (res.x[j] > hi_[j]) res.x[j] = hi_[j];
    }
    if (max_violation(res.x) > 1e3 * opt_.feasibility_tol) {
      res.message = "final solution violates constraints after refactorization";
      return breakdown(res);
    }
    res.status = LPStatus::optimal;
    res.objective = lp_.objective(res.x);
    warm_ = true;
    return res;
  }

  /// Row and bound violation under the current (possibly changed) bounds.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < n_; ++j) worst = std::max({worst, lo_[j] - x[j], x[j] - hi_[j]});
    const Eigen::VectorXd ax = lp_.A * Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(n_));
    for (std::size_t i = 0; i < m_; ++i) {
      const double v = ax[Eigen::Index(i)];
      if (lp_.sense[i] != RowSense::greater_equal) worst = std::max(worst, v - lp_.b[i]);
      if (lp_.sense[i] != RowSense::less_equal) worst = std::max(worst, lp_.b[i] - v);
    }
    return worst;
  }

  LPResult& breakdown(LPResult& res) {
    warm_ = false;
    res.status = LPStatus::infeasible;
    res.numeric_warning = true;
    res.x.clear();
    if (res.message.empty()) res.message = "numeric breakdown in simplex";
    return res;
  }

  // Column j of [A | I | diag(sign)] times a dense operator, without forming it.
  Eigen::VectorXd ftran(std::size_t j) const {
    if (j < n_) return binv_ * lp_.A.col(Eigen::Index(j));
    if (j < n_ + m_) return binv_.col(Eigen::Index(j - n_));
    return art_sign_[j - n_ - m_] * binv_.col(Eigen::Index(j - n_ - m_));
  }

  /// row · [A | I | diag(sign)].
  Eigen::RowVectorXd row_times_columns(const Eigen::RowVectorXd& row) const {
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(total_));
    out.head(Eigen::Index(n_)) = row * lp_.A;
    out.segment(Eigen::Index(n_), Eigen::Index(m_)) = row;
    for (std::size_t i = 0; i < m_; ++i) out[Eigen::Index(n_ + m_ + i)] = art_sign_[i] * row[Eigen::Index(i)];
    return out;
  }

  Eigen::RowVectorXd reduced_costs(const std::vector<double>& cost) const {
    Eigen::RowVectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) cb[Eigen::Index(i)] = cost[basis_[i]];
    const Eigen::RowVectorXd y = cb * binv_;
    return Eigen::Map<const Eigen::RowVectorXd>(cost.data(), Eigen::Index(total_)) - row_times_columns(y);
  }

  bool refactor() {
    since_refactor_ = 0;
    if (m_ == 0) {
      binv_.resize(0, 0);
      return true;
    }
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(Eigen::Index(m_), Eigen::Index(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      if (j < n_) B.col(Eigen::Index(i)) = lp_.A.col(Eigen::Index(j));
      else if (j < n_ + m_) B(Eigen::Index(j - n_), Eigen::Index(i)) = 1.0;
      else B(Eigen::Index(j - n_ - m_), Eigen::Index(i)) = art_sign_[j - n_ - m_];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const auto& U = lu.matrixLU();
    double umax = 0.0, umin = kInf;
    for (Eigen::Index k = 0; k < U.rows(); ++k) {
      umax = std::max(umax, std::abs(U(k, k)));
      umin = std::min(umin, std::abs(U(k, k)));
    }
    if (!(umin > opt_.breakdown_tol * std::max(1.0, umax))) return false;
    binv_ = lu.inverse();
    return binv_.allFinite();
  }

  void recompute_basics() {
    Eigen::VectorXd xn = Eigen::VectorXd::Zero(Eigen::Index(n_));
    Eigen::VectorXd r(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < n_; ++j)
      if (state_[j] != VarState::basic) xn[Eigen::Index(j)] = x_[j];
    r = Eigen::Map<const Eigen::VectorXd>(lp_.b.data(), Eigen::Index(m_)) - lp_.A * xn;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t s = n_ + i, a = n_ + m_ + i;
      if (state_[s] != VarState::basic) r[Eigen::Index(i)] -= x_[s];
      if (state_[a] != VarState::basic) r[Eigen::Index(i)] -= art_sign_[i] * x_[a];
    }
    const Eigen::VectorXd xb = binv_ * r;
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb[Eigen::Index(i)];
  }

  /// Replaces basis_[leave] by `enter`; alpha is B^-1 times the entering column.
  void pivot(std::size_t leave, std::size_t enter, const Eigen::VectorXd& alpha) {
    const double p = alpha[Eigen::Index(leave)];
    const Eigen::RowVectorXd pivot_row = binv_.row(Eigen::Index(leave)) / p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == leave) continue;
      const double a = alpha[Eigen::Index(i)];
      if (a != 0.0) binv_.row(Eigen::Index(i)) -= a * pivot_row;
    }
    binv_.row(Eigen::Index(leave)) = pivot_row;
    basis_[leave] = enter;
    state_[enter] = VarState::basic;
    ++since_refactor_;
  }

  Outcome primal(const std::vector<double>& cost, LPResult& res) {
    std::size_t degenerate_run = 0;
    while (true) {
      if (res.iterations++ > opt_.max_iterations) return Outcome::breakdown;
      if (since_refactor_ >= refactor_interval_) {
        if (!refactor()) return Outcome::breakdown;
        recompute_basics();
      }
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      const Eigen::RowVectorXd d = reduced_costs(cost);
      // Pricing.
      std::size_t enter = total_;
      double enter_dir = 0.0, best = 0.0;
      for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == VarState::basic) continue;
        if (lo_[j] == hi_[j]) continue;
        const double dj = d[Eigen::Index(j)];
        double dir = 0.0;
        if (state_[j] == VarState::at_lower && dj < -opt_.optimality_tol) dir = 1.0;
        else if (state_[j] == VarState::at_upper && dj > opt_.optimality_tol) dir = -1.0;
        else if (state_[j] == VarState::free_zero && std::abs(dj) > opt_.optimality_tol)
          dir = dj < 0.0 ? 1.0 : -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter == total_) return Outcome::optimal;

      const Eigen::VectorXd alpha = ftran(enter);
      // Ratio test: basic i moves at rate -dir * alpha_i.
      double step = hi_[enter] - lo_[enter];  // bound flip (inf for free / half-bounded)
      std::size_t leave = m_;                 // m_ == bound flip
      double leave_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double rate = -enter_dir * alpha[Eigen::Index(i)];
        if (std::abs(rate) < opt_.pivot_tol) continue;
        const std::size_t bi = basis_[i];
        double limit;
        if (rate < 0.0) {
          if (!std::isfinite(lo_[bi])) continue;
          limit = (x_[bi] - lo_[bi]) / -rate;
        } else {
          if (!std::isfinite(hi_[bi])) continue;
          limit = (hi_[bi] - x_[bi]) / rate;
        }
        if (limit < 0.0) limit = 0.0;
        bool take = false;
        if (limit < step - 1e-12) take = true;
        else if (limit <= step + 1e-12 && leave != m_) {
          // Tie: Bland keeps lowest variable index, otherwise largest pivot.
          take = bland ? basis_[i] < basis_[leave] : std::abs(rate) > leave_pivot;
        }
        if (take) {
          step = limit;
          leave = i;
          leave_pivot = std::abs(rate);
        }
      }
      if (!std::isfinite(step)) return Outcome::unbounded;

      // Apply the step.
      if (step > 0.0) {
        for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= step * enter_dir * alpha[Eigen::Index(i)];
        x_[enter] += step * enter_dir;
      }
      degenerate_run = step > 1e-12 ? 0 : degenerate_run + 1;

      if (leave == m_) {
        state_[enter] = enter_dir > 0.0 ? VarState::at_upper : VarState::at_lower;
        x_[enter] = enter_dir > 0.0 ? hi_[enter] : lo_[enter];
        continue;
      }
      const double p = alpha[Eigen::Index(leave)];
      if (std::abs(p) < opt_.breakdown_tol) return Outcome::breakdown;
      const std::size_t out = basis_[leave];
      if (-enter_dir * p < 0.0) {
        state_[out] = VarState::at_lower;
        x_[out] = lo_[out];
      } else {
        state_[out] = VarState::at_upper;
        x_[out] = hi_[out];
      }
      pivot(leave, enter, alpha);
    }
  }

  /// Dual simplex from a dual-feasible basis. Leaving row: largest bound
  /// violation (lowest basic index after a degenerate stretch); entering
  /// column: least |d_j / alpha_rj|, ties to the largest |alpha_rj|.
  Outcome dual(const std::vector<double>& cost, LPResult& res) {
    std::size_t degenerate_run = 0;
    while (true) {
      if (res.iterations++ > opt_.max_iterations) return Outcome::breakdown;
      if (since_refactor_ >= refactor_interval_) {
        if (!refactor()) return Outcome::breakdown;
        recompute_basics();
      }
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      std::size_t r = m_;
      double worst = opt_.feasibility_tol;
      for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t bi = basis_[i];
        const double v = std::max(lo_[bi] - x_[bi], x_[bi] - hi_[bi]);
        if (v <= opt_.feasibility_tol) continue;
        if (bland ? (r == m_ || bi < basis_[r]) : v > worst) {
          worst = v;
          r = i;
        }
      }
      if (r == m_) return Outcome::optimal;
      const std::size_t out = basis_[r];
      const bool below = x_[out] < lo_[out];
      const double target = below ? lo_[out] : hi_[out];
      const double s = below ? 1.0 : -1.0;  // required sign of the change in x_out

      const Eigen::RowVectorXd d = reduced_costs(cost);
      const Eigen::RowVectorXd row = row_times_columns(binv_.row(Eigen::Index(r)));
      std::size_t enter = total_;
      double enter_dir = 0.0, best_ratio = kInf, best_alpha = 0.0;
      for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == VarState::basic || lo_[j] == hi_[j]) continue;
        const double a = row[Eigen::Index(j)];
        if (std::abs(a) < opt_.pivot_tol) continue;
        // x_out changes by -a * dir * t.
        double dir;
        if (state_[j] == VarState::at_lower) dir = 1.0;
        else if (state_[j] == VarState::at_upper) dir = -1.0;
        else dir = -a * s > 0.0 ? 1.0 : -1.0;
        if (-a * dir * s <= 0.0) continue;
        const double ratio = std::abs(d[Eigen::Index(j)]) / std::abs(a);
        bool take = ratio < best_ratio - 1e-12;
        if (!take && ratio <= best_ratio + 1e-12)
          take = bland ? j < enter : std::abs(a) > best_alpha;
        if (take) {
          best_ratio = ratio;
          best_alpha = std::abs(a);
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter == total_) return Outcome::infeasible;
      degenerate_run = best_ratio > 1e-12 ? 0 : degenerate_run + 1;

      const Eigen::VectorXd alpha = ftran(enter);
      const double p = alpha[Eigen::Index(r)];
      if (std::abs(p) < opt_.breakdown_tol) return Outcome::breakdown;
      const double t = (x_[out] - target) / p;  // signed change of x_enter
      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= t * alpha[Eigen::Index(i)];
      x_[enter] += t;
      x_[out] = target;
      state_[out] = below ? VarState::at_lower : VarState::at_upper;
      pivot(r, enter, alpha);
    }
  }

  const LinearProgram& lp_;
  LPOptions opt_;
  std::size_t n_ = 0, m_ = 0, total_ = 0;
  Eigen::MatrixXd binv_;
  std::vector<double> lo_, hi_, x_, art_sign_, cost2_;
  std::vector<VarState> state_;
  std::vector<std::size_t> basis_;
  std::size_t since_refactor_ = 0, refactor_interval_ = 64;
  bool warm_ = false;
};

}  // namespace detail

inline LPResult solve_lp(const LinearProgram& lp, const LPOptions& opt = {}) {
  lp.validate();
  detail::BoundedSimplex s(lp, opt);
  return s.solve();
}

}  // namespace assent
