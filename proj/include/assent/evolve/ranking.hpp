#pragma once

// NSGA-II ranking: fast nondominated sorting and crowding distance.
// All objectives are minimized.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace assent {

using ObjectiveMatrix = std::vector<std::vector<double>>;

/// a dominates b iff a <= b everywhere and a < b somewhere.
inline bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  bool strict = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] > b[m]) return false;
    if (a[m] < b[m]) strict = true;
  }
  return strict;
}

struct FrontAssignment {
  std::vector<std::size_t> front_of;               // per member
  std::vector<std::vector<std::size_t>> fronts;    // member indices, ascending
};

inline FrontAssignment fast_nondominated_sort(const ObjectiveMatrix& objectives) {
  const std::size_t n = objectives.size();
  for (const auto& o : objectives)
    if (o.size() != objectives.front().size())
      throw std::invalid_argument("fast_nondominated_sort: ragged objective vectors");

  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> domination_count(n, 0);
  FrontAssignment out;
  out.front_of.assign(n, 0);

  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(objectives[p], objectives[q])) {
        dominated[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(objectives[q], objectives[p])) {
        dominated[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (domination_count[p] == 0) current.push_back(p);

  std::size_t rank = 0;
  while (!current.empty()) {
    std::sort(current.begin(), current.end());
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      out.front_of[p] = rank;
      for (std::size_t q : dominated[p])
        if (--domination_count[q] == 0) next.push_back(q);
    }
    out.fronts.push_back(std::move(current));
    current = std::move(next);
    ++rank;
  }
  return out;
}

/// Crowding distance of each member of one front (objectives given in front
/// order). Per objective, the extreme members get +inf and interior members
/// accumulate (next - prev) / (max - min); zero-range objectives add nothing.
inline std::vector<double> crowding_distance(const ObjectiveMatrix& front) {
  const std::size_t n = front.size();
  if (n == 0) throw std::invalid_argument("crowding_distance: empty front");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  const std::size_t m_count = front.front().size();
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < m_count; ++m) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return front[a][m] < front[b][m]; });
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = front[order.back()][m] - front[order.front()][m];
    if (!(range > 0.0)) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (dist[order[k]] == inf) continue;
      dist[order[k]] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
    }
  }
  return dist;
}

struct Ranking {
  std::vector<std::size_t> front;
  std::vector<double> crowding;
  std::vector<std::vector<std::size_t>> fronts;
};

inline Ranking rank_population(const ObjectiveMatrix& objectives) {
  Ranking r;
  auto fa = fast_nondominated_sort(objectives);
  r.front = std::move(fa.front_of);
  r.fronts = std::move(fa.fronts);
  r.crowding.assign(objectives.size(), 0.0);
  for (const auto& f : r.fronts) {
    ObjectiveMatrix sub;
    sub.reserve(f.size());
    for (std::size_t i : f) sub.push_back(objectives[i]);
    auto d = crowding_distance(sub);
    for (std::size_t k = 0; k < f.size(); ++k) r.crowding[f[k]] = d[k];
  }
  return r;
}

/// Crowded-comparison: lower front wins, then larger crowding, then lower index.
inline bool crowded_less(const Ranking& r, std::size_t a, std::size_t b) {
  if (r.front[a] != r.front[b]) return r.front[a] < r.front[b];
  if (r.crowding[a] != r.crowding[b]) return r.crowding[a] > r.crowding[b];
  return a < b;
}

/// Environmental selection: whole fronts in order, the last one truncated by
/// descending crowding distance. Returns indices in selection order.
inline std::vector<std::size_t> select_survivors(const ObjectiveMatrix& objectives,
                                                 std::size_t count) {
  auto r = rank_population(objectives);
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  for (const auto& f : r.fronts) {
    if (chosen.size() + f.size() <= count) {
      chosen.insert(chosen.end(), f.begin(), f.end());
      if (chosen.size() == count) break;
      continue;
    }
    std::vector<std::size_t> last = f;
    std::stable_sort(last.begin(), last.end(),
                     [&](std::size_t a, std::size_t b) { return crowded_less(r, a, b); });
    last.resize(count - chosen.size());
    chosen.insert(chosen.end(), last.begin(), last.end());
    break;
  }
  return chosen;
}

}  // namespace assent
