#pragma once

// Brute-force Pareto layering: front k holds the members dominated by no
// member outside fronts 0..k-1.

#include <cstddef>
#include <vector>

#include "assent/core/random.hpp"

namespace assent::oracles {

inline bool dominates_ref(const std::vector<double>& a, const std::vector<double>& b) {
  bool all_le = true, some_lt = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    all_le = all_le && a[m] <= b[m];
    some_lt = some_lt || a[m] < b[m];
  }
  return all_le && some_lt;
}

inline std::vector<std::size_t> brute_force_fronts(const std::vector<std::vector<double>>& objs) {
  const std::size_t n = objs.size();
  std::vector<std::size_t> front(n, n);
  std::size_t assigned = 0;
  for (std::size_t k = 0; assigned < n; ++k) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < n; ++i) {
      if (front[i] != n) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < n && !dominated; ++j)
        dominated = front[j] == n && j != i && dominates_ref(objs[j], objs[i]);
      if (!dominated) layer.push_back(i);
    }
    for (std::size_t i : layer) front[i] = k;
    assigned += layer.size();
  }
  return front;
}

/// Random population; values are drawn from a small integer grid so ties and
/// duplicates occur.
inline std::vector<std::vector<double>> random_objectives(Engine& rng, std::size_t max_members = 64,
                                                          std::size_t min_obj = 2,
                                                          std::size_t max_obj = 4) {
  const std::size_t n = 1 + uniform_index(rng, max_members);
  const std::size_t m = min_obj + uniform_index(rng, max_obj - min_obj + 1);
  const bool coarse = bernoulli(rng, 0.5);
  std::vector<std::vector<double>> out(n, std::vector<double>(m));
  for (auto& row : out)
    for (auto& v : row) v = coarse ? double(uniform_index(rng, 5)) : uniform01(rng);
  return out;
}

}  // namespace assent::oracles
