#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "countflow/coupling.hpp"
#include "countflow/random.hpp"
#include "countflow/types.hpp"

namespace testing_support {

using namespace countflow;

// Minimum over all n! permutations, and the lexicographically first argmin.
struct BruteForce {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> perm;
};

inline BruteForce brute_force_assignment(const CostMatrix& c) {
  std::vector<std::size_t> p(c.rows);
  std::iota(p.begin(), p.end(), std::size_t{0});
  BruteForce best;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += c(i, p[i]);
    if (s < best.cost) {
      best.cost = s;
      best.perm = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

inline CostMatrix random_costs(std::size_t n, Rng& rng, double scale = 10.0) {
  CostMatrix c(n, n);
  for (double& x : c.data) x = uniform01(rng) * scale;
  return c;
}

inline CountMatrix random_counts(std::size_t n, std::size_t d, Count hi, Rng& rng) {
  CountMatrix m(n, d);
  for (Count& x : m.data) x = static_cast<Count>(uniform01(rng) * static_cast<double>(hi + 1));
  return m;
}

inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

inline double binomial_pmf(int n, int k, double p) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

}  // namespace testing_support
