#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "countflow/coupling.hpp"

namespace countflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Solution {
  std::vector<std::size_t> col_of;  // row -> column
  std::vector<std::size_t> row_of;  // column -> row
  std::vector<double> u;            // row potentials
  std::vector<double> v;            // column potentials
};

// Shortest augmenting path Hungarian method (1-indexed internally).
Solution hungarian(const CostMatrix& c) {
  const std::size_t n = c.rows;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  // Warm start: row then column reduction gives feasible duals; rows are
  // greedily matched along edges whose reduced cost is exactly zero.
  for (std::size_t i = 1; i <= n; ++i) {
    const double* row = c.data.data() + (i - 1) * n;
    u[i] = *std::min_element(row, row + n);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    double m = kInf;
    for (std::size_t i = 1; i <= n; ++i) m = std::min(m, c.data[(i - 1) * n + (j - 1)] - u[i]);
    v[j] = m;
  }
  std::vector<char> row_done(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double* row = c.data.data() + (i - 1) * n;
    for (std::size_t j = 1; j <= n; ++j) {
      if (p[j] == 0 && row[j - 1] - u[i] - v[j] == 0.0) {
        p[j] = i;
        row_done[i] = 1;
        break;
      }
    }
  }

  // Dual updates are applied lazily: `acc` is the total shift applied so far
  // in the current search, slack[j] holds minv[j] + acc for unvisited columns
  // and shift_at[j] the value of acc when column j was visited.
  std::vector<double> slack(n + 1), shift_at(n + 1);
  std::vector<std::size_t> visited;
  visited.reserve(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    if (row_done[i]) continue;
    p[0] = i;
    std::size_t j0 = 0;
    double acc = 0.0;
    std::fill(slack.begin(), slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    visited.clear();
    do {
      used[j0] = 1;
      shift_at[j0] = acc;
      visited.push_back(j0);
      const std::size_t i0 = p[j0];
      double best = kInf;
      std::size_t j1 = 0;
      const double* row = c.data.data() + (i0 - 1) * n;
      const double ui = u[i0];
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui - v[j] + acc;
        if (cur < slack[j]) {
          slack[j] = cur;
          way[j] = j0;
        }
        if (slack[j] < best) {
          best = slack[j];
          j1 = j;
        }
      }
      acc = best;
      j0 = j1;
    } while (p[j0] != 0);
    for (std::size_t j : visited) {
      const double shift = acc - shift_at[j];
      u[p[j]] += shift;
      if (j != 0) v[j] -= shift;
    }
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Solution s;
  s.col_of.resize(n);
  s.row_of.resize(n);
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  for (std::size_t j = 1; j <= n; ++j) {
    s.row_of[j - 1] = p[j] - 1;
    s.col_of[p[j] - 1] = j - 1;
  }
  return s;
}

// Rewrites an optimal matching into the lexicographically smallest optimal
// one. Optimal matchings are exactly the perfect matchings on edges with zero
// reduced cost, so rows are fixed in order to their smallest feasible tight
// column, re-routing the rest of the matching along alternating paths.
void lexicographic_fixup(const CostMatrix& c, Solution& s) {
  const std::size_t n = c.rows;
  double scale = 1.0;
  for (double x : c.data) scale = std::max(scale, std::abs(x));
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n) * scale;
  auto tight = [&](std::size_t i, std::size_t j) { return c(i, j) - s.u[i] - s.v[j] <= tol; };

  std::vector<char> col_fixed(n, 0);
  std::vector<std::size_t> parent_row(n);  // row that takes this row's column
  std::vector<std::size_t> via_col(n);     // that column
  std::vector<char> seen_row(n);
  std::vector<std::size_t> queue;
  queue.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (col_fixed[j] || !tight(i, j)) continue;
      if (s.col_of[i] == j) break;
      // Give column j to row i. Its current owner must reach the column freed
      // by i along an alternating path among unfixed rows and columns.
      const std::size_t freed = s.col_of[i];
      const std::size_t start = s.row_of[j];
      std::fill(seen_row.begin(), seen_row.end(), 0);
      seen_row[i] = 1;
      seen_row[start] = 1;
      queue.assign(1, start);
      std::size_t last = n;
      for (std::size_t q = 0; q < queue.size() && last == n; ++q) {
        const std::size_t r = queue[q];
        for (std::size_t col = 0; col < n; ++col) {
          if (col_fixed[col] || col == j || col == s.col_of[r] || !tight(r, col)) continue;
          if (col == freed) {
            last = r;
            break;
          }
          const std::size_t owner = s.row_of[col];
          if (seen_row[owner]) continue;
          seen_row[owner] = 1;
          parent_row[owner] = r;
          via_col[owner] = col;
          queue.push_back(owner);
        }
      }
      if (last == n) continue;
      std::size_t r = last;
      std::size_t col = freed;
      while (true) {
        s.col_of[r] = col;
        s.row_of[col] = r;
        if (r == start) break;
        col = via_col[r];
        r = parent_row[r];
      }
      s.col_of[i] = j;
      s.row_of[j] = i;
      break;
    }
    col_fixed[s.col_of[i]] = 1;
  }
}

}  // namespace

std::vector<std::size_t> solve_assignment(const CostMatrix& cost) {
  if (cost.rows != cost.cols) throw std::invalid_argument("assignment needs a square cost matrix");
  if (cost.data.size() != cost.rows * cost.cols) throw std::invalid_argument("cost matrix shape mismatch");
  for (double x : cost.data) {
    if (!std::isfinite(x)) throw std::invalid_argument("assignment costs must be finite");
  }
  if (cost.rows == 0) return {};
  Solution s = hungarian(cost);
  lexicographic_fixup(cost, s);
  return s.col_of;
}

double assignment_cost(const CostMatrix& cost, std::span<const std::size_t> perm) {
  double total = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) total += cost(i, perm[i]);
  return total;
}

}  // namespace countflow
