#pragma once

// Endpoint couplings between a source and a target minibatch: a uniformly
// random pairing, or the exact minibatch optimal-transport pairing under the
// symmetric Poisson cost. With uniform marginals on two batches of equal size
// an optimal coupling is a permutation, so OT reduces to linear assignment.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "countflow/random.hpp"
#include "countflow/types.hpp"

namespace countflow {

enum class CouplingKind { independent, ot };

CouplingKind parse_coupling(std::string_view name);
std::string_view coupling_name(CouplingKind kind);

/// Dense row-major matrix of real costs.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  CostMatrix() = default;
  CostMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

/// Permutation minimising sum_i cost(i, perm[i]). Among optimal permutations
/// the lexicographically smallest is returned. Shortest augmenting paths with
/// dual potentials, O(n^3). Throws std::invalid_argument for non-square or
/// non-finite input.
std::vector<std::size_t> solve_assignment(const CostMatrix& cost);

double assignment_cost(const CostMatrix& cost, std::span<const std::size_t> perm);

/// sum_i x_i log((x_i + eps_c) / (y_i + eps_c)) + y_i log((y_i + eps_c) / (x_i + eps_c))
double symmetric_poisson_cost(std::span<const Count> x, std::span<const Count> y, double eps_c);
double symmetric_poisson_cost(const CountVector& x, const CountVector& y, double eps_c);

CostMatrix poisson_cost_matrix(const CountMatrix& source, const CountMatrix& target, double eps_c);

struct EndpointPair {
  CountVector x0;
  CountVector x1;
  Label condition = kNullLabel;
};

struct EndpointBatch {
  CouplingKind kind = CouplingKind::independent;
  std::vector<EndpointPair> pairs;
  /// Source row i is paired with target row target_of[i].
  std::vector<std::size_t> target_of;
  /// Mean symmetric Poisson cost of the chosen pairs.
  double mean_cost = 0.0;
};

/// Pairs source[i] with target[sigma(i)] for a uniform random permutation.
/// Conditions are taken from the target labels when present.
EndpointBatch independent_pairs(const CountMatrix& source, const CountMatrix& target, Rng& rng,
                                double eps_c = 1e-8);

/// Exact OT pairing under the symmetric Poisson cost.
EndpointBatch ot_pairs(const CountMatrix& source, const CountMatrix& target, double eps_c);

/// OT solved independently within each group: source and target rows are
/// grouped by their label column, and every group must have equal sizes on
/// both sides.
EndpointBatch ot_pairs_grouped(const CountMatrix& source, const CountMatrix& target, double eps_c);

}  // namespace countflow
