#include "countflow/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace countflow {

CouplingKind parse_coupling(std::string_view name) {
  if (name == "independent") return CouplingKind::independent;
  if (name == "ot") return CouplingKind::ot;
  throw std::invalid_argument("unknown coupling '" + std::string(name) + "' (expected independent or ot)");
}

std::string_view coupling_name(CouplingKind kind) {
  return kind == CouplingKind::ot ? "ot" : "independent";
}

double symmetric_poisson_cost(std::span<const Count> x, std::span<const Count> y, double eps_c) {
  if (x.size() != y.size()) throw std::invalid_argument("count vector dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == y[i]) continue;
    const double xi = static_cast<double>(x[i]);
    const double yi = static_cast<double>(y[i]);
    // (x - y)(log(x + eps) - log(y + eps)) is the same sum regrouped, and is
    // exactly symmetric under swapping x and y.
    total += (xi - yi) * (std::log(xi + eps_c) - std::log(yi + eps_c));
  }
  return total;
}

double symmetric_poisson_cost(const CountVector& x, const CountVector& y, double eps_c) {
  return symmetric_poisson_cost(x.values(), y.values(), eps_c);
}

CostMatrix poisson_cost_matrix(const CountMatrix& source, const CountMatrix& target, double eps_c) {
  if (source.cols != target.cols) throw std::invalid_argument("batch dimension mismatch");
  CostMatrix c(source.rows, target.rows);
  for (std::size_t i = 0; i < source.rows; ++i) {
    for (std::size_t j = 0; j < target.rows; ++j) {
      c(i, j) = symmetric_poisson_cost(source.row(i), target.row(j), eps_c);
    }
  }
  return c;
}

namespace {

void check_batches(const CountMatrix& source, const CountMatrix& target) {
  if (source.rows != target.rows) {
    throw std::invalid_argument("coupling needs equal batch sizes (got " + std::to_string(source.rows) +
                                " and " + std::to_string(target.rows) + ")");
  }
  if (source.cols != target.cols) throw std::invalid_argument("batch dimension mismatch");
}

EndpointBatch assemble(CouplingKind kind, const CountMatrix& source, const CountMatrix& target,
                       std::vector<std::size_t> target_of, double eps_c) {
  EndpointBatch b;
  b.kind = kind;
  b.pairs.reserve(source.rows);
  double cost = 0.0;
  for (std::size_t i = 0; i < source.rows; ++i) {
    const std::size_t j = target_of[i];
    b.pairs.push_back({source.row_vector(i), target.row_vector(j),
                       target.has_labels() ? target.labels[j] : kNullLabel});
    cost += symmetric_poisson_cost(source.row(i), target.row(j), eps_c);
  }
  b.mean_cost = source.rows ? cost / static_cast<double>(source.rows) : 0.0;
  b.target_of = std::move(target_of);
  return b;
}

}  // namespace

EndpointBatch independent_pairs(const CountMatrix& source, const CountMatrix& target, Rng& rng,
                                double eps_c) {
  check_batches(source, target);
  std::vector<std::size_t> perm(source.rows);
  std::iota(perm.begin(), perm.end(), 0);
  // Fisher-Yates with our own uniform draws; std::shuffle's draw pattern is
  // implementation-defined.
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(k, i - 1)]);
  }
  return assemble(CouplingKind::independent, source, target, std::move(perm), eps_c);
}

EndpointBatch ot_pairs(const CountMatrix& source, const CountMatrix& target, double eps_c) {
  check_batches(source, target);
  if (!(eps_c > 0.0)) throw std::invalid_argument("eps_c must be positive");
  auto perm = solve_assignment(poisson_cost_matrix(source, target, eps_c));
  return assemble(CouplingKind::ot, source, target, std::move(perm), eps_c);
}

EndpointBatch ot_pairs_grouped(const CountMatrix& source, const CountMatrix& target, double eps_c) {
  check_batches(source, target);
  if (!source.has_labels() || !target.has_labels()) {
    throw std::invalid_argument("group-restricted coupling needs label columns on both sides");
  }
  std::map<Label, std::vector<std::size_t>> src_groups, tgt_groups;
  for (std::size_t i = 0; i < source.rows; ++i) src_groups[source.labels[i]].push_back(i);
  for (std::size_t j = 0; j < target.rows; ++j) tgt_groups[target.labels[j]].push_back(j);

  std::vector<std::size_t> target_of(source.rows);
  for (const auto& [group, src_idx] : src_groups) {
    const auto it = tgt_groups.find(group);
    if (it == tgt_groups.end() || it->second.size() != src_idx.size()) {
      throw std::invalid_argument("group " + std::to_string(group) + " has unequal source/target sizes");
    }
    const auto& tgt_idx = it->second;
    const auto perm = solve_assignment(
        poisson_cost_matrix(source.select(src_idx), target.select(tgt_idx), eps_c));
    for (std::size_t k = 0; k < src_idx.size(); ++k) target_of[src_idx[k]] = tgt_idx[perm[k]];
  }
  if (src_groups.size() != tgt_groups.size()) {
    throw std::invalid_argument("target contains groups absent from the source");
  }
  return assemble(CouplingKind::ot, source, target, std::move(target_of), eps_c);
}

}  // namespace countflow
