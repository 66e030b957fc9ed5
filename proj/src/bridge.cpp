#include "countflow/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>

#include "countflow/sampler.hpp"

namespace countflow {

namespace {

void check_same_dim(const CountVector& a, const CountVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("count vector dimension mismatch");
}

double binomial_coefficient(Count n, Count k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  if (n <= 60) {
    // Exact in 64-bit integers: c * (n - k + i) stays below 2^64 for n <= 60.
    std::uint64_t c = 1;
    for (Count i = 1; i <= k; ++i) {
      c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return static_cast<double>(c);
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return std::exp(std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0));
}

// 1-D rates with eps_t = 0, defined for any integer state.
double exact_birth(Count x, Count x1, double t) {
  return x1 > x ? static_cast<double>(x1 - x) / (1.0 - t) : 0.0;
}

double exact_death(Count x, Count x1, double t) {
  return x > x1 ? static_cast<double>(x - x1) / (1.0 - t) : 0.0;
}

}  // namespace

CountVector sample_bridge(const CountVector& x0, const CountVector& x1, double t, Rng& rng) {
  check_same_dim(x0, x1);
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("bridge time must lie in [0, 1]");
  CountVector out = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const Count gap = x1[i] - x0[i];
    if (gap == 0) continue;
    const Count steps = sample_binomial(std::abs(gap), t, rng);
    out.set(i, x0[i] + (gap > 0 ? steps : -steps));
  }
  return out;
}

double bridge_pmf(Count x0, Count x1, double t, Count x) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("bridge time must lie in [0, 1]");
  const Count n = std::abs(x1 - x0);
  const Count k = std::abs(x - x0);
  const bool on_path = x1 >= x0 ? (x >= x0 && x <= x1) : (x <= x0 && x >= x1);
  if (!on_path) return 0.0;
  return binomial_coefficient(n, k) * std::pow(t, static_cast<double>(k)) *
         std::pow(1.0 - t, static_cast<double>(n - k));
}

ConditionalRates conditional_rates(const CountVector& x, const CountVector& x1, double t,
                                   const EpsilonConfig& eps) {
  check_same_dim(x, x1);
  if (!(t >= 0.0 && t < 1.0 + eps.eps_t)) {
    throw std::invalid_argument("conditional rates need 0 <= t < 1 + eps_t");
  }
  const double horizon = 1.0 - t + eps.eps_t;
  ConditionalRates r{std::vector<double>(x.size(), 0.0), std::vector<double>(x.size(), 0.0)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Count gap = x1[i] - x[i];
    if (gap > 0) r.birth[i] = static_cast<double>(gap) / horizon;
    if (gap < 0) r.death[i] = static_cast<double>(-gap) / horizon;
  }
  return r;
}

double kfe_residual(Count x0, Count x1, double t, Count x, double dt) {
  if (x0 < 0 || x1 < 0 || x < 0) throw std::invalid_argument("counts must be nonnegative");
  if (!(dt > 0.0) || !(t - dt > 0.0) || !(t + dt < 1.0)) {
    throw std::invalid_argument("central-difference stencil leaves (0, 1)");
  }
  const double dpdt = (bridge_pmf(x0, x1, t + dt, x) - bridge_pmf(x0, x1, t - dt, x)) / (2.0 * dt);
  const double influx = exact_birth(x - 1, x1, t) * bridge_pmf(x0, x1, t, x - 1) +
                        exact_death(x + 1, x1, t) * bridge_pmf(x0, x1, t, x + 1);
  const double outflux = (exact_birth(x, x1, t) + exact_death(x, x1, t)) * bridge_pmf(x0, x1, t, x);
  return std::abs(dpdt - influx + outflux);
}

RateField BridgeTargetRates::rates(const CountVector& x, double t, Label) const {
  const ConditionalRates c = conditional_rates(x, target_, t, eps_);
  RateField f;
  f.birth = c.birth;
  f.death = c.death;
  f.death_coeff.assign(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0) f.death_coeff[i] = c.death[i] / static_cast<double>(x[i]);
  }
  return f;
}

Trajectory simulate_conditional_ctmc(const CountVector& x0, const CountVector& x1,
                                     std::size_t n_steps, const EpsilonConfig& eps, Rng& rng) {
  check_same_dim(x0, x1);
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  const BridgeTargetRates model(x1, eps);
  SampleConfig cfg;
  cfg.n_steps = n_steps;
  cfg.eps = eps;
  cfg.record_trajectory = true;
  return simulate_interval(model, x0, 0.0, 1.0 - eps.eps_t, cfg, rng).trajectory;
}

}  // namespace countflow
