#pragma once

// Conditional binomial bridge between two count vectors: each coordinate
// takes Binomial(|x1 - x0|, t) unit steps from x0 toward x1, so the mean moves
// linearly and the path never leaves the interval between the endpoints.

#include <vector>

#include "countflow/random.hpp"
#include "countflow/rates.hpp"
#include "countflow/types.hpp"

namespace countflow {

/// Bridge rates at state x toward target x1. At most one of birth[i],
/// death[i] is nonzero.
struct ConditionalRates {
  std::vector<double> birth;
  std::vector<double> death;
};

/// Draws x_t for the bridge pinned at x0 (t = 0) and x1 (t = 1).
CountVector sample_bridge(const CountVector& x0, const CountVector& x1, double t, Rng& rng);

/// One-dimensional bridge marginal P(X_t = x | x0, x1). Zero outside the
/// lattice interval between x0 and x1.
double bridge_pmf(Count x0, Count x1, double t, Count x);

/// birth = (x1 - x)_+ / (1 - t + eps_t), death = (x - x1)_+ / (1 - t + eps_t).
ConditionalRates conditional_rates(const CountVector& x, const CountVector& x1, double t,
                                   const EpsilonConfig& eps);

/// |d/dt p_t(x) - (influx - outflux)| with the time derivative taken by a
/// central difference of step dt and the flux terms from the exact
/// (eps_t = 0) bridge rates. Vanishes at O(dt^2).
double kfe_residual(Count x0, Count x1, double t, Count x, double dt = 1e-4);

/// Exact bridge rates toward a fixed target, usable wherever a learned rate
/// model is expected. The condition label is ignored.
class BridgeTargetRates final : public RateModel {
 public:
  BridgeTargetRates(CountVector target, EpsilonConfig eps) : target_(std::move(target)), eps_(eps) {}
  std::size_t dim() const override { return target_.size(); }
  RateField rates(const CountVector& x, double t, Label condition) const override;

 private:
  CountVector target_;
  EpsilonConfig eps_;
};

/// Runs the local-jump sampler on the exact bridge rates from t = 0 to
/// t = 1 - eps_t in n_steps steps. Every step is recorded.
Trajectory simulate_conditional_ctmc(const CountVector& x0, const CountVector& x1,
                                     std::size_t n_steps, const EpsilonConfig& eps, Rng& rng);

}  // namespace countflow
