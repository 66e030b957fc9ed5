#pragma once

// First-order local-jump simulation of a learned birth-death process. Each
// step of size delta independently moves every coordinate by -1, 0 or +1.

#include <cstdint>
#include <span>
#include <vector>

#include "countflow/random.hpp"
#include "countflow/rates.hpp"
#include "countflow/types.hpp"

namespace countflow {

class RateNetwork;

struct StepProbabilities {
  double stay = 1.0;
  double birth = 0.0;
  double death = 0.0;
};

/// With r = birth + death: stay = exp(-r delta), and the remaining mass split
/// in proportion birth / (r + eps_r), death / (r + eps_r). The eps_r deficit
/// goes to stay.
StepProbabilities step_probabilities(double birth, double death, double delta, double eps_r);

/// uncond + w (cond - uncond), clamped at zero where w > 1 extrapolates out
/// of the nonnegative cone.
RateField cfg_rates(const RateField& uncond, const RateField& cond, double w);

struct SampleConfig {
  std::size_t n_steps = 200;
  EpsilonConfig eps;
  double guidance = 1.0;
  bool record_trajectory = false;
  std::size_t trajectory_stride = 1;
  Label condition = kNullLabel;

  void validate() const;
};

struct SampleResult {
  CountVector final_state;
  Trajectory trajectory;
  /// Sum over steps of the L1 displacement (number of unit jumps taken).
  Count path_length = 0;
};

/// Adapts a network to the RateModel interface used by the sampler.
class NetworkRates final : public RateModel {
 public:
  explicit NetworkRates(const RateNetwork& net) : net_(net) {}
  std::size_t dim() const override;
  RateField rates(const CountVector& x, double t, Label condition) const override;
  bool conditional() const override;

 private:
  const RateNetwork& net_;
};

/// Simulates from t = eps_t to t = 1 - eps_t with delta = (1 - 2 eps_t) / K.
SampleResult simulate(const RateModel& model, CountVector x0, const SampleConfig& config, Rng& rng);

/// Same scheme on an arbitrary interval [t_start, t_end].
SampleResult simulate_interval(const RateModel& model, CountVector x0, double t_start,
                               double t_end, const SampleConfig& config, Rng& rng);

/// Simulates every row of `x0`, row i on stream (seed, i). `conditions` is
/// empty (use config.condition for all rows) or one label per row. Results do
/// not depend on `threads`.
std::vector<SampleResult> simulate_rows(const RateModel& model, const CountMatrix& x0,
                                        std::span<const Label> conditions,
                                        const SampleConfig& config, std::uint64_t seed,
                                        std::size_t threads = 1);

}  // namespace countflow
