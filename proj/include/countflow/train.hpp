#pragma once

// Rate matching: regress the network's birth and death rates onto the
// conditional bridge rates of freshly coupled endpoint pairs.

#include <cstdint>
#include <functional>
#include <vector>

#include "countflow/coupling.hpp"
#include "countflow/loss.hpp"
#include "countflow/net.hpp"
#include "countflow/random.hpp"
#include "countflow/types.hpp"

namespace countflow {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t n_steps = 10000;
  AdamConfig adam;
  /// Cosine decay of the learning rate from adam.lr to lr_min over optimizer
  /// steps [0, lr_decay_steps), lr_min afterwards. 0 keeps adam.lr constant.
  /// The horizon counts absolute optimizer steps, so resumed runs follow the
  /// same schedule.
  std::size_t lr_decay_steps = 0;
  double lr_min = 0.0;
  CouplingKind coupling = CouplingKind::independent;
  /// Solve OT separately within each label group (needs labels on both sides).
  bool group_restricted = false;
  /// Probability of replacing a pair's condition by the null label.
  double cfg_dropout = 0.1;
  EpsilonConfig eps;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingBatch {
  std::vector<BridgeSample> samples;
  double coupling_cost = 0.0;  // mean symmetric Poisson cost of the pairs
};

/// Couples the two minibatches, then per pair draws t ~ U(0, 1 - eps_t),
/// x ~ bridge(x0, x1, t), and the target rates at (x, t) toward x1.
TrainingBatch make_training_batch(const CountMatrix& source_batch, const CountMatrix& target_batch,
                                  CouplingKind coupling, const EpsilonConfig& eps, double cfg_dropout,
                                  Rng& rng, bool group_restricted = false);

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double coupling_cost = 0.0;
};

struct TrainResult {
  RateNetwork net;
  std::vector<StepRecord> trace;
};

/// Learning rate used for the update at optimizer step `step`.
double scheduled_lr(const TrainConfig& config, std::int64_t step);

/// 1 / max count over both data sets (1 when everything is zero).
double input_scale_for(const CountMatrix& source, const CountMatrix& target);

/// Runs config.n_steps optimizer steps. Step k draws its minibatches from
/// stream (seed, k) where k counts from the network's current optimizer step,
/// so resuming from a checkpoint continues the same sequence. Throws
/// NumericalError with the step index and batch statistics on a non-finite
/// loss.
TrainResult train(RateNetwork net, const CountMatrix& source, const CountMatrix& target,
                  const TrainConfig& config,
                  const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace countflow
