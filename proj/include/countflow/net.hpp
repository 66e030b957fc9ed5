#pragma once

// Multilayer perceptron mapping (counts, time, condition) to 2d nonnegative
// outputs: d birth rates and d death coefficients. Death rates are formed as
// x * beta so a zero count can never die.
//
// Input features, in order: x * input_scale (d values), t, then
// sin(w_k t), cos(w_k t) for each of the time frequencies w_k (a geometric
// ladder from 1 to 1000), then the condition embedding row. Hidden layers use
// SELU; both heads use softplus.
//
// All trainable scalars live in one flat array. Layout, in declaration
// order: for each dense layer (hidden layers first, head last) the row-major
// weight matrix then the bias; then the condition table, one row per label
// followed by the null row.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "countflow/rates.hpp"
#include "countflow/types.hpp"

namespace countflow {

struct NetworkShape {
  std::size_t dim = 0;
  std::vector<std::size_t> hidden{32, 32};
  std::size_t time_frequencies = 8;
  std::size_t n_labels = 0;         // 0: unconditional network
  std::size_t label_embedding = 0;  // embedding width, required when n_labels > 0
  double input_scale = 1.0;

  void validate() const;
  std::size_t input_width() const;
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, one entry per parameter.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One training example drawn from a conditional bridge.
struct BridgeSample {
  double t = 0.0;
  CountVector x;
  std::vector<double> target_birth;
  std::vector<double> target_death;
  Label condition = kNullLabel;
};

class RateNetwork {
 public:
  struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    friend bool operator==(const Dense&, const Dense&) = default;
  };

  /// Hidden layers get fan-in scaled uniform weights and zero biases; the
  /// head starts at zero so every initial rate is softplus(0) = log 2.
  RateNetwork(NetworkShape shape, std::uint64_t seed);

  const NetworkShape& shape() const noexcept { return shape_; }
  bool conditional() const noexcept { return shape_.n_labels > 0; }
  std::size_t count_params() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  const std::vector<Dense>& layers() const noexcept { return layers_; }
  std::size_t embedding_offset() const noexcept { return embedding_offset_; }

  AdamState& optimizer() noexcept { return adam_; }
  const AdamState& optimizer() const noexcept { return adam_; }

  /// Deterministic rate evaluation. Throws std::invalid_argument for a label
  /// outside the condition table.
  RateField forward(const CountVector& x, double t, Label condition) const;

  /// Writes the input feature vector for (x, t, condition) into `out`.
  void features(const CountVector& x, double t, Label condition, std::span<double> out) const;

  friend bool operator==(const RateNetwork&, const RateNetwork&) = default;

 private:
  friend RateNetwork network_from_parts(NetworkShape, std::vector<double>, AdamState);
  RateNetwork(NetworkShape shape, std::vector<double> params, AdamState adam);
  void build_layout();
  std::size_t embedding_row(Label condition) const;

  NetworkShape shape_;
  std::vector<Dense> layers_;
  std::size_t embedding_offset_ = 0;
  std::vector<double> params_;
  AdamState adam_;
};

/// Reassembles a network from checkpointed pieces; validates the sizes.
RateNetwork network_from_parts(NetworkShape shape, std::vector<double> params, AdamState adam);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Batch mean over samples of sum_i l(target_birth_i, birth_i) +
/// l(target_death_i, death_i) with l(u, v) = v - u log(v + eps_l), and its
/// exact gradient with respect to every parameter.
LossAndGrad loss_and_grad(const RateNetwork& net, std::span<const BridgeSample> batch, double eps_l);

/// Loss only; used by finite-difference checks.
double batch_loss(const RateNetwork& net, std::span<const BridgeSample> batch, double eps_l);

/// Bias-corrected Adam update of every parameter. Throws NumericalError if a
/// parameter becomes non-finite.
void adam_step(RateNetwork& net, std::span<const double> grad, const AdamConfig& config);

// Checkpoint file: 8-byte magic "CFLWNET1", u64 little-endian length of a
// JSON metadata block (shape, parameter count, optimizer step, format
// version), the JSON bytes, then the parameters, Adam first moments and Adam
// second moments as little-endian IEEE-754 binary64 arrays.
std::vector<std::uint8_t> serialize_checkpoint(const RateNetwork& net);
RateNetwork deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const RateNetwork& net, const std::filesystem::path& path);
RateNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace countflow
