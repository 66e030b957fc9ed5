#pragma once

#include <vector>

#include "countflow/types.hpp"

namespace countflow {

/// Per-coordinate birth rates and death rates of a local birth-death process.
/// death[i] == x[i] * death_coeff[i], so death is zero whenever x[i] is zero.
struct RateField {
  std::vector<double> birth;
  std::vector<double> death_coeff;
  std::vector<double> death;

  std::size_t size() const noexcept { return birth.size(); }
  double total() const;
};

/// Anything that can report jump rates at (state, time, condition).
class RateModel {
 public:
  virtual ~RateModel() = default;
  virtual std::size_t dim() const = 0;
  virtual RateField rates(const CountVector& x, double t, Label condition) const = 0;
  /// True when the model has a null condition distinct from its labelled ones,
  /// which is what guided sampling requires.
  virtual bool conditional() const { return false; }
};

/// Time-indexed states of one simulated path.
struct Trajectory {
  std::vector<std::size_t> steps;
  std::vector<double> times;
  std::vector<CountVector> states;
};

}  // namespace countflow
