#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace countflow {

using Count = std::int64_t;
using Label = std::int32_t;

/// Label value meaning "no condition" (the learned null embedding for
/// conditional networks, the only accepted value for unconditional ones).
inline constexpr Label kNullLabel = -1;

/// Raised when a run produces non-finite values (NaN loss, Inf weights).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A d-dimensional state of nonnegative counts. The dimension is fixed at
/// construction; every mutation keeps all entries >= 0.
class CountVector {
 public:
  CountVector() = default;
  explicit CountVector(std::size_t dim) : values_(dim, 0) {}
  CountVector(std::initializer_list<Count> values);
  explicit CountVector(std::vector<Count> values);
  explicit CountVector(std::span<const Count> values);

  std::size_t size() const noexcept { return values_.size(); }
  Count operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const Count> values() const noexcept { return values_; }

  void set(std::size_t i, Count value);
  /// Applies a unit jump (-1, 0 or +1) to coordinate i.
  void jump(std::size_t i, int delta);

  friend bool operator==(const CountVector&, const CountVector&) = default;

 private:
  std::vector<Count> values_;
};

/// Small positive constants that keep the bridge rates, the log in the loss,
/// the jump split and the transport cost finite.
struct EpsilonConfig {
  double eps_t = 1e-3;
  double eps_l = 1e-8;
  double eps_r = 1e-12;
  double eps_c = 1e-8;

  void validate() const;
};

/// Row-major n x d count matrix with an optional per-row label column.
struct CountMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Count> data;
  std::vector<Label> labels;  // empty, or one per row

  CountMatrix() = default;
  CountMatrix(std::size_t n, std::size_t d) : rows(n), cols(d), data(n * d, 0) {}

  bool has_labels() const noexcept { return !labels.empty(); }
  std::span<const Count> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<Count> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  CountVector row_vector(std::size_t i) const { return CountVector(row(i)); }
  void set_row(std::size_t i, const CountVector& v);
  void append(const CountVector& v, Label label = kNullLabel);

  /// Rows whose indices appear in `idx`, in order, with labels carried over.
  CountMatrix select(std::span<const std::size_t> idx) const;
  Count max_value() const;
  void validate() const;
};

}  // namespace countflow
