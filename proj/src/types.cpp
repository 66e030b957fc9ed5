#include "countflow/types.hpp"

#include <algorithm>
#include <cmath>

namespace countflow {

namespace {

void check_nonnegative(std::span<const Count> values) {
  for (Count v : values) {
    if (v < 0) throw std::invalid_argument("count vector entries must be nonnegative");
  }
}

}  // namespace

CountVector::CountVector(std::initializer_list<Count> values) : values_(values) {
  check_nonnegative(values_);
}

CountVector::CountVector(std::vector<Count> values) : values_(std::move(values)) {
  check_nonnegative(values_);
}

CountVector::CountVector(std::span<const Count> values) : values_(values.begin(), values.end()) {
  check_nonnegative(values_);
}

void CountVector::set(std::size_t i, Count value) {
  if (value < 0) throw std::invalid_argument("count vector entries must be nonnegative");
  values_.at(i) = value;
}

void CountVector::jump(std::size_t i, int delta) {
  if (delta < -1 || delta > 1) throw std::invalid_argument("jumps are restricted to -1, 0, +1");
  const Count next = values_.at(i) + delta;
  if (next < 0) throw std::logic_error("death jump from a zero count");
  values_[i] = next;
}

void EpsilonConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(eps_t) || !positive(eps_l) || !positive(eps_r) || !positive(eps_c)) {
    throw std::invalid_argument("epsilon constants must be finite and strictly positive");
  }
  if (eps_t >= 0.5) throw std::invalid_argument("eps_t must be < 0.5");
}

void CountMatrix::set_row(std::size_t i, const CountVector& v) {
  if (v.size() != cols) throw std::invalid_argument("row dimension mismatch");
  std::copy(v.values().begin(), v.values().end(), row(i).begin());
}

void CountMatrix::append(const CountVector& v, Label label) {
  if (rows == 0 && cols == 0) cols = v.size();
  if (v.size() != cols) throw std::invalid_argument("row dimension mismatch");
  if (label != kNullLabel && labels.size() != rows) {
    throw std::invalid_argument("cannot add a labelled row to an unlabelled matrix");
  }
  data.insert(data.end(), v.values().begin(), v.values().end());
  if (label != kNullLabel || !labels.empty()) labels.push_back(label);
  ++rows;
}

CountMatrix CountMatrix::select(std::span<const std::size_t> idx) const {
  CountMatrix out(idx.size(), cols);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto src = row(idx[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  if (has_labels()) {
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) out.labels.push_back(labels[i]);
  }
  return out;
}

Count CountMatrix::max_value() const {
  return data.empty() ? 0 : *std::max_element(data.begin(), data.end());
}

void CountMatrix::validate() const {
  if (data.size() != rows * cols) throw std::invalid_argument("count matrix shape mismatch");
  if (!labels.empty() && labels.size() != rows) {
    throw std::invalid_argument("label column length mismatch");
  }
  check_nonnegative(data);
}

}  // namespace countflow
