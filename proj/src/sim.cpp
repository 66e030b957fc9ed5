#include "countflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace countflow {

namespace {

Count draw_gamma_poisson(double mean, double dispersion, double multiplier, Rng& rng) {
  std::gamma_distribution<double> gamma(dispersion, mean / dispersion);
  const double rate = gamma(rng) * multiplier;
  if (rate <= 0.0) return 0;
  std::poisson_distribution<Count> poisson(rate);
  return poisson(rng);
}

}  // namespace

GammaPoissonMixtureSpec GammaPoissonMixtureSpec::two_mode_default() {
  return {{{0.5, {60.0, 5.0}, {20.0, 20.0}}, {0.5, {60.0, 40.0}, {20.0, 20.0}}}};
}

std::size_t GammaPoissonMixtureSpec::dim() const {
  return components.empty() ? 0 : components.front().mean.size();
}

void GammaPoissonMixtureSpec::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  const std::size_t d = dim();
  double total = 0.0;
  for (const auto& c : components) {
    if (c.mean.size() != d || c.dispersion.size() != d || d == 0) {
      throw std::invalid_argument("mixture components must share a positive dimension");
    }
    if (!(c.weight >= 0.0)) throw std::invalid_argument("mixture weights must be nonnegative");
    for (std::size_t i = 0; i < d; ++i) {
      if (!(c.mean[i] > 0.0) || !(c.dispersion[i] > 0.0)) {
        throw std::invalid_argument("component means and dispersions must be positive");
      }
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture weights must sum to 1");
}

CountMatrix sample_gamma_poisson_mixture(const GammaPoissonMixtureSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  const std::size_t d = spec.dim();
  std::vector<double> weights;
  for (const auto& c : spec.components) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  CountMatrix out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& c = spec.components[pick(rng)];
    auto row = out.row(r);
    for (std::size_t i = 0; i < d; ++i) row[i] = draw_gamma_poisson(c.mean[i], c.dispersion[i], 1.0, rng);
  }
  return out;
}

CountMatrix sample_discrete_uniform_source(std::size_t n, std::span<const Count> lo,
                                           std::span<const Count> hi, Rng& rng) {
  if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("source bounds must share a positive dimension");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (lo[i] < 0) throw std::invalid_argument("source lower bound must be nonnegative");
    if (lo[i] > hi[i]) throw std::invalid_argument("source lower bound exceeds upper bound");
  }
  CountMatrix out(n, lo.size());
  for (std::size_t r = 0; r < n; ++r) {
    auto row = out.row(r);
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const auto width = static_cast<double>(hi[i] - lo[i] + 1);
      row[i] = lo[i] + std::min<Count>(hi[i] - lo[i], static_cast<Count>(uniform01(rng) * width));
    }
  }
  return out;
}

ConditionalTaskSpec ConditionalTaskSpec::place_field_default() {
  ConditionalTaskSpec s;
  constexpr double base = 1.0;
  constexpr double peak = 12.0;
  s.class_means.assign(4, std::vector<double>(6, base));
  // Class c peaks on coordinates c and (c + 1) mod 6, plus a half-peak on
  // coordinate c + 2 so neighbouring classes overlap.
  for (std::size_t c = 0; c < 4; ++c) {
    s.class_means[c][c] = peak;
    s.class_means[c][(c + 1) % 6] = peak;
    s.class_means[c][(c + 2) % 6] = 0.5 * peak;
  }
  s.dispersion = 20.0;
  s.shared_factor_var = 0.3;
  s.shared_coords = {0, 1, 2, 3};
  return s;
}

std::size_t ConditionalTaskSpec::dim() const {
  return class_means.empty() ? 0 : class_means.front().size();
}

void ConditionalTaskSpec::validate() const {
  if (class_means.size() < 2) throw std::invalid_argument("conditional task needs at least two classes");
  const std::size_t d = dim();
  for (const auto& m : class_means) {
    if (m.size() != d || d == 0) throw std::invalid_argument("class means must share a positive dimension");
    for (double v : m) {
      if (!(v > 0.0)) throw std::invalid_argument("class means must be positive");
    }
  }
  if (!(dispersion > 0.0)) throw std::invalid_argument("dispersion must be positive");
  if (!(shared_factor_var >= 0.0)) throw std::invalid_argument("shared factor variance must be >= 0");
  for (std::size_t j : shared_coords) {
    if (j >= d) throw std::invalid_argument("shared coordinate out of range");
  }
}

namespace {

bool is_shared(const ConditionalTaskSpec& s, std::size_t j) {
  return std::find(s.shared_coords.begin(), s.shared_coords.end(), j) != s.shared_coords.end();
}

}  // namespace

double ConditionalTaskSpec::mean(std::size_t cls, std::size_t j) const { return class_means.at(cls).at(j); }

double ConditionalTaskSpec::variance(std::size_t cls, std::size_t j) const {
  const double m = mean(cls, j);
  const double g2 = is_shared(*this, j) ? 1.0 + shared_factor_var : 1.0;  // E[G^2]
  return m + m * m * (g2 * (1.0 + 1.0 / dispersion) - 1.0);
}

double ConditionalTaskSpec::covariance(std::size_t cls, std::size_t j, std::size_t k) const {
  if (j == k) return variance(cls, j);
  if (!is_shared(*this, j) || !is_shared(*this, k)) return 0.0;
  return shared_factor_var * mean(cls, j) * mean(cls, k);
}

CountMatrix make_conditional_task(const ConditionalTaskSpec& spec, std::size_t n_per_class, Rng& rng) {
  spec.validate();
  const std::size_t K = spec.n_classes();
  const std::size_t d = spec.dim();
  CountMatrix out(K * n_per_class, d);
  out.labels.resize(out.rows);
  const double s2 = spec.shared_factor_var;
  std::vector<char> shared(d, 0);
  for (std::size_t j : spec.shared_coords) shared[j] = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t k = 0; k < n_per_class; ++k, ++r) {
      double g = 1.0;
      if (s2 > 0.0) {
        std::gamma_distribution<double> factor(1.0 / s2, s2);
        g = factor(rng);
      }
      auto row = out.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = draw_gamma_poisson(spec.class_means[c][j], spec.dispersion, shared[j] ? g : 1.0, rng);
      }
      out.labels[r] = static_cast<Label>(c);
    }
  }
  return out;
}

}  // namespace countflow
