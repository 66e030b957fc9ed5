#pragma once

// Synthetic count data: Gamma-Poisson mixtures, a discrete-uniform source on
// a count grid, and a labelled conditional task with known moments.

#include <vector>

#include "countflow/random.hpp"
#include "countflow/types.hpp"

namespace countflow {

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;        // per-coordinate mean count
  std::vector<double> dispersion;  // Gamma shape; variance = mean (1 + mean / dispersion)
};

struct GammaPoissonMixtureSpec {
  std::vector<MixtureComponent> components;

  /// Two equal-weight components with means (60, 5) and (60, 40), dispersion 20.
  static GammaPoissonMixtureSpec two_mode_default();
  std::size_t dim() const;
  void validate() const;
};

/// Per row: pick a component by weight, then per coordinate
/// rate ~ Gamma(dispersion, mean / dispersion) and count ~ Poisson(rate).
CountMatrix sample_gamma_poisson_mixture(const GammaPoissonMixtureSpec& spec, std::size_t n, Rng& rng);

/// Independent uniform entries on {lo[i], ..., hi[i]}.
CountMatrix sample_discrete_uniform_source(std::size_t n, std::span<const Count> lo,
                                           std::span<const Count> hi, Rng& rng);

/// K labelled Gamma-Poisson populations. Coordinates listed in shared_coords
/// additionally share one Gamma(1/s2, s2) rate multiplier G per row (mean 1,
/// variance shared_factor_var = s2), which induces within-class covariance
/// s2 * m_j * m_k between shared coordinates.
struct ConditionalTaskSpec {
  std::vector<std::vector<double>> class_means;  // K x d
  double dispersion = 20.0;
  double shared_factor_var = 0.3;
  std::vector<std::size_t> shared_coords;

  /// Four classes over six coordinates with place-field-like tuning: each
  /// class raises its own pair of coordinates; coordinates 0-3 share a factor.
  static ConditionalTaskSpec place_field_default();
  std::size_t n_classes() const { return class_means.size(); }
  std::size_t dim() const;
  void validate() const;

  // Analytic within-class moments.
  double mean(std::size_t cls, std::size_t j) const;
  double variance(std::size_t cls, std::size_t j) const;
  double covariance(std::size_t cls, std::size_t j, std::size_t k) const;
};

/// n_per_class rows per class, ordered by class; labels are 0..K-1.
CountMatrix make_conditional_task(const ConditionalTaskSpec& spec, std::size_t n_per_class, Rng& rng);

}  // namespace countflow
