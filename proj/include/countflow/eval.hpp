#pragma once

// Sample-set metrics (W2 by exact matching, biased MMD^2 with an RBF kernel),
// binned conditional-fidelity metrics, and Monte Carlo bridge heatmaps.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "countflow/coupling.hpp"
#include "countflow/random.hpp"
#include "countflow/types.hpp"

namespace countflow {

/// sqrt of the minimal mean squared Euclidean distance over bijections
/// between two sets of equal size. Throws on empty or unequal input.
double w2(const CountMatrix& a, const CountMatrix& b);

/// Draws min(max_n, a.rows, b.rows) rows without replacement from each side
/// (stream (seed, 0) for a, (seed, 1) for b) and returns w2 on the subsets.
double w2_subsampled(const CountMatrix& a, const CountMatrix& b, std::size_t max_n, std::uint64_t seed);

struct MmdResult {
  double mmd2 = 0.0;
  double bandwidth = 0.0;
};

/// Biased V-statistic mean k(a,a') + mean k(b,b') - 2 mean k(a,b) with
/// k(x,y) = exp(-||x-y||^2 / (2 sigma^2)). Without a bandwidth sigma is the
/// median pairwise distance over the pooled set (distinct index pairs).
MmdResult mmd2_rbf(const CountMatrix& a, const CountMatrix& b, std::optional<double> bandwidth = {});

struct MetricReport {
  double w2 = 0.0;
  double mmd2_rbf = 0.0;
  double bandwidth_used = 0.0;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  std::uint64_t seed = 0;
};

/// W2 on subsamples of at most w2_max_n rows, MMD on the full sets.
MetricReport compare_samples(const CountMatrix& generated, const CountMatrix& reference,
                             std::size_t w2_max_n, std::uint64_t seed,
                             std::optional<double> bandwidth = {});

struct ConditionalReport {
  double rmse_mu = 0.0;
  double rmse_var = 0.0;
  double rmse_zero = 0.0;
  double cov_frobenius = 0.0;
  double contrast = 0.0;
  std::vector<std::size_t> n_b;       // held-out rows per bin
  std::vector<std::size_t> n_gen;     // generated rows per bin
  std::vector<std::size_t> active_set;
  std::vector<std::string> warnings;
};

/// Bins are parallel lists: true_bins[b] holds the held-out rows of bin b and
/// gen_bins[b] the generated rows. Means, variances (ddof 1) and zero
/// fractions are compared over all coordinates with weights n_b; the
/// off-diagonal covariance difference and the contrast use active_set.
/// Bins with fewer than two generated or held-out rows are left out of the
/// variance and covariance terms and reported in warnings.
ConditionalReport conditional_metrics(const std::vector<CountMatrix>& true_bins,
                                      const std::vector<CountMatrix>& gen_bins,
                                      const std::vector<std::size_t>& active_set);

/// Coordinates whose overall mean count exceeds threshold.
std::vector<std::size_t> active_neurons(const CountMatrix& data, double threshold = 0.01);

/// Splits rows by label into bins 0..n_bins-1; rows with other labels are dropped.
std::vector<CountMatrix> split_by_label(const CountMatrix& data, std::size_t n_bins);

struct HeatmapConfig {
  std::size_t coordinate = 0;
  Count z_min = 0;
  Count z_max = 100;
  std::vector<double> progress{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t draws = 10000;      // M: endpoint pairs, each sampled at every progress value
  std::size_t batch_size = 256;   // coupling minibatch size
  double eps_c = 1e-8;

  void validate() const;
};

struct Heatmap {
  std::vector<Count> z_values;
  std::vector<double> progress;
  std::vector<double> prob;          // row-major (z, s)
  std::vector<double> column_mass;   // in-range mass per progress value
  std::vector<double> truncated;     // 1 - column_mass

  double operator()(std::size_t zi, std::size_t si) const { return prob[zi * progress.size() + si]; }
};

/// Empirical bridge marginals of one coordinate: endpoint batches are drawn
/// with replacement, coupled, and every coupled pair is pushed through
/// sample_bridge at each progress value.
Heatmap bridge_heatmap(const CountMatrix& source, const CountMatrix& target, CouplingKind coupling,
                       const HeatmapConfig& config, Rng& rng);

}  // namespace countflow
