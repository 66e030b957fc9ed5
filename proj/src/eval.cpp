#include "countflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "countflow/bridge.hpp"
#include "countflow/kernels.hpp"

namespace countflow {

namespace {

std::vector<double> as_real(const CountMatrix& m) {
  return std::vector<double>(m.data.begin(), m.data.end());
}

std::vector<double> pairwise_sq(const CountMatrix& a, const CountMatrix& b) {
  const auto ra = as_real(a);
  const auto rb = as_real(b);
  std::vector<double> out(a.rows * b.rows);
  kernels::active().squared_distances(ra.data(), a.rows, rb.data(), b.rows, a.cols, out.data());
  return out;
}

void check_pair(const CountMatrix& a, const CountMatrix& b) {
  if (a.rows == 0 || b.rows == 0) throw std::invalid_argument("metric needs nonempty sample sets");
  if (a.cols != b.cols) throw std::invalid_argument("sample sets have different dimensions");
}

std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t span = n - i;
    const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double hi = *mid;
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

double w2(const CountMatrix& a, const CountMatrix& b) {
  check_pair(a, b);
  if (a.rows != b.rows) throw std::invalid_argument("w2 needs sample sets of equal size");
  CostMatrix cost(a.rows, b.rows);
  cost.data = pairwise_sq(a, b);
  const auto perm = solve_assignment(cost);
  return std::sqrt(assignment_cost(cost, perm) / static_cast<double>(a.rows));
}

double w2_subsampled(const CountMatrix& a, const CountMatrix& b, std::size_t max_n, std::uint64_t seed) {
  check_pair(a, b);
  if (max_n == 0) throw std::invalid_argument("w2 subsample size must be positive");
  const std::size_t k = std::min({max_n, a.rows, b.rows});
  Rng ra = make_stream(seed, 0);
  Rng rb = make_stream(seed, 1);
  const auto ia = k == a.rows ? std::vector<std::size_t>{} : subsample_rows(a.rows, k, ra);
  const auto ib = k == b.rows ? std::vector<std::size_t>{} : subsample_rows(b.rows, k, rb);
  return w2(ia.empty() ? a : a.select(ia), ib.empty() ? b : b.select(ib));
}

MmdResult mmd2_rbf(const CountMatrix& a, const CountMatrix& b, std::optional<double> bandwidth) {
  check_pair(a, b);
  double sigma = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) throw std::invalid_argument("bandwidth must be positive");
    sigma = *bandwidth;
  } else {
    CountMatrix pooled = a;
    pooled.labels.clear();
    pooled.data.insert(pooled.data.end(), b.data.begin(), b.data.end());
    pooled.rows += b.rows;
    const auto all = pairwise_sq(pooled, pooled);
    std::vector<double> dist;
    dist.reserve(pooled.rows * (pooled.rows - 1) / 2);
    for (std::size_t i = 0; i < pooled.rows; ++i) {
      for (std::size_t j = i + 1; j < pooled.rows; ++j) dist.push_back(std::sqrt(all[i * pooled.rows + j]));
    }
    if (dist.empty()) throw std::invalid_argument("median heuristic needs at least two points; pass a bandwidth");
    sigma = median_of(dist);
    if (!(sigma > 0.0)) {
      throw std::invalid_argument("median pairwise distance is 0 (pooled points coincide); pass an explicit bandwidth");
    }
  }
  const double scale = -1.0 / (2.0 * sigma * sigma);
  auto mean_kernel = [&](const CountMatrix& x, const CountMatrix& y) {
    const auto sq = pairwise_sq(x, y);
    double s = 0.0;
    for (double v : sq) s += std::exp(v * scale);
    return s / static_cast<double>(sq.size());
  };
  const double kaa = mean_kernel(a, a);
  const double kbb = mean_kernel(b, b);
  const double kab = mean_kernel(a, b);
  return {kaa + kbb - 2.0 * kab, sigma};
}

MetricReport compare_samples(const CountMatrix& generated, const CountMatrix& reference,
                             std::size_t w2_max_n, std::uint64_t seed, std::optional<double> bandwidth) {
  MetricReport r;
  r.w2 = w2_subsampled(generated, reference, w2_max_n, seed);
  const MmdResult m = mmd2_rbf(generated, reference, bandwidth);
  r.mmd2_rbf = m.mmd2;
  r.bandwidth_used = m.bandwidth;
  r.n_source = generated.rows;
  r.n_target = reference.rows;
  r.seed = seed;
  return r;
}

namespace {

struct BinStats {
  std::vector<double> mean;
  std::vector<double> var;   // ddof 1, valid when rows >= 2
  std::vector<double> zero;
  std::vector<double> cov;   // active x active, diagonal zeroed
};

BinStats bin_stats(const CountMatrix& m, const std::vector<std::size_t>& active) {
  const std::size_t d = m.cols;
  const double n = static_cast<double>(m.rows);
  BinStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
             std::vector<double>(active.size() * active.size(), 0.0)};
  if (m.rows == 0) return s;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      s.mean[j] += static_cast<double>(row[j]);
      if (row[j] == 0) s.zero[j] += 1.0;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    s.mean[j] /= n;
    s.zero[j] /= n;
  }
  if (m.rows < 2) return s;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = static_cast<double>(row[j]) - s.mean[j];
      s.var[j] += c * c;
    }
    for (std::size_t p = 0; p < active.size(); ++p) {
      const double cp = static_cast<double>(row[active[p]]) - s.mean[active[p]];
      for (std::size_t q = 0; q < active.size(); ++q) {
        if (p == q) continue;
        s.cov[p * active.size() + q] += cp * (static_cast<double>(row[active[q]]) - s.mean[active[q]]);
      }
    }
  }
  for (double& v : s.var) v /= n - 1.0;
  for (double& v : s.cov) v /= n - 1.0;
  return s;
}

double median_copy(std::vector<double> v) { return median_of(v); }

}  // namespace

ConditionalReport conditional_metrics(const std::vector<CountMatrix>& true_bins,
                                      const std::vector<CountMatrix>& gen_bins,
                                      const std::vector<std::size_t>& active_set) {
  if (active_set.empty()) throw std::invalid_argument("active set is empty");
  if (true_bins.size() != gen_bins.size()) throw std::invalid_argument("true and generated bin lists differ in length");
  if (true_bins.empty()) throw std::invalid_argument("no bins");
  const std::size_t d = true_bins.front().cols;
  for (std::size_t b = 0; b < true_bins.size(); ++b) {
    if (true_bins[b].cols != d || gen_bins[b].cols != d) throw std::invalid_argument("bins have inconsistent dimensions");
  }
  for (std::size_t j : active_set) {
    if (j >= d) throw std::invalid_argument("active index out of range");
  }

  ConditionalReport rep;
  rep.active_set = active_set;
  double w_mu = 0.0, w_var = 0.0, s_mu = 0.0, s_var = 0.0, s_zero = 0.0, s_cov = 0.0, w_cov = 0.0;
  std::vector<std::vector<double>> gen_means;  // bins with >= 1 generated row
  for (std::size_t b = 0; b < true_bins.size(); ++b) {
    const auto& tb = true_bins[b];
    const auto& gb = gen_bins[b];
    rep.n_b.push_back(tb.rows);
    rep.n_gen.push_back(gb.rows);
    if (gb.rows > 0) gen_means.push_back(bin_stats(gb, {}).mean);
    if (tb.rows == 0) continue;
    if (gb.rows == 0) {
      rep.warnings.push_back("bin " + std::to_string(b) + " has no generated rows; excluded");
      continue;
    }
    const double nb = static_cast<double>(tb.rows);
    const BinStats ts = bin_stats(tb, active_set);
    const BinStats gs = bin_stats(gb, active_set);
    for (std::size_t j = 0; j < d; ++j) {
      s_mu += nb * (gs.mean[j] - ts.mean[j]) * (gs.mean[j] - ts.mean[j]);
      s_zero += nb * (gs.zero[j] - ts.zero[j]) * (gs.zero[j] - ts.zero[j]);
    }
    w_mu += nb * static_cast<double>(d);
    if (gb.rows < 2 || tb.rows < 2) {
      rep.warnings.push_back("bin " + std::to_string(b) + " has fewer than 2 rows; excluded from variance terms");
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) s_var += nb * (gs.var[j] - ts.var[j]) * (gs.var[j] - ts.var[j]);
    w_var += nb * static_cast<double>(d);
    double fro = 0.0;
    for (std::size_t k = 0; k < ts.cov.size(); ++k) fro += (gs.cov[k] - ts.cov[k]) * (gs.cov[k] - ts.cov[k]);
    s_cov += nb * std::sqrt(fro);
    w_cov += nb;
  }
  if (w_mu == 0.0) throw std::invalid_argument("no bin has both held-out and generated rows");
  rep.rmse_mu = std::sqrt(s_mu / w_mu);
  rep.rmse_zero = std::sqrt(s_zero / w_mu);
  rep.rmse_var = w_var > 0.0 ? std::sqrt(s_var / w_var) : 0.0;
  rep.cov_frobenius = w_cov > 0.0 ? s_cov / w_cov : 0.0;

  double contrast = 0.0;
  for (std::size_t j : active_set) {
    std::vector<double> mu;
    for (const auto& m : gen_means) mu.push_back(m[j]);
    if (mu.empty()) continue;
    const double mean = std::accumulate(mu.begin(), mu.end(), 0.0) / static_cast<double>(mu.size());
    if (mean > 0.0) contrast += (*std::max_element(mu.begin(), mu.end()) - median_copy(mu)) / mean;
  }
  rep.contrast = contrast / static_cast<double>(active_set.size());
  return rep;
}

std::vector<std::size_t> active_neurons(const CountMatrix& data, double threshold) {
  std::vector<std::size_t> out;
  if (data.rows == 0) return out;
  for (std::size_t j = 0; j < data.cols; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) s += static_cast<double>(data.row(r)[j]);
    if (s / static_cast<double>(data.rows) > threshold) out.push_back(j);
  }
  return out;
}

std::vector<CountMatrix> split_by_label(const CountMatrix& data, std::size_t n_bins) {
  if (!data.has_labels()) throw std::invalid_argument("binning needs a label column");
  std::vector<std::vector<std::size_t>> idx(n_bins);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const Label l = data.labels[r];
    if (l >= 0 && static_cast<std::size_t>(l) < n_bins) idx[static_cast<std::size_t>(l)].push_back(r);
  }
  std::vector<CountMatrix> out;
  for (const auto& ix : idx) {
    CountMatrix m = data.select(ix);
    m.cols = data.cols;
    out.push_back(std::move(m));
  }
  return out;
}

void HeatmapConfig::validate() const {
  if (z_min < 0 || z_min > z_max) throw std::invalid_argument("heatmap count range must satisfy 0 <= z_min <= z_max");
  if (progress.empty()) throw std::invalid_argument("heatmap needs at least one progress value");
  for (double s : progress) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("progress values must lie in [0, 1]");
  }
  if (draws == 0) throw std::invalid_argument("heatmap needs at least one draw");
  if (batch_size == 0) throw std::invalid_argument("heatmap batch size must be positive");
}

Heatmap bridge_heatmap(const CountMatrix& source, const CountMatrix& target, CouplingKind coupling,
                       const HeatmapConfig& config, Rng& rng) {
  config.validate();
  check_pair(source, target);
  if (config.coordinate >= source.cols) {
    throw std::invalid_argument("coordinate " + std::to_string(config.coordinate) + " out of range for dimension " +
                                std::to_string(source.cols));
  }
  Heatmap h;
  for (Count z = config.z_min; z <= config.z_max; ++z) h.z_values.push_back(z);
  h.progress = config.progress;
  const std::size_t nz = h.z_values.size();
  const std::size_t ns = h.progress.size();
  std::vector<std::size_t> hits(nz * ns, 0);

  auto draw_index = [&](std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  };
  std::size_t done = 0;
  std::vector<std::size_t> si, ti;
  while (done < config.draws) {
    const std::size_t B = std::min(config.batch_size, config.draws - done);
    si.resize(B);
    ti.resize(B);
    for (auto& i : si) i = draw_index(source.rows);
    for (auto& j : ti) j = draw_index(target.rows);
    CountMatrix sb = source.select(si);
    CountMatrix tb = target.select(ti);
    sb.labels.clear();
    tb.labels.clear();
    const EndpointBatch pairs = coupling == CouplingKind::ot ? ot_pairs(sb, tb, config.eps_c)
                                                             : independent_pairs(sb, tb, rng, config.eps_c);
    for (const auto& p : pairs.pairs) {
      for (std::size_t k = 0; k < ns; ++k) {
        const Count z = sample_bridge(p.x0, p.x1, h.progress[k], rng)[config.coordinate];
        if (z >= config.z_min && z <= config.z_max) ++hits[static_cast<std::size_t>(z - config.z_min) * ns + k];
      }
    }
    done += B;
  }
  const double M = static_cast<double>(config.draws);
  h.prob.resize(nz * ns);
  std::vector<std::size_t> in_range(ns, 0);
  for (std::size_t zi = 0; zi < nz; ++zi) {
    for (std::size_t k = 0; k < ns; ++k) {
      h.prob[zi * ns + k] = static_cast<double>(hits[zi * ns + k]) / M;
      in_range[k] += hits[zi * ns + k];
    }
  }
  for (std::size_t n : in_range) h.column_mass.push_back(static_cast<double>(n) / M);
  for (double m : h.column_mass) h.truncated.push_back(1.0 - m);
  return h;
}

}  // namespace countflow
