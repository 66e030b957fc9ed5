#include "countflow/random.hpp"

#include <cmath>
#include <stdexcept>

namespace countflow {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x636f756eu};
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

Count binomial_small(Count n, double q, Rng& rng) {
  const double ratio = q / (1.0 - q);
  double pmf = std::pow(1.0 - q, static_cast<double>(n));
  double u = uniform01(rng);
  for (Count k = 0; k < n; ++k) {
    u -= pmf;
    if (u < 0.0) return k;
    pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  return n;
}

Count binomial_from_mode(Count n, double q, Rng& rng) {
  const double nd = static_cast<double>(n);
  const Count mode = static_cast<Count>(std::floor((nd + 1.0) * q));
  const double md = static_cast<double>(mode);
  const double log_pm = std::lgamma(nd + 1.0) - std::lgamma(md + 1.0) - std::lgamma(nd - md + 1.0) +
                        md * std::log(q) + (nd - md) * std::log1p(-q);
  const double up = q / (1.0 - q);
  const double down = (1.0 - q) / q;

  double u = uniform01(rng);
  double p_lo = std::exp(log_pm);
  double p_hi = p_lo;
  u -= p_lo;
  if (u < 0.0) return mode;
  Count lo = mode;
  Count hi = mode;
  while (lo > 0 || hi < n) {
    if (lo > 0) {
      p_lo *= down * static_cast<double>(lo) / static_cast<double>(n - lo + 1);
      --lo;
      u -= p_lo;
      if (u < 0.0) return lo;
    }
    if (hi < n) {
      p_hi *= up * static_cast<double>(n - hi) / static_cast<double>(hi + 1);
      ++hi;
      u -= p_hi;
      if (u < 0.0) return hi;
    }
  }
  // Only reachable through rounding in the cumulative sum.
  return mode;
}

}  // namespace

Count sample_binomial(Count n, double p, Rng& rng) {
  if (n < 0) throw std::invalid_argument("binomial trials must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial probability outside [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - sample_binomial(n, 1.0 - p, rng);
  return n <= 64 ? binomial_small(n, p, rng) : binomial_from_mode(n, p, rng);
}

}  // namespace countflow
