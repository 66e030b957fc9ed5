#include <doctest.h>

#include <cmath>

#include "countflow/bridge.hpp"
#include "countflow/eval.hpp"
#include "countflow/net.hpp"
#include "countflow/sampler.hpp"
#include "support.hpp"

using namespace countflow;

namespace {

// Constant birth rate and per-capita death rate in every coordinate.
class ConstantRates final : public RateModel {
 public:
  ConstantRates(std::size_t d, double birth, double beta) : d_(d), birth_(birth), beta_(beta) {}
  std::size_t dim() const override { return d_; }
  RateField rates(const CountVector& x, double, Label) const override {
    RateField f;
    f.birth.assign(d_, birth_);
    f.death_coeff.assign(d_, beta_);
    for (std::size_t i = 0; i < d_; ++i) f.death.push_back(beta_ * static_cast<double>(x[i]));
    return f;
  }

 private:
  std::size_t d_;
  double birth_, beta_;
};

// Returns a caller-chosen rate pair depending on the condition label.
class LabelledRates final : public RateModel {
 public:
  std::size_t dim() const override { return 1; }
  bool conditional() const override { return true; }
  RateField rates(const CountVector& x, double, Label c) const override {
    const double b = c == kNullLabel ? 4.0 : 1.0;
    return RateField{{b}, {0.5}, {0.5 * static_cast<double>(x[0])}};
  }
};

}  // namespace

TEST_CASE("step_probabilities examples") {
  const StepProbabilities z = step_probabilities(0.0, 0.0, 0.3, 1e-12);
  CHECK(z.stay == 1.0);
  CHECK(z.birth == 0.0);
  CHECK(z.death == 0.0);
  const StepProbabilities b = step_probabilities(2.0, 0.0, 0.1, 1e-12);
  CHECK(b.stay == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));
  CHECK(b.stay == doctest::Approx(0.81873).epsilon(1e-5));
  CHECK(b.birth == doctest::Approx(0.18127).epsilon(1e-4));
  CHECK(b.death == 0.0);
  const StepProbabilities s = step_probabilities(3.0, 1.0, 1e-6, 1e-12);
  CHECK(s.birth / s.death == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(s.birth / 1e-6 == doctest::Approx(3.0).epsilon(1e-5));
}

TEST_CASE("step_probabilities sanity and small-delta consistency") {
  Rng r = make_stream(1, 0);
  for (int k = 0; k < 2000; ++k) {
    const double b = uniform01(r) < 0.2 ? 0.0 : 50 * uniform01(r);
    const double d = uniform01(r) < 0.2 ? 0.0 : 50 * uniform01(r);
    const double delta = std::pow(10.0, -6 + 6 * uniform01(r));
    const StepProbabilities p = step_probabilities(b, d, delta, 1e-12);
    for (double q : {p.stay, p.birth, p.death}) {
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
    }
    CHECK(p.stay + p.birth + p.death <= 1.0 + 1e-12);
    if (b + d > 0) CHECK(p.stay >= std::exp(-(b + d) * delta) - 1e-15);
  }
  for (double b : {0.5, 3.0, 10.0}) {
    for (double d : {0.1, 2.0, 10.0}) {
      const StepProbabilities p = step_probabilities(b, d, 1e-4, 1e-12);
      CHECK(std::abs(p.birth / 1e-4 - b) / b <= 0.01);
      CHECK(std::abs(p.death / 1e-4 - d) / d <= 0.01);
    }
  }
}

TEST_CASE("cfg_rates endpoints and clamping") {
  const RateField u{{2.0, 0.5}, {1.0, 3.0}, {4.0, 0.0}};
  const RateField c{{1.0, 1.5}, {0.2, 2.0}, {0.8, 0.0}};
  const RateField w0 = cfg_rates(u, c, 0.0);
  CHECK(w0.birth == u.birth);
  CHECK(w0.death == u.death);
  CHECK(w0.death_coeff == u.death_coeff);
  const RateField w1 = cfg_rates(u, c, 1.0);
  CHECK(w1.birth == c.birth);
  CHECK(w1.death == c.death);
  const RateField w3 = cfg_rates(u, c, 3.0);
  CHECK(w3.birth[0] == 0.0);  // 2 + 3 (1 - 2) = -1, clamped
  CHECK(w3.birth[1] == doctest::Approx(3.5));
  CHECK(w3.death_coeff[0] == 0.0);
  CHECK(w3.death[1] == 0.0);
  const RateField w05 = cfg_rates(u, c, 0.5);
  CHECK(w05.birth[0] == doctest::Approx(1.5));
  CHECK_THROWS(cfg_rates(u, RateField{{1.0}, {1.0}, {1.0}}, 2.0));
}

TEST_CASE("zero-rate network leaves the state unchanged") {
  NetworkShape s{.dim = 3, .hidden = {4}, .time_frequencies = 1};
  RateNetwork net(s, 0);
  const auto& head = net.layers().back();
  for (std::size_t o = 0; o < head.out; ++o) net.params()[head.bias_offset + o] = -800.0;
  const NetworkRates model(net);
  for (std::size_t K : {1, 7, 200}) {
    SampleConfig cfg;
    cfg.n_steps = K;
    Rng r = make_stream(2, K);
    const SampleResult res = simulate(model, CountVector{3, 0, 11}, cfg, r);
    CHECK(res.final_state == CountVector{3, 0, 11});
    CHECK(res.path_length == 0);
  }
}

TEST_CASE("trajectories are local, nonnegative, and strided") {
  NetworkShape s{.dim = 3, .hidden = {8}, .time_frequencies = 2, .input_scale = 0.05};
  RateNetwork net(s, 4);
  Rng w = make_stream(3, 0);
  for (double& p : net.params()) p = 3.0 * (2 * uniform01(w) - 1);
  const NetworkRates model(net);
  SampleConfig cfg;
  cfg.n_steps = 50;
  cfg.record_trajectory = true;
  for (int rep = 0; rep < 30; ++rep) {
    Rng r = make_stream(5, static_cast<std::uint64_t>(rep));
    const SampleResult res = simulate(model, CountVector{0, 2, 30}, cfg, r);
    const Trajectory& tr = res.trajectory;
    REQUIRE(tr.states.size() == 51);
    CHECK(tr.times.front() == cfg.eps.eps_t);
    CHECK(tr.times.back() == 1.0 - cfg.eps.eps_t);
    CHECK(tr.states.back() == res.final_state);
    Count moved = 0;
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
      CHECK(tr.steps[k] == k);
      CHECK(tr.times[k] > tr.times[k - 1]);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(tr.states[k][i] >= 0);
        CHECK(std::abs(tr.states[k][i] - tr.states[k - 1][i]) <= 1);
        moved += std::abs(tr.states[k][i] - tr.states[k - 1][i]);
      }
    }
    CHECK(moved == res.path_length);
  }
  cfg.trajectory_stride = 7;
  Rng r = make_stream(6, 0);
  const Trajectory tr = simulate(model, CountVector{1, 1, 1}, cfg, r).trajectory;
  CHECK(tr.steps == std::vector<std::size_t>{0, 7, 14, 21, 28, 35, 42, 49, 50});
}

TEST_CASE("exact bridge rates: hit probability matches the discrete-scheme oracle") {
  // Exact probability that the step-start scheme lands on x1 = [5] from [0],
  // by dynamic programming over the six reachable states.
  const EpsilonConfig eps;
  const std::size_t K = 2000;
  const double delta = (1.0 - 2 * eps.eps_t) / static_cast<double>(K);
  std::vector<double> p(6, 0.0);
  p[0] = 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = eps.eps_t + static_cast<double>(k) * delta;
    std::vector<double> next(6, 0.0);
    for (int x = 0; x <= 5; ++x) {
      const double b = (5.0 - x) / (1.0 - t + eps.eps_t);
      const double up = b > 0 ? -std::expm1(-b * delta) * b / (b + eps.eps_r) : 0.0;
      next[x] += p[x] * (1 - up);
      if (x < 5) next[x + 1] += p[x] * up;
    }
    p = next;
  }
  const double exact = p[5];
  MESSAGE("exact hit probability of the discrete scheme: " << exact);
  CHECK(exact == doctest::Approx(0.98871).epsilon(1e-4));

  const BridgeTargetRates model(CountVector{5}, eps);
  SampleConfig cfg;
  cfg.n_steps = K;
  CountMatrix starts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) starts.append(CountVector{0});
  const auto res = simulate_rows(model, starts, {}, cfg, 12345, 4);
  int hits = 0;
  for (const auto& s : res) hits += s.final_state == CountVector{5};
  const double rate = static_cast<double>(hits) / n;
  const double se = std::sqrt(exact * (1 - exact) / n);
  MESSAGE("Monte Carlo hit rate: " << rate);
  CHECK(std::abs(rate - exact) <= 4 * se);
}

TEST_CASE("refining K shrinks the gap between successive discretizations") {
  // Immigration-death process; with few steps locality caps the number of
  // jumps, so coarse clouds differ strongly from fine ones.
  const ConstantRates model(1, 20.0, 2.0);
  const std::size_t n = 1000;
  CountMatrix starts;
  for (std::size_t i = 0; i < n; ++i) starts.append(CountVector{0});
  auto cloud = [&](std::size_t K, std::uint64_t seed) {
    SampleConfig cfg;
    cfg.n_steps = K;
    const auto res = simulate_rows(model, starts, {}, cfg, seed, 4);
    CountMatrix m;
    for (const auto& r : res) m.append(r.final_state);
    return m;
  };
  std::vector<double> gaps;
  for (std::size_t K : {4, 16, 64}) gaps.push_back(w2(cloud(K, 100 + K), cloud(2 * K, 200 + K)));
  MESSAGE("W2(K, 2K) for K = 4, 16, 64: " << gaps[0] << ", " << gaps[1] << ", " << gaps[2]);
  CHECK(gaps[0] > gaps[1]);
  CHECK(gaps[1] > gaps[2]);
}

TEST_CASE("guidance combines the two rate fields and w = 1 ignores the null call") {
  const LabelledRates model;
  SampleConfig cfg;
  cfg.n_steps = 100;
  cfg.condition = 0;
  auto mean_final = [&](double w) {
    cfg.guidance = w;
    double s = 0;
    for (int i = 0; i < 2000; ++i) {
      Rng r = make_stream(7, static_cast<std::uint64_t>(i));
      s += static_cast<double>(simulate(model, CountVector{0}, cfg, r).final_state[0]);
    }
    return s / 2000;
  };
  // Mean of the immigration-death process at t ~ 1: (b / 0.5)(1 - e^{-0.5}).
  const double scale = 2.0 * (1 - std::exp(-0.5 * (1 - 2e-3)));
  CHECK(mean_final(0.0) == doctest::Approx(4.0 * scale).epsilon(0.05));
  CHECK(mean_final(1.0) == doctest::Approx(1.0 * scale).epsilon(0.05));
  // w = 1.5 extrapolates to a negative birth rate, clamped to zero.
  CHECK(mean_final(1.5) < 0.05);

  ConstantRates plain(1, 1.0, 0.5);
  cfg.guidance = 2.0;
  Rng r = make_stream(8, 0);
  CHECK_THROWS_AS(simulate(plain, CountVector{0}, cfg, r), std::invalid_argument);
  cfg.guidance = 1.0;
  CHECK_NOTHROW(simulate(plain, CountVector{0}, cfg, r));
}

TEST_CASE("guidance 0 with no condition equals unguided sampling") {
  NetworkShape s{.dim = 2, .hidden = {8}, .time_frequencies = 2, .n_labels = 2, .label_embedding = 2};
  RateNetwork net(s, 5);
  Rng w = make_stream(9, 0);
  for (double& p : net.params()) p = 2 * uniform01(w) - 1;
  const NetworkRates model(net);
  SampleConfig a;
  SampleConfig b;
  b.guidance = 0.0;
  Rng r1 = make_stream(10, 0), r2 = make_stream(10, 0);
  CHECK(simulate(model, CountVector{3, 4}, a, r1).final_state == simulate(model, CountVector{3, 4}, b, r2).final_state);
}

TEST_CASE("simulate_rows is independent of the thread count") {
  const ConstantRates model(2, 5.0, 0.3);
  Rng r = make_stream(11, 0);
  const CountMatrix starts = testing_support::random_counts(64, 2, 10, r);
  SampleConfig cfg;
  cfg.n_steps = 30;
  const auto a = simulate_rows(model, starts, {}, cfg, 3, 1);
  const auto b = simulate_rows(model, starts, {}, cfg, 3, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].final_state == b[i].final_state);
    CHECK(a[i].path_length == b[i].path_length);
  }
  const std::vector<Label> wrong(3, 0);
  CHECK_THROWS(simulate_rows(model, starts, wrong, cfg, 3, 1));
}

TEST_CASE("invalid rates and configs are reported") {
  class NanRates final : public RateModel {
   public:
    std::size_t dim() const override { return 1; }
    RateField rates(const CountVector&, double, Label) const override {
      return RateField{{std::nan("")}, {0.0}, {0.0}};
    }
  };
  SampleConfig cfg;
  Rng r = make_stream(12, 0);
  CHECK_THROWS_AS(simulate(NanRates{}, CountVector{1}, cfg, r), NumericalError);
  cfg.n_steps = 0;
  CHECK_THROWS_AS(simulate(ConstantRates(1, 1, 1), CountVector{1}, cfg, r), std::invalid_argument);
  cfg.n_steps = 10;
  cfg.guidance = -1;
  CHECK_THROWS_AS(simulate(ConstantRates(1, 1, 1), CountVector{1}, cfg, r), std::invalid_argument);
  cfg.guidance = 1;
  CHECK_THROWS_AS(simulate(ConstantRates(2, 1, 1), CountVector{1}, cfg, r), std::invalid_argument);
}
