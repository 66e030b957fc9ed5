#include <doctest.h>

#include <cmath>
#include <numeric>

#include "countflow/bridge.hpp"
#include "countflow/sampler.hpp"
#include "countflow/sim.hpp"
#include "countflow/train.hpp"
#include "support.hpp"

using namespace countflow;

TEST_CASE("pointwise loss examples") {
  CHECK(pointwise_loss(0.0, 3.5, 1e-8) == 3.5);
  CHECK(pointwise_loss(0.0, 3.5, 0.7) == 3.5);
  CHECK(pointwise_loss(2.0, 2.0, 0.0) == doctest::Approx(2.0 - 2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(pointwise_loss(2.0, 2.0, 0.0) == doctest::Approx(0.61371).epsilon(1e-5));
  CHECK(pointwise_loss(1.0, 0.0, 1e-8) == doctest::Approx(-std::log(1e-8)).epsilon(1e-15));
  CHECK(pointwise_loss(1.0, 0.0, 1e-8) == doctest::Approx(18.42).epsilon(1e-3));
}

TEST_CASE("gkl examples and errors") {
  CHECK(gkl(7.0, 7.0) == 0.0);
  CHECK(gkl(0.0, 2.0) == 2.0);
  CHECK(gkl(3.0, 1.0) == doctest::Approx(3.0 * std::log(3.0) - 2.0).epsilon(1e-15));
  CHECK(gkl(3.0, 1.0) == doctest::Approx(1.29584).epsilon(1e-5));
  CHECK_THROWS_AS(gkl(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gkl(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(gkl(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("pointwise loss has its unique minimum at v = u") {
  for (double u : {0.05, 0.7, 1.0, 4.0, 25.0}) {
    // Golden-section search on [u/10, 10u].
    double a = u / 10, b = 10 * u;
    const double g = (std::sqrt(5.0) - 1) / 2;
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int k = 0; k < 200; ++k) {
      if (pointwise_loss(u, c, 0.0) < pointwise_loss(u, d, 0.0)) b = d; else a = c;
      c = b - g * (b - a);
      d = a + g * (b - a);
    }
    CHECK((a + b) / 2 == doctest::Approx(u).epsilon(1e-6));
    CHECK(pointwise_loss(u, u, 0.0) < pointwise_loss(u, u * 1.01, 0.0));
    CHECK(pointwise_loss(u, u, 0.0) < pointwise_loss(u, u * 0.99, 0.0));
  }
}

TEST_CASE("loss and gkl differ by a function of u only and share v-gradients") {
  Rng r = make_stream(1, 0);
  for (int k = 0; k < 1000; ++k) {
    const double u = k % 7 == 0 ? 0.0 : 10 * uniform01(r);
    const double v = 1e-3 + 10 * uniform01(r);
    CHECK(gkl(u, v) >= 0.0);
    CHECK(pointwise_loss_dv(u, v, 0.0) == doctest::Approx(gkl_dv(u, v)).epsilon(1e-14));
    const double ulogu = u > 0 ? u * std::log(u) : 0.0;
    CHECK(pointwise_loss(u, v, 0.0) == doctest::Approx(gkl(u, v) - ulogu + u).epsilon(1e-12).scale(1.0));
  }
  // Zero exactly at u = v only.
  CHECK(gkl(2.0, 2.0 + 1e-6) > 0.0);
}

TEST_CASE("make_training_batch: degenerate pair has zero targets") {
  Rng r = make_stream(2, 0);
  CountMatrix one;
  one.append(CountVector{4, 0, 9});
  for (int k = 0; k < 50; ++k) {
    const TrainingBatch b = make_training_batch(one, one, CouplingKind::independent, EpsilonConfig{}, 0.0, r);
    REQUIRE(b.samples.size() == 1);
    CHECK(b.samples[0].x == CountVector{4, 0, 9});
    CHECK(b.samples[0].target_birth == std::vector<double>(3, 0.0));
    CHECK(b.samples[0].target_death == std::vector<double>(3, 0.0));
  }
}

TEST_CASE("make_training_batch: targets are the conditional rates of the pair") {
  Rng r = make_stream(3, 0);
  const EpsilonConfig eps;
  for (int k = 0; k < 300; ++k) {
    CountMatrix s, t;
    const CountVector x0{static_cast<Count>(uniform01(r) * 20), static_cast<Count>(uniform01(r) * 20)};
    const CountVector x1{static_cast<Count>(uniform01(r) * 20), static_cast<Count>(uniform01(r) * 20)};
    s.append(x0);
    t.append(x1);
    const auto kind = k % 2 ? CouplingKind::ot : CouplingKind::independent;
    const TrainingBatch b = make_training_batch(s, t, kind, eps, 0.0, r);
    const BridgeSample& bs = b.samples[0];
    CHECK(bs.t > 0.0);
    CHECK(bs.t < 1.0 - eps.eps_t);
    const ConditionalRates cr = conditional_rates(bs.x, x1, bs.t, eps);
    CHECK(bs.target_birth == cr.birth);
    CHECK(bs.target_death == cr.death);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(bs.target_birth[i] * bs.target_death[i] == 0.0);
      CHECK(bs.x[i] >= std::min(x0[i], x1[i]));
      CHECK(bs.x[i] <= std::max(x0[i], x1[i]));
    }
    CHECK(b.coupling_cost == doctest::Approx(symmetric_poisson_cost(x0, x1, eps.eps_c)));
  }
}

TEST_CASE("condition dropout") {
  Rng r = make_stream(4, 0);
  CountMatrix src = testing_support::random_counts(1000, 2, 10, r);
  CountMatrix tgt = testing_support::random_counts(1000, 2, 10, r);
  tgt.labels.resize(1000);
  for (std::size_t i = 0; i < 1000; ++i) tgt.labels[i] = static_cast<Label>(i % 3);

  const TrainingBatch all = make_training_batch(src, tgt, CouplingKind::independent, EpsilonConfig{}, 1.0, r);
  for (const auto& s : all.samples) CHECK(s.condition == kNullLabel);
  const TrainingBatch none = make_training_batch(src, tgt, CouplingKind::independent, EpsilonConfig{}, 0.0, r);
  for (const auto& s : none.samples) CHECK(s.condition != kNullLabel);

  std::size_t dropped = 0, total = 0;
  for (int k = 0; k < 100; ++k) {
    const TrainingBatch b = make_training_batch(src, tgt, CouplingKind::independent, EpsilonConfig{}, 0.1, r);
    for (const auto& s : b.samples) dropped += s.condition == kNullLabel;
    total += b.samples.size();
  }
  CHECK(total == 100000);
  CHECK(std::abs(static_cast<double>(dropped) / static_cast<double>(total) - 0.1) <= 0.005);
}

TEST_CASE("training is deterministic and resumable") {
  Rng r = make_stream(5, 0);
  const CountMatrix src = testing_support::random_counts(200, 2, 30, r);
  const CountMatrix tgt = testing_support::random_counts(200, 2, 30, r);
  NetworkShape shape{.dim = 2, .hidden = {16}, .time_frequencies = 2, .input_scale = input_scale_for(src, tgt)};
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.n_steps = 40;
  cfg.seed = 77;
  for (CouplingKind kind : {CouplingKind::independent, CouplingKind::ot}) {
    cfg.coupling = kind;
    const TrainResult a = train(RateNetwork(shape, 1), src, tgt, cfg);
    const TrainResult b = train(RateNetwork(shape, 1), src, tgt, cfg);
    CHECK(a.net == b.net);
    REQUIRE(a.trace.size() == 40);
    CHECK(a.trace.front().step == 0);
    CHECK(a.trace.back().step == 39);

    TrainConfig half = cfg;
    half.n_steps = 15;
    const TrainResult first = train(RateNetwork(shape, 1), src, tgt, half);
    half.n_steps = 25;
    const TrainResult second = train(first.net, src, tgt, half);
    CHECK(second.net == a.net);
    CHECK(second.trace.front().step == 15);
    CHECK(second.trace.front().loss == a.trace[15].loss);
  }
}

TEST_CASE("cosine learning-rate schedule") {
  TrainConfig cfg;
  cfg.adam.lr = 2e-3;
  CHECK(scheduled_lr(cfg, 0) == 2e-3);
  CHECK(scheduled_lr(cfg, 123456) == 2e-3);
  cfg.lr_decay_steps = 100;
  cfg.lr_min = 1e-5;
  CHECK(scheduled_lr(cfg, 0) == doctest::Approx(2e-3).epsilon(1e-15));
  CHECK(scheduled_lr(cfg, 50) == doctest::Approx((2e-3 + 1e-5) / 2).epsilon(1e-14));
  CHECK(scheduled_lr(cfg, 25) == doctest::Approx(1e-5 + (2e-3 - 1e-5) * (0.5 + std::sqrt(0.5) / 2)).epsilon(1e-14));
  CHECK(scheduled_lr(cfg, 100) == doctest::Approx(1e-5).epsilon(1e-15));
  CHECK(scheduled_lr(cfg, 5000) == doctest::Approx(1e-5).epsilon(1e-15));
  for (int k = 1; k <= 100; ++k) CHECK(scheduled_lr(cfg, k) <= scheduled_lr(cfg, k - 1));

  cfg.lr_min = 3e-3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  Rng r = make_stream(6, 0);
  const CountMatrix src = testing_support::random_counts(100, 2, 30, r);
  const CountMatrix tgt = testing_support::random_counts(100, 2, 30, r);
  NetworkShape shape{.dim = 2, .hidden = {8}, .time_frequencies = 2, .input_scale = input_scale_for(src, tgt)};
  cfg.batch_size = 16;
  cfg.lr_min = 1e-5;
  cfg.lr_decay_steps = 30;
  cfg.n_steps = 30;
  const TrainResult whole = train(RateNetwork(shape, 2), src, tgt, cfg);
  cfg.n_steps = 12;
  const TrainResult first = train(RateNetwork(shape, 2), src, tgt, cfg);
  cfg.n_steps = 18;
  CHECK(train(first.net, src, tgt, cfg).net == whole.net);
  cfg.lr_decay_steps = 0;
  cfg.n_steps = 30;
  CHECK_FALSE(train(RateNetwork(shape, 2), src, tgt, cfg).net == whole.net);

  // A zero floor is rejected once the horizon is passed.
  cfg.lr_decay_steps = 5;
  cfg.lr_min = 0.0;
  cfg.n_steps = 6;
  CHECK_THROWS_AS(train(RateNetwork(shape, 2), src, tgt, cfg), std::invalid_argument);
}

TEST_CASE("training errors") {
  CountMatrix two(4, 2), three(4, 3);
  NetworkShape shape{.dim = 2, .hidden = {4}};
  TrainConfig cfg;
  cfg.n_steps = 1;
  CHECK_THROWS_AS(train(RateNetwork(shape, 0), two, three, cfg), std::invalid_argument);
  CHECK_THROWS_AS(train(RateNetwork(shape, 0), CountMatrix(0, 2), two, cfg), std::invalid_argument);
  NetworkShape cond{.dim = 2, .hidden = {4}, .n_labels = 2, .label_embedding = 2};
  CHECK_THROWS_AS(train(RateNetwork(cond, 0), two, two, cfg), std::invalid_argument);
  cfg.cfg_dropout = 1.5;
  CHECK_THROWS_AS(train(RateNetwork(shape, 0), two, two, cfg), std::invalid_argument);
  cfg.cfg_dropout = 0.1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(RateNetwork(shape, 0), two, two, cfg), std::invalid_argument);
}

TEST_CASE("non-finite loss aborts with the step index") {
  Rng r = make_stream(6, 0);
  const CountMatrix src = testing_support::random_counts(50, 1, 30, r);
  NetworkShape shape{.dim = 1, .hidden = {4}, .time_frequencies = 0};
  RateNetwork net(shape, 0);
  net.params()[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.n_steps = 3;
  try {
    (void)train(net, src, src, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    CHECK(std::string(e.what()).find("batch of 8") != std::string::npos);
  }
}

TEST_CASE("point-mass transport learns to stay put") {
  CountMatrix pm;
  for (int i = 0; i < 8; ++i) pm.append(CountVector{5});
  NetworkShape shape{.dim = 1, .hidden = {16}, .time_frequencies = 2, .input_scale = 0.2};
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.n_steps = 1500;
  cfg.adam.lr = 1e-2;
  cfg.seed = 3;
  const TrainResult res = train(RateNetwork(shape, 2), pm, pm, cfg);
  for (double t : {0.1, 0.5, 0.9}) CHECK(res.net.forward(CountVector{5}, t, kNullLabel).total() < 0.05);

  const NetworkRates model(res.net);
  CountMatrix starts;
  for (int i = 0; i < 1000; ++i) starts.append(CountVector{5});
  const auto out = simulate_rows(model, starts, {}, SampleConfig{}, 11);
  int stayed = 0;
  for (const auto& s : out) stayed += s.final_state == CountVector{5};
  MESSAGE("fraction ending at [5]: " << stayed / 1000.0);
  CHECK(stayed >= 950);
}

TEST_CASE("loss decreases on the two-mode mixture") {
  Rng r = make_stream(7, 0);
  const auto spec = GammaPoissonMixtureSpec::two_mode_default();
  const CountMatrix tgt = sample_gamma_poisson_mixture(spec, 2000, r);
  const std::vector<Count> lo{0, 0}, hi{100, 60};
  const CountMatrix src = sample_discrete_uniform_source(2000, lo, hi, r);
  NetworkShape shape{.dim = 2, .hidden = {32, 32}, .time_frequencies = 8, .input_scale = input_scale_for(src, tgt)};
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.n_steps = 800;
  const TrainResult res = train(RateNetwork(shape, 0), src, tgt, cfg);
  auto mean = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t k = a; k < b; ++k) s += res.trace[k].loss;
    return s / static_cast<double>(b - a);
  };
  const double first = mean(0, 80), last = mean(720, 800);
  MESSAGE("mean loss first 10%: " << first << ", last 10%: " << last);
  CHECK(last < first);
}
