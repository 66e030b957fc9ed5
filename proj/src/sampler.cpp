#include "countflow/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "countflow/net.hpp"

namespace countflow {

double RateField::total() const {
  double s = 0.0;
  for (std::size_t i = 0; i < birth.size(); ++i) s += birth[i] + death[i];
  return s;
}

StepProbabilities step_probabilities(double birth, double death, double delta, double eps_r) {
  const double r = birth + death;
  StepProbabilities p;
  if (r <= 0.0) return p;
  const double jump = -std::expm1(-r * delta);
  p.birth = jump * birth / (r + eps_r);
  p.death = jump * death / (r + eps_r);
  p.stay = 1.0 - p.birth - p.death;
  return p;
}

RateField cfg_rates(const RateField& uncond, const RateField& cond, double w) {
  if (uncond.size() != cond.size()) throw std::invalid_argument("rate field dimension mismatch");
  if (w == 0.0) return uncond;
  if (w == 1.0) return cond;
  auto mix = [w](const std::vector<double>& u, const std::vector<double>& c) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::max(0.0, u[i] + w * (c[i] - u[i]));
    return out;
  };
  return RateField{mix(uncond.birth, cond.birth), mix(uncond.death_coeff, cond.death_coeff),
                   mix(uncond.death, cond.death)};
}

void SampleConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("sampler needs at least one step");
  if (!(guidance >= 0.0) || !std::isfinite(guidance)) {
    throw std::invalid_argument("guidance scale must be finite and >= 0");
  }
  if (trajectory_stride < 1) throw std::invalid_argument("trajectory stride must be >= 1");
  if (!(eps.eps_t >= 0.0 && eps.eps_t < 0.5)) throw std::invalid_argument("eps_t must lie in [0, 0.5)");
}

std::size_t NetworkRates::dim() const { return net_.shape().dim; }

RateField NetworkRates::rates(const CountVector& x, double t, Label condition) const {
  return net_.forward(x, t, condition);
}

bool NetworkRates::conditional() const { return net_.conditional(); }

namespace {

RateField evaluate(const RateModel& model, const CountVector& x, double t,
                   const SampleConfig& config) {
  if (config.condition == kNullLabel || config.guidance == 1.0) {
    return model.rates(x, t, config.condition);
  }
  RateField cond = model.rates(x, t, config.condition);
  RateField uncond = model.rates(x, t, kNullLabel);
  return cfg_rates(uncond, cond, config.guidance);
}

}  // namespace

SampleResult simulate_interval(const RateModel& model, CountVector x0, double t_start,
                               double t_end, const SampleConfig& config, Rng& rng) {
  config.validate();
  if (x0.size() != model.dim()) throw std::invalid_argument("initial state dimension mismatch");
  if (config.condition != kNullLabel && config.guidance != 1.0 && !model.conditional()) {
    throw std::invalid_argument("guided sampling needs a model trained with condition support");
  }
  if (!(t_end > t_start)) throw std::invalid_argument("empty simulation interval");

  const std::size_t K = config.n_steps;
  const double delta = (t_end - t_start) / static_cast<double>(K);
  SampleResult out;
  out.final_state = std::move(x0);
  CountVector& x = out.final_state;
  if (config.record_trajectory) {
    out.trajectory.steps.push_back(0);
    out.trajectory.times.push_back(t_start);
    out.trajectory.states.push_back(x);
  }

  for (std::size_t k = 0; k < K; ++k) {
    const double t = t_start + static_cast<double>(k) * delta;
    const RateField f = evaluate(model, x, t, config);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double b = f.birth[i];
      const double d = x[i] > 0 ? f.death[i] : 0.0;
      if (!std::isfinite(b) || !std::isfinite(d) || b < 0.0 || d < 0.0) {
        throw NumericalError("rate model returned an invalid rate at step " + std::to_string(k));
      }
      const StepProbabilities p = step_probabilities(b, d, delta, config.eps.eps_r);
      const double u = uniform01(rng);
      if (u < p.birth) {
        x.jump(i, +1);
        ++out.path_length;
      } else if (u < p.birth + p.death && x[i] > 0) {
        x.jump(i, -1);
        ++out.path_length;
      }
    }
    if (config.record_trajectory && ((k + 1) % config.trajectory_stride == 0 || k + 1 == K)) {
      out.trajectory.steps.push_back(k + 1);
      out.trajectory.times.push_back(k + 1 == K ? t_end : t_start + static_cast<double>(k + 1) * delta);
      out.trajectory.states.push_back(x);
    }
  }
  return out;
}

SampleResult simulate(const RateModel& model, CountVector x0, const SampleConfig& config, Rng& rng) {
  return simulate_interval(model, std::move(x0), config.eps.eps_t, 1.0 - config.eps.eps_t, config, rng);
}

std::vector<SampleResult> simulate_rows(const RateModel& model, const CountMatrix& x0,
                                        std::span<const Label> conditions,
                                        const SampleConfig& config, std::uint64_t seed,
                                        std::size_t threads) {
  if (!conditions.empty() && conditions.size() != x0.rows) {
    throw std::invalid_argument("one condition label per initial state expected");
  }
  std::vector<SampleResult> results(x0.rows);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < x0.rows; i = next++) {
      try {
        SampleConfig cfg = config;
        if (!conditions.empty()) cfg.condition = conditions[i];
        Rng rng = make_stream(seed, i);
        results[i] = simulate(model, x0.row_vector(i), cfg, rng);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = x0.rows;
      }
    }
  };

  const std::size_t n_workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(x0.rows, 1));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace countflow
