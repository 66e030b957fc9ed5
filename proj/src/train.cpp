#include "countflow/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "countflow/bridge.hpp"

namespace countflow {

double pointwise_loss(double u, double v, double eps_l) {
  if (u == 0.0) return v;
  return v - u * std::log(v + eps_l);
}

double pointwise_loss_dv(double u, double v, double eps_l) {
  if (u == 0.0) return 1.0;
  return 1.0 - u / (v + eps_l);
}

double gkl(double u, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("gkl needs v > 0");
  if (u < 0.0) throw std::invalid_argument("gkl needs u >= 0");
  if (u == 0.0) return v;
  return u * std::log(u / v) - u + v;
}

double gkl_dv(double u, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("gkl needs v > 0");
  return 1.0 - u / v;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(cfg_dropout >= 0.0 && cfg_dropout <= 1.0)) throw std::invalid_argument("cfg_dropout must lie in [0, 1]");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(lr_min >= 0.0 && lr_min <= adam.lr)) throw std::invalid_argument("lr_min must lie in [0, lr]");
  eps.validate();
}

double scheduled_lr(const TrainConfig& config, std::int64_t step) {
  if (config.lr_decay_steps == 0) return config.adam.lr;
  const double T = static_cast<double>(config.lr_decay_steps);
  const double k = std::min(static_cast<double>(std::max<std::int64_t>(step, 0)), T);
  return config.lr_min + (config.adam.lr - config.lr_min) * 0.5 * (1.0 + std::cos(std::numbers::pi * k / T));
}

namespace {

// t uniform on the open interval (0, 1 - eps_t).
double draw_time(double eps_t, Rng& rng) {
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return u * (1.0 - eps_t);
}

std::string batch_diagnostics(std::span<const BridgeSample> samples) {
  double t_min = 1.0, t_max = 0.0, rate_max = 0.0;
  Count x_max = 0;
  for (const auto& s : samples) {
    t_min = std::min(t_min, s.t);
    t_max = std::max(t_max, s.t);
    for (double r : s.target_birth) rate_max = std::max(rate_max, r);
    for (double r : s.target_death) rate_max = std::max(rate_max, r);
    for (Count c : s.x.values()) x_max = std::max(x_max, c);
  }
  std::ostringstream os;
  os << "batch of " << samples.size() << ": t in [" << t_min << ", " << t_max
     << "], max target rate " << rate_max << ", max count " << x_max;
  return os.str();
}

}  // namespace

TrainingBatch make_training_batch(const CountMatrix& source_batch, const CountMatrix& target_batch,
                                  CouplingKind coupling, const EpsilonConfig& eps, double cfg_dropout,
                                  Rng& rng, bool group_restricted) {
  EndpointBatch pairs;
  if (coupling == CouplingKind::independent) {
    pairs = independent_pairs(source_batch, target_batch, rng, eps.eps_c);
  } else if (group_restricted) {
    pairs = ot_pairs_grouped(source_batch, target_batch, eps.eps_c);
  } else {
    pairs = ot_pairs(source_batch, target_batch, eps.eps_c);
  }

  TrainingBatch out;
  out.coupling_cost = pairs.mean_cost;
  out.samples.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    BridgeSample s;
    s.t = draw_time(eps.eps_t, rng);
    s.x = sample_bridge(p.x0, p.x1, s.t, rng);
    ConditionalRates r = conditional_rates(s.x, p.x1, s.t, eps);
    s.target_birth = std::move(r.birth);
    s.target_death = std::move(r.death);
    const bool drop = uniform01(rng) < cfg_dropout;
    s.condition = drop ? kNullLabel : p.condition;
    out.samples.push_back(std::move(s));
  }
  return out;
}

double input_scale_for(const CountMatrix& source, const CountMatrix& target) {
  const Count m = std::max(source.max_value(), target.max_value());
  return m > 0 ? 1.0 / static_cast<double>(m) : 1.0;
}

TrainResult train(RateNetwork net, const CountMatrix& source, const CountMatrix& target,
                  const TrainConfig& config, const std::function<void(const StepRecord&)>& on_step) {
  config.validate();
  source.validate();
  target.validate();
  const std::size_t d = net.shape().dim;
  if (source.cols != d || target.cols != d) {
    throw std::invalid_argument("data dimension (" + std::to_string(source.cols) + ", " +
                                std::to_string(target.cols) + ") does not match the network (" +
                                std::to_string(d) + ")");
  }
  if (source.rows == 0 || target.rows == 0) throw std::invalid_argument("training data is empty");
  if (net.conditional() && !target.has_labels()) {
    throw std::invalid_argument("conditional network needs a labelled target");
  }
  if (config.group_restricted && (!source.has_labels() || !target.has_labels())) {
    throw std::invalid_argument("group-restricted coupling needs labels on source and target");
  }

  std::map<Label, std::vector<std::size_t>> source_groups;
  if (config.group_restricted) {
    for (std::size_t i = 0; i < source.rows; ++i) source_groups[source.labels[i]].push_back(i);
  }

  auto draw_index = [](std::size_t n, Rng& rng) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  };

  TrainResult result{std::move(net), {}};
  RateNetwork& model = result.net;
  result.trace.reserve(config.n_steps);
  const std::size_t B = config.batch_size;
  std::vector<std::size_t> src_idx(B), tgt_idx(B);

  for (std::size_t s = 0; s < config.n_steps; ++s) {
    const std::int64_t step = model.optimizer().step;
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(step));
    for (auto& j : tgt_idx) j = draw_index(target.rows, rng);
    if (config.group_restricted) {
      for (std::size_t k = 0; k < B; ++k) {
        const auto it = source_groups.find(target.labels[tgt_idx[k]]);
        if (it == source_groups.end()) throw std::invalid_argument("target label missing from source groups");
        src_idx[k] = it->second[draw_index(it->second.size(), rng)];
      }
    } else {
      for (auto& i : src_idx) i = draw_index(source.rows, rng);
    }
    TrainingBatch batch =
        make_training_batch(source.select(src_idx), target.select(tgt_idx), config.coupling, config.eps,
                            config.cfg_dropout, rng, config.group_restricted);
    if (!model.conditional()) {
      for (auto& sample : batch.samples) sample.condition = kNullLabel;
    }
    const LossAndGrad lg = loss_and_grad(model, batch.samples, config.eps.eps_l);
    if (!std::isfinite(lg.loss)) {
      throw NumericalError("non-finite loss at step " + std::to_string(step) + " (" +
                           batch_diagnostics(batch.samples) + ")");
    }
    AdamConfig adam = config.adam;
    adam.lr = scheduled_lr(config, step);
    if (!(adam.lr > 0.0)) throw std::invalid_argument("scheduled learning rate reached 0; set lr_min > 0");
    adam_step(model, lg.grad, adam);
    StepRecord rec{step, lg.loss, batch.coupling_cost};
    result.trace.push_back(rec);
    if (on_step) on_step(rec);
  }
  return result;
}

}  // namespace countflow
