#include "countflow/net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "countflow/kernels.hpp"
#include "countflow/loss.hpp"
#include "countflow/random.hpp"

namespace countflow {

namespace {

constexpr double kSeluScale = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

inline double selu(double z) { return z > 0.0 ? kSeluScale * z : kSeluScale * kSeluAlpha * std::expm1(z); }

inline double selu_grad(double z) { return z > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(z); }

inline double softplus(double h) { return std::max(h, 0.0) + std::log1p(std::exp(-std::abs(h))); }

inline double sigmoid(double h) {
  if (h >= 0.0) return 1.0 / (1.0 + std::exp(-h));
  const double e = std::exp(h);
  return e / (1.0 + e);
}

double time_frequency(std::size_t k, std::size_t n) {
  if (n <= 1) return 1.0;
  return std::pow(1000.0, static_cast<double>(k) / static_cast<double>(n - 1));
}

// Activations of one forward pass, kept for the backward pass.
struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activation of each layer
  std::vector<std::vector<double>> post;  // post[0] = features, post[l+1] = selu(pre[l])

  explicit Workspace(const RateNetwork& net) {
    const auto& layers = net.layers();
    pre.resize(layers.size());
    post.resize(layers.size());
    post[0].resize(layers.front().in);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      pre[l].resize(layers[l].out);
      if (l + 1 < layers.size()) post[l + 1].resize(layers[l].out);
    }
  }
};

void run_forward(const RateNetwork& net, const CountVector& x, double t, Label condition,
                 Workspace& ws) {
  const auto& k = kernels::active();
  const auto params = net.params();
  net.features(x, t, condition, ws.post[0]);
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    k.gemv(params.data() + L.weight_offset, ws.post[l].data(), params.data() + L.bias_offset,
           ws.pre[l].data(), L.out, L.in);
    if (l + 1 < layers.size()) {
      for (std::size_t j = 0; j < L.out; ++j) ws.post[l + 1][j] = selu(ws.pre[l][j]);
    }
  }
}

RateField head_to_rates(const CountVector& x, std::span<const double> head) {
  const std::size_t d = x.size();
  RateField f{std::vector<double>(d), std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t i = 0; i < d; ++i) {
    f.birth[i] = softplus(head[i]);
    f.death_coeff[i] = softplus(head[d + i]);
    f.death[i] = static_cast<double>(x[i]) * f.death_coeff[i];
  }
  return f;
}

void check_sample(const RateNetwork& net, const BridgeSample& s) {
  const std::size_t d = net.shape().dim;
  if (s.x.size() != d || s.target_birth.size() != d || s.target_death.size() != d) {
    throw std::invalid_argument("bridge sample dimension does not match the network");
  }
}

}  // namespace

void NetworkShape::validate() const {
  if (dim == 0) throw std::invalid_argument("network dimension must be positive");
  for (std::size_t w : hidden) {
    if (w == 0) throw std::invalid_argument("hidden widths must be positive");
  }
  if (n_labels > 0 && label_embedding == 0) {
    throw std::invalid_argument("conditional networks need a positive label embedding width");
  }
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) {
    throw std::invalid_argument("input scale must be finite and positive");
  }
}

std::size_t NetworkShape::input_width() const {
  return dim + 1 + 2 * time_frequencies + (n_labels > 0 ? label_embedding : 0);
}

RateNetwork::RateNetwork(NetworkShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  build_layout();
  Rng rng = make_stream(seed, 0x6e6574);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
    std::uniform_real_distribution<double> init(-bound, bound);
    for (std::size_t i = 0; i < L.in * L.out; ++i) params_[L.weight_offset + i] = init(rng);
  }
  if (conditional()) {
    std::normal_distribution<double> embed(0.0, 1.0);
    for (std::size_t i = embedding_offset_; i < params_.size(); ++i) params_[i] = embed(rng);
  }
  adam_.m.assign(params_.size(), 0.0);
  adam_.v.assign(params_.size(), 0.0);
}

RateNetwork::RateNetwork(NetworkShape shape, std::vector<double> params, AdamState adam)
    : shape_(std::move(shape)) {
  build_layout();
  if (params.size() != params_.size() || adam.m.size() != params_.size() ||
      adam.v.size() != params_.size()) {
    throw std::invalid_argument("parameter arrays do not match the network shape");
  }
  params_ = std::move(params);
  adam_ = std::move(adam);
}

RateNetwork network_from_parts(NetworkShape shape, std::vector<double> params, AdamState adam) {
  return RateNetwork(std::move(shape), std::move(params), std::move(adam));
}

void RateNetwork::build_layout() {
  shape_.validate();
  layers_.clear();
  std::size_t offset = 0;
  std::size_t in = shape_.input_width();
  auto add = [&](std::size_t out) {
    Dense L{in, out, offset, offset + in * out};
    offset += in * out + out;
    layers_.push_back(L);
    in = out;
  };
  for (std::size_t w : shape_.hidden) add(w);
  add(2 * shape_.dim);
  embedding_offset_ = offset;
  if (conditional()) offset += (shape_.n_labels + 1) * shape_.label_embedding;
  params_.assign(offset, 0.0);
}

std::size_t RateNetwork::embedding_row(Label condition) const {
  if (condition == kNullLabel) return shape_.n_labels;
  if (condition < 0 || static_cast<std::size_t>(condition) >= shape_.n_labels) {
    throw std::invalid_argument("unknown condition label " + std::to_string(condition));
  }
  return static_cast<std::size_t>(condition);
}

void RateNetwork::features(const CountVector& x, double t, Label condition, std::span<double> out) const {
  if (x.size() != shape_.dim) throw std::invalid_argument("state dimension does not match the network");
  if (out.size() != shape_.input_width()) throw std::invalid_argument("feature buffer has the wrong width");
  const std::size_t row = embedding_row(condition);
  std::size_t p = 0;
  for (std::size_t i = 0; i < shape_.dim; ++i) out[p++] = static_cast<double>(x[i]) * shape_.input_scale;
  out[p++] = t;
  for (std::size_t k = 0; k < shape_.time_frequencies; ++k) {
    const double w = time_frequency(k, shape_.time_frequencies);
    out[p++] = std::sin(w * t);
    out[p++] = std::cos(w * t);
  }
  if (conditional()) {
    const double* e = params_.data() + embedding_offset_ + row * shape_.label_embedding;
    std::copy(e, e + shape_.label_embedding, out.begin() + static_cast<std::ptrdiff_t>(p));
  }
}

RateField RateNetwork::forward(const CountVector& x, double t, Label condition) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("network time must lie in [0, 1]");
  Workspace ws(*this);
  run_forward(*this, x, t, condition, ws);
  return head_to_rates(x, ws.pre.back());
}

double batch_loss(const RateNetwork& net, std::span<const BridgeSample> batch, double eps_l) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  Workspace ws(net);
  double total = 0.0;
  for (const auto& s : batch) {
    check_sample(net, s);
    run_forward(net, s.x, s.t, s.condition, ws);
    const RateField f = head_to_rates(s.x, ws.pre.back());
    for (std::size_t i = 0; i < f.size(); ++i) {
      total += pointwise_loss(s.target_birth[i], f.birth[i], eps_l);
      total += pointwise_loss(s.target_death[i], f.death[i], eps_l);
    }
  }
  return total / static_cast<double>(batch.size());
}

LossAndGrad loss_and_grad(const RateNetwork& net, std::span<const BridgeSample> batch, double eps_l) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const auto& k = kernels::active();
  const auto params = net.params();
  const auto& layers = net.layers();
  const std::size_t d = net.shape().dim;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  LossAndGrad out{0.0, std::vector<double>(params.size(), 0.0)};
  Workspace ws(net);
  std::vector<std::vector<double>> delta(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) delta[l].resize(layers[l].out);
  std::vector<std::vector<double>> upstream(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) upstream[l].resize(layers[l].in);

  for (const auto& s : batch) {
    check_sample(net, s);
    run_forward(net, s.x, s.t, s.condition, ws);
    const auto& head = ws.pre.back();

    auto& dh = delta.back();
    for (std::size_t i = 0; i < d; ++i) {
      const double birth = softplus(head[i]);
      const double coeff = softplus(head[d + i]);
      const double xi = static_cast<double>(s.x[i]);
      const double death = xi * coeff;
      out.loss += pointwise_loss(s.target_birth[i], birth, eps_l) +
                  pointwise_loss(s.target_death[i], death, eps_l);
      dh[i] = inv_b * pointwise_loss_dv(s.target_birth[i], birth, eps_l) * sigmoid(head[i]);
      dh[d + i] = xi == 0.0 ? 0.0
                            : inv_b * xi * pointwise_loss_dv(s.target_death[i], death, eps_l) *
                                  sigmoid(head[d + i]);
    }

    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& L = layers[l];
      const auto& a = ws.post[l];
      const auto& g = delta[l];
      double* gw = out.grad.data() + L.weight_offset;
      double* gb = out.grad.data() + L.bias_offset;
      for (std::size_t r = 0; r < L.out; ++r) {
        if (g[r] == 0.0) continue;
        k.axpy(g[r], a.data(), gw + r * L.in, L.in);
        gb[r] += g[r];
      }
      auto& up = upstream[l];
      std::fill(up.begin(), up.end(), 0.0);
      k.gemv_t_acc(params.data() + L.weight_offset, g.data(), up.data(), L.out, L.in);
      if (l > 0) {
        const auto& z = ws.pre[l - 1];
        auto& prev = delta[l - 1];
        for (std::size_t j = 0; j < prev.size(); ++j) prev[j] = up[j] * selu_grad(z[j]);
      }
    }

    if (net.conditional()) {
      const auto& shape = net.shape();
      const std::size_t row = s.condition == kNullLabel ? shape.n_labels
                                                        : static_cast<std::size_t>(s.condition);
      const std::size_t first = shape.dim + 1 + 2 * shape.time_frequencies;
      double* ge = out.grad.data() + net.embedding_offset() + row * shape.label_embedding;
      for (std::size_t j = 0; j < shape.label_embedding; ++j) ge[j] += upstream[0][first + j];
    }
  }
  out.loss *= inv_b;
  return out;
}

void adam_step(RateNetwork& net, std::span<const double> grad, const AdamConfig& config) {
  auto params = net.params();
  if (grad.size() != params.size()) throw std::invalid_argument("gradient size mismatch");
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  AdamState& st = net.optimizer();
  ++st.step;
  const double step = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(config.beta1, step);
  const double c2 = 1.0 - std::pow(config.beta2, step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    st.m[i] = config.beta1 * st.m[i] + (1.0 - config.beta1) * g;
    st.v[i] = config.beta2 * st.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = st.m[i] / c1;
    const double v_hat = st.v[i] / c2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    if (!std::isfinite(params[i])) {
      throw NumericalError("parameter " + std::to_string(i) + " became non-finite at optimizer step " +
                           std::to_string(st.step));
    }
  }
}

}  // namespace countflow
