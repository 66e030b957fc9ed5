#pragma once

namespace countflow {

/// l(u, v) = v - u log(v + eps_l). The u = 0 branch returns v exactly so that
/// 0 * log(0) never appears.
double pointwise_loss(double u, double v, double eps_l);

/// d l / d v = 1 - u / (v + eps_l).
double pointwise_loss_dv(double u, double v, double eps_l);

/// Generalized KL divergence u log(u / v) - u + v, with u log u := 0 at u = 0.
/// Throws std::invalid_argument for v <= 0 or u < 0.
double gkl(double u, double v);

/// d gkl / d v = 1 - u / v.
double gkl_dv(double u, double v);

}  // namespace countflow
