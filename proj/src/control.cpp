#include "tsac/control.hpp"

#include <cmath>
#include <utility>

namespace tsac {

ControlState ControlState::initial(double beta, Z2Mode mode, double alpha, double z2_init,
                                   Vec theta0, Vec omega0) {
  if (beta <= 1.0) throw ConfigError("control: beta must exceed 1");
  if (z2_init < 0.0) throw ConfigError("control: z2 start must be non-negative");
  if (mode == Z2Mode::Geometric && !(alpha < 1.0))
    throw ConfigError("control: geometric mode needs alpha < 1");
  if (mode == Z2Mode::Rational && !(alpha > 1.0))
    throw ConfigError("control: rational mode needs alpha > 1");
  ControlState z;
  z.beta = beta;
  z.z2_mode = mode;
  z.alpha = alpha;
  z.z1_now = z.z1_prev = 1.0;
  z.z2_now = z.z2_prev = z2_init;
  z.theta_prev = std::move(theta0);
  z.omega_prev = std::move(omega0);
  return z;
}

ControlState step_control(const ControlState& z, Vec theta_now, Vec omega_now) {
  ControlState next = z;
  next.z1_prev = z.z1_now;
  next.z2_prev = z.z2_now;
  next.z1_now = (1.0 - 1.0 / z.beta) * z.z1_now + 1.0;
  next.z2_now = z.z2_mode == Z2Mode::Geometric ? z.alpha * z.z2_now
                                               : z.z2_now / (z.z2_now + z.alpha);
  next.theta_prev = std::move(theta_now);
  next.omega_prev = std::move(omega_now);
  return next;
}

double z1_closed_form(double beta, int n) {
  return beta - (beta - 1.0) * std::pow(1.0 - 1.0 / beta, n);
}

double greediness_beta(int num_actions, int num_states, int horizon, double reward_bound,
                       double delta, double epsilon) {
  if (delta <= 0.0 || epsilon <= 0.0)
    throw InvalidGap("greediness_beta: delta and epsilon must be positive");
  if (num_actions < 1 || num_states < 1 || horizon < 0 || reward_bound <= 0.0)
    throw ConfigError("greediness_beta: bad problem constants");
  const double first =
      num_actions > 1 ? std::log(static_cast<double>(num_actions - 1)) / delta : 0.0;
  if (horizon == 0) return first;
  const double t = static_cast<double>(horizon);
  const double denom = 2.0 * t * static_cast<double>(num_actions - 1) *
                       std::pow(static_cast<double>(num_states), t) *
                       std::pow(static_cast<double>(num_actions), t) * (t + 1.0) *
                       reward_bound;
  if (denom <= 0.0) return first;  // |A| = 1: nothing to separate
  const double second = -std::log(epsilon / denom) / delta;
  return std::max(first, second);
}

}  // namespace tsac
