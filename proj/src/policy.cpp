#include "tsac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsac {

Vec softmax_with_slope(std::span<const double> logits, double slope) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : logits) m = std::max(m, slope * x);
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(slope * logits[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

Vec SoftmaxPolicy::logits(std::span<const double> params, int state) const {
  return net.forward(params, one_hot(state, num_states));
}

Vec SoftmaxPolicy::action_distribution(std::span<const double> params, double slope,
                                       int state) const {
  return softmax_with_slope(logits(params, state), slope);
}

void SoftmaxPolicy::log_policy_gradient_acc(std::span<const double> params, double slope,
                                            int state, int action, double scale,
                                            std::span<double> acc) const {
  const Vec input = one_hot(state, num_states);
  const Vec psi = net.forward(params, input);
  Vec cot = softmax_with_slope(psi, slope);
  for (double& x : cot) x = -x;
  cot[static_cast<std::size_t>(action)] += 1.0;
  net.backward_acc(params, input, cot, scale * slope, acc);
}

Vec SoftmaxPolicy::log_policy_gradient(std::span<const double> params, double slope,
                                       int state, int action) const {
  Vec grad(params.size(), 0.0);
  log_policy_gradient_acc(params, slope, state, action, 1.0, grad);
  return grad;
}

PolicyTable SoftmaxPolicy::tabulate(std::span<const double> params, double slope) const {
  PolicyTable table;
  table.probs.resize(static_cast<std::size_t>(num_states));
  for (int s = 0; s < num_states; ++s)
    table.probs[static_cast<std::size_t>(s)] = action_distribution(params, slope, s);
  return table;
}

double kl_smoothed(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) throw DimensionMismatch("kl_smoothed: size mismatch");
  if (eps <= 0.0) throw Error("kl_smoothed: eps must be positive");
  const double denom = 1.0 + static_cast<double>(p.size()) * eps;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + eps) / denom;
    const double qi = (q[i] + eps) / denom;
    kl += pi * std::log(pi / qi);
  }
  return std::max(kl, 0.0);
}

Vec kl_smoothed_grad_q(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) throw DimensionMismatch("kl_smoothed_grad_q: size mismatch");
  const double denom = 1.0 + static_cast<double>(p.size()) * eps;
  Vec grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + eps) / denom;
    const double qi = (q[i] + eps) / denom;
    grad[i] = -pi / qi / denom;
  }
  return grad;
}

double trust_region_states(const SoftmaxPolicy& pol, std::span<const double> params_old,
                           double slope_old, std::span<const double> params_new,
                           double slope_new, std::span<const int> states, double eps,
                           double weight_decay) {
  double penalty = weight_decay * sq_norm(params_new);
  for (int s : states) {
    const Vec p = pol.action_distribution(params_old, slope_old, s);
    const Vec q = pol.action_distribution(params_new, slope_new, s);
    penalty += kl_smoothed(p, q, eps);
  }
  return penalty;
}

double trajectory_trust_region(const SoftmaxPolicy& pol, std::span<const double> params_old,
                               double slope_old, std::span<const double> params_new,
                               double slope_new, const Trajectory& tau, double eps,
                               double weight_decay) {
  std::vector<int> states;
  states.reserve(tau.steps.size());
  for (const Step& step : tau.steps) states.push_back(step.state);
  return trust_region_states(pol, params_old, slope_old, params_new, slope_new, states, eps,
                             weight_decay);
}

void trust_region_grad_acc(const SoftmaxPolicy& pol, std::span<const double> params_old,
                           double slope_old, std::span<const double> params_new,
                           double slope_new, const Trajectory& tau, double eps,
                           double weight_decay, double scale, std::span<double> acc) {
  // Weight decay part.
  axpy(scale * 2.0 * weight_decay, params_new, acc);
  for (const Step& step : tau.steps) {
    const Vec input = one_hot(step.state, pol.num_states);
    const Vec psi = pol.net.forward(params_new, input);
    const Vec q = softmax_with_slope(psi, slope_new);
    const Vec p = pol.action_distribution(params_old, slope_old, step.state);
    const Vec dq = kl_smoothed_grad_q(p, q, eps);
    // Chain through softmax: d q_j / d psi_i = slope * q_j (delta_ij - q_i).
    double mix = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) mix += dq[j] * q[j];
    Vec cot(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) cot[i] = slope_new * q[i] * (dq[i] - mix);
    pol.net.backward_acc(params_new, input, cot, scale, acc);
  }
}

Vec trust_region_grad(const SoftmaxPolicy& pol, std::span<const double> params_old,
                      double slope_old, std::span<const double> params_new, double slope_new,
                      const Trajectory& tau, double eps, double weight_decay) {
  Vec grad(params_new.size(), 0.0);
  trust_region_grad_acc(pol, params_old, slope_old, params_new, slope_new, tau, eps,
                        weight_decay, 1.0, grad);
  return grad;
}

}  // namespace tsac
