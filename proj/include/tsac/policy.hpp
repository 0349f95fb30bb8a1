#pragma once

#include <span>
#include <vector>

#include "tsac/common.hpp"
#include "tsac/mdp.hpp"
#include "tsac/network.hpp"

namespace tsac {

// Softmax with slope z1 over a logit vector, max-shifted for stability.
Vec softmax_with_slope(std::span<const double> logits, double slope);

// Actor head producing per-action scores psi(s; theta); the policy is
// softmax(slope * psi). The same shape serves PPO's actor and, with the
// q-value network, the RUDDER sampling policy.
struct SoftmaxPolicy {
  Network net;   // input: one-hot state, output: one logit per action
  int num_states = 0;

  Vec logits(std::span<const double> params, int state) const;
  Vec action_distribution(std::span<const double> params, double slope, int state) const;

  // grad_theta log pi(a | s; theta, slope) =
  //   slope * (grad psi_a - sum_j pi_j grad psi_j).
  Vec log_policy_gradient(std::span<const double> params, double slope, int state,
                          int action) const;
  void log_policy_gradient_acc(std::span<const double> params, double slope, int state,
                               int action, double scale, std::span<double> acc) const;

  // Action distributions for every state (one row per state).
  PolicyTable tabulate(std::span<const double> params, double slope) const;
};

// KL(p~ || q~) with p~_i = (p_i + eps) / (1 + k*eps); finite for any inputs.
double kl_smoothed(std::span<const double> p, std::span<const double> q, double eps);

// d/dq_j of kl_smoothed(p, q, eps) (gradient w.r.t. the raw new
// distribution, before any softmax chain rule).
Vec kl_smoothed_grad_q(std::span<const double> p, std::span<const double> q, double eps);

// Trust-region penalty over the states visited by tau: summed smoothed KL
// between the old and new policies plus L2 weight decay on the new
// parameters.
double trajectory_trust_region(const SoftmaxPolicy& pol, std::span<const double> params_old,
                               double slope_old, std::span<const double> params_new,
                               double slope_new, const Trajectory& tau, double eps,
                               double weight_decay);

// The same penalty over an explicit state list (a trajectory visits its
// steps' states; an empty list leaves only the weight-decay term).
double trust_region_states(const SoftmaxPolicy& pol, std::span<const double> params_old,
                           double slope_old, std::span<const double> params_new,
                           double slope_new, std::span<const int> states, double eps,
                           double weight_decay);

// Gradient of the penalty w.r.t. params_new.
Vec trust_region_grad(const SoftmaxPolicy& pol, std::span<const double> params_old,
                      double slope_old, std::span<const double> params_new, double slope_new,
                      const Trajectory& tau, double eps, double weight_decay);
void trust_region_grad_acc(const SoftmaxPolicy& pol, std::span<const double> params_old,
                           double slope_old, std::span<const double> params_new,
                           double slope_new, const Trajectory& tau, double eps,
                           double weight_decay, double scale, std::span<double> acc);

}  // namespace tsac
