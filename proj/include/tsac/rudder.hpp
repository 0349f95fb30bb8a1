#pragma once

#include <span>
#include <vector>

#include "tsac/common.hpp"
#include "tsac/control.hpp"
#include "tsac/kernels.hpp"
#include "tsac/mdp.hpp"
#include "tsac/network.hpp"
#include "tsac/policy.hpp"

namespace tsac {

// Actor q_hat(s, .; theta) regressed onto redistributed rewards under a
// fixed behavioral policy; critic g over a whole-episode encoding predicts
// the return and supplies the decomposition. The sampling policy is the
// slope softmax of the actor's own q_hat.
struct RudderModel {
  Network actor_q;       // one-hot state -> one value per action
  Network critic_g;      // zero-padded prefix encoding -> scalar
  PolicyTable behavioral;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;

  int encoding_dim() const { return (horizon + 1) * (num_states + num_actions); }
};

RudderModel make_rudder_model(const Mdp& mdp, int hidden_width = 16,
                              Activation act = Activation::Tanh);

// Concatenated one-hot (s, a) pairs for steps 0..prefix_len-1, zero-padded
// to the full horizon.
Vec encode_prefix(const RudderModel& model, const Trajectory& tau, int prefix_len);

struct RedistributedRewards {
  Vec rewards;                  // one per step, sums to the realized return
  double realized_return = 0.0;
};

// Prefix differences of g plus a uniform correction, so the output is
// return-equivalent by construction.
RedistributedRewards redistribute(const RudderModel& model, const Trajectory& tau,
                                  const Vec& omega);

// pi(theta, z1) = softmax(z1 * q_hat(s, .; theta)).
PolicyTable rudder_sampling_policy(const RudderModel& model, const Vec& theta, double slope);

// --- actor (regression onto redistributed rewards, tau ~ behavioral) -------

double rudder_actor_loss_sampled(const RudderModel& model, const Trajectory& tau,
                                 const Vec& theta, const Vec& omega, double z2);
Vec rudder_actor_grad_sampled(const RudderModel& model, const Trajectory& tau,
                              const Vec& theta, const Vec& omega, double z2);
void rudder_actor_grad_sampled_acc(const RudderModel& model, const Trajectory& tau,
                                   const Vec& theta, const Vec& omega, double z2,
                                   double scale, std::span<double> acc);

// --- critic (return regression, tau ~ pi(theta, z)) ------------------------

double rudder_critic_loss_sampled(const RudderModel& model, const Trajectory& tau,
                                  const Vec& omega, double z2);
Vec rudder_critic_grad_sampled(const RudderModel& model, const Trajectory& tau,
                               const Vec& omega, double z2);
void rudder_critic_grad_sampled_acc(const RudderModel& model, const Trajectory& tau,
                                    const Vec& omega, double z2, double scale,
                                    std::span<double> acc);

// --- enumerated expectations ------------------------------------------------

struct RudderExact {
  double loss_h = 0.0;
  double loss_g = 0.0;
  Vec h;
  Vec f;
};

// Actor expectation runs over the behavioral policy, critic expectation
// over the current sampling policy.
RudderExact rudder_exact(const RudderModel& model, const Mdp& mdp, const Vec& theta,
                         const Vec& omega, const ControlState& z,
                         kernels::Exec exec = kernels::Exec::Serial);

}  // namespace tsac
