#pragma once

#include "tsac/common.hpp"

namespace tsac {

enum class Z2Mode { Geometric, Rational };

// The controlled Markov process driving greediness (z1, ramps 1 -> beta),
// regularization decay (z2, shrinks to 0), and the previous-iterate
// snapshots needed by the trust-region term.
struct ControlState {
  double z1_now = 1.0;
  double z1_prev = 1.0;
  double z2_now = 1.0;
  double z2_prev = 1.0;
  Vec theta_prev;
  Vec omega_prev;
  double beta = 10.0;
  Z2Mode z2_mode = Z2Mode::Geometric;
  double alpha = 0.999;  // < 1 for geometric, > 1 for rational

  static ControlState initial(double beta, Z2Mode mode, double alpha, double z2_init,
                              Vec theta0, Vec omega0);
};

// One control transition: z1 <- (1 - 1/beta) z1 + 1, z2 per mode, previous
// fields shifted, parameter snapshots replaced by the passed values.
ControlState step_control(const ControlState& z, Vec theta_now, Vec omega_now);

// Closed form of the z1 recursion from z1_0 = 1.
double z1_closed_form(double beta, int n);

// The slope bound of the finite-greediness lemma:
//   max( log(|A|-1)/delta,
//        -log(eps / (2 T (|A|-1) |S|^T |A|^T (T+1) K_R)) / delta ).
// For a horizon of zero the product over transitions is empty and only the
// first term constrains the slope.
double greediness_beta(int num_actions, int num_states, int horizon, double reward_bound,
                       double delta, double epsilon);

}  // namespace tsac
