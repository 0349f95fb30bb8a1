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

// Actor psi(s; theta) and critic q_hat(s, .; omega); parameters are never
// shared between the two networks.
struct PpoModel {
  SoftmaxPolicy actor;
  Network critic;  // one-hot state -> one q per action
  int num_actions = 0;
};

PpoModel make_ppo_model(const Mdp& mdp, int hidden_width = 16,
                        Activation act = Activation::Tanh);

struct PpoSettings {
  double kl_eps = 1e-3;
  double weight_decay = 1e-3;  // coefficient inside the trust-region rho
};

// Per-(theta, omega, z) tables: everything both the per-trajectory
// integrands and the enumerated expectations need, precomputed per state
// and state-action pair.
struct PpoTables {
  PolicyTable pi;                  // pi(.|s; theta, z1)
  std::vector<Vec> score;          // [s*A+a]: grad_theta log pi(a|s)
  std::vector<Vec> q_grad;         // [s*A+a]: grad_omega q_hat(s,a)
  std::vector<Vec> q_now;          // [s][a]: q_hat(s,a; omega_n)
  std::vector<Vec> q_prev;         // [s][a]: q_hat(s,a; omega_{n-1})
  Vec v_now;                       // [s]: sum_a pi q_now
  Vec kl_term;                     // [s]: KL_eps(pi_old(.|s), pi_new(.|s))
  std::vector<Vec> kl_grad;        // [s]: grad_theta of kl_term
  Vec wd_grad;                     // grad_theta of weight-decay part of rho
  double wd_term = 0.0;
  double z2 = 0.0;
  int score_start = 0;
  int num_actions = 0;
  std::size_t dim_theta = 0;
  std::size_t dim_omega = 0;

  const Vec& score_at(int s, int a) const {
    return score[static_cast<std::size_t>(s * num_actions + a)];
  }
  const Vec& q_grad_at(int s, int a) const {
    return q_grad[static_cast<std::size_t>(s * num_actions + a)];
  }
  double q_at(int s, int a) const {
    return q_now[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  }
  double advantage(int s, int a) const {
    return q_at(s, a) - v_now[static_cast<std::size_t>(s)];
  }
  double rho(const Trajectory& tau) const;  // trust region value at tau
};

PpoTables ppo_tables(const PpoModel& model, const Mdp& mdp, const Vec& theta,
                     const Vec& omega, const ControlState& z, const PpoSettings& settings);

// --- per-trajectory (sampled) quantities -----------------------------------

double ppo_policy_loss_sampled(const PpoTables& t, const Trajectory& tau);
Vec ppo_policy_grad_sampled(const PpoTables& t, const Trajectory& tau);
void ppo_policy_grad_sampled_acc(const PpoTables& t, const Trajectory& tau, double scale,
                                 std::span<double> acc);

double td_critic_loss_sampled(const PpoTables& t, const Trajectory& tau);
Vec td_critic_grad_sampled(const PpoTables& t, const Trajectory& tau);
void td_critic_grad_sampled_acc(const PpoTables& t, const Trajectory& tau, double scale,
                                std::span<double> acc);

double mc_critic_loss_sampled(const PpoTables& t, const Trajectory& tau);
Vec mc_critic_grad_sampled(const PpoTables& t, const Trajectory& tau);
void mc_critic_grad_sampled_acc(const PpoTables& t, const Trajectory& tau, double scale,
                                std::span<double> acc);

// --- enumerated (exact) quantities ------------------------------------------

// One shared sweep over the episode tree produces every loss and gradient.
struct PpoExact {
  double loss_h = 0.0;
  double loss_td = 0.0;
  double loss_mc = 0.0;
  Vec h;
  Vec f_td;
  Vec f_mc;
};

PpoExact ppo_exact(const PpoTables& t, const std::vector<WeightedTrajectory>& support,
                   kernels::Exec exec = kernels::Exec::Serial);
PpoExact ppo_exact(const PpoModel& model, const Mdp& mdp, const Vec& theta, const Vec& omega,
                   const ControlState& z, const PpoSettings& settings,
                   kernels::Exec exec = kernels::Exec::Serial);

double ppo_policy_loss_exact(const PpoModel& model, const Mdp& mdp, const Vec& theta,
                             const Vec& omega, const ControlState& z,
                             const PpoSettings& settings);
Vec ppo_policy_grad_exact(const PpoModel& model, const Mdp& mdp, const Vec& theta,
                          const Vec& omega, const ControlState& z,
                          const PpoSettings& settings);

// Enumerated expectation of the score-function term with a caller-supplied
// per-(s,a) weight; exposes the baseline-invariance structure directly.
Vec exact_score_expectation(const PpoTables& t, const std::vector<WeightedTrajectory>& support,
                            const std::vector<Vec>& weight_table);

}  // namespace tsac
