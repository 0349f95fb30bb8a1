#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsac/common.hpp"
#include "tsac/control.hpp"
#include "tsac/kernels.hpp"
#include "tsac/mdp.hpp"
#include "tsac/ppo.hpp"
#include "tsac/rudder.hpp"

namespace tsac {

enum class Algo { PpoTd, PpoMc, Rudder };

std::string algo_name(Algo a);
Algo algo_from_name(const std::string& name);

// Polynomial step sizes a(n) = a0/(1+n)^{p_a}, b(n) = b0/(1+n)^{p_b}.
// The valid regime is 0.5 < p_b < p_a <= 1.
struct LearningRateSchedule {
  double a0 = 0.05;
  double p_a = 1.0;
  double b0 = 0.1;
  double p_b = 0.6;

  double a(long n) const;
  double b(long n) const;
};

// Per-clause verdicts computed by exponent algebra.
struct ScheduleDiagnosis {
  bool sum_a_diverges = false;       // p_a <= 1
  bool sum_b_diverges = false;       // p_b <= 1
  bool sq_sum_a_finite = false;      // p_a > 1/2
  bool sq_sum_b_finite = false;      // p_b > 1/2
  bool timescales_separated = false; // p_a > p_b, so a(n) = o(b(n))
  bool non_increasing = false;       // non-negative constants and exponents

  bool all_pass() const {
    return sum_a_diverges && sum_b_diverges && sq_sum_a_finite && sq_sum_b_finite &&
           timescales_separated && non_increasing;
  }
};

ScheduleDiagnosis validate_schedule(const LearningRateSchedule& sched);

struct ControlConfig {
  double beta = 10.0;
  Z2Mode z2_mode = Z2Mode::Geometric;
  double alpha = 0.999;
  double z2_init = 1.0;
  double kl_eps = 1e-3;
  double weight_decay = 1e-3;
};

enum class SamplerKind { Auto, InverseTransform, Sequential };

struct TrainConfig {
  Algo algo = Algo::PpoMc;
  LearningRateSchedule schedule;
  ControlConfig control;
  std::uint64_t seed = 1;
  long max_iters = 200000;
  double stop_tol = 0.05;
  int stop_window = 200;
  long record_every = 100;
  double param_clamp = 10.0;
  int hidden_width = 16;
  Activation activation = Activation::Tanh;
  double init_scale = 0.1;
  SamplerKind sampler = SamplerKind::Auto;
  kernels::Exec exec = kernels::Exec::Serial;
};

struct RunRow {
  long n = 0;
  double loss_h = 0.0;
  double loss_g = 0.0;
  double h_norm = 0.0;
  double f_norm = 0.0;
  double dtheta = 0.0;
  double domega = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double m1_sq = 0.0;
  double m2_sq = 0.0;
};

struct RunRecord {
  std::vector<RunRow> rows;
  bool converged = false;
  long iterations = 0;
  Vec theta_final;
  Vec omega_final;
  double final_z1 = 1.0;
  double final_z2 = 0.0;
  double max_m1_sq = 0.0;
  double max_m2_sq = 0.0;
  std::vector<int> greedy_actions;  // argmax of the final policy per state
};

// Algorithm-selected model pair; the unused member stays empty.
struct AlgoModel {
  Algo algo = Algo::PpoMc;
  PpoModel ppo;
  RudderModel rudder;
};

AlgoModel make_model(Algo algo, const Mdp& mdp, int hidden_width,
                     Activation act = Activation::Tanh);

// Deterministic parameter initialization for a (config, seed) pair; the
// same draw the trainer itself performs.
void init_model_params(const AlgoModel& model, std::uint64_t seed, double scale, Vec& theta,
                       Vec& omega);

RunRecord train(const Mdp& mdp, const TrainConfig& cfg);

// Greedy action table of the policy induced by theta (argmax is
// slope-independent).
std::vector<int> greedy_actions(const AlgoModel& model, const Mdp& mdp, const Vec& theta);

// --- ODE limit --------------------------------------------------------------

struct OdeFlowConfig {
  double inner_step = 0.1;
  double inner_tol = 1e-8;
  long inner_max_iters = 300000;
  double outer_step = 0.1;
  long outer_steps = 50;
  double kl_eps = 1e-3;
};

// lambda(theta): critic fixpoint of the exact gradient flow at the control
// limit (z1 = beta, z2 = 0), relaxed from omega0. Throws InnerLoopDiverged
// when the flow fails to reach the tolerance.
Vec relax_critic(const AlgoModel& model, const Mdp& mdp, const Vec& theta, Vec omega0,
                 double beta, const OdeFlowConfig& cfg);

struct OdeFlowResult {
  std::vector<std::pair<Vec, Vec>> path;  // (theta, lambda(theta)) per outer step
  Vec theta_final;
  Vec omega_final;
};

// Forward-Euler integration of the two-timescale limit: each outer step
// relaxes the critic to lambda(theta), then moves theta along the exact
// actor gradient at that fixpoint.
OdeFlowResult ode_limit_flow(const AlgoModel& model, const Mdp& mdp, Vec theta0, Vec omega0,
                             double beta, const OdeFlowConfig& cfg);

}  // namespace tsac
