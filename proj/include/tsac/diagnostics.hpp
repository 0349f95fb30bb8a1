#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tsac/common.hpp"
#include "tsac/control.hpp"
#include "tsac/kernels.hpp"
#include "tsac/mdp.hpp"
#include "tsac/trainer.hpp"

namespace tsac {

// --- causality ---------------------------------------------------------------

// Max over t of |E_full[R_{t+1}] - E_prefix[R_{t+1}]|, both enumerated.
double check_causality(const Mdp& mdp, const PolicyTable& policy);

// --- policy gradient theorem --------------------------------------------------

struct PgtReport {
  Vec grad_fd;             // finite differences of the enumerated return
  Vec grad_score_togo;     // E[sum_k score_k G_k]
  Vec grad_score_q;        // E[sum_k score_k q^pi(s_k, a_k)]
  double dev_exact = 0.0;  // relative deviation between the two exact forms
  double dev_fd = 0.0;     // worst relative deviation against finite differences
};

PgtReport check_policy_gradient_theorem(const PpoModel& model, const Mdp& mdp,
                                        const Vec& theta, double slope,
                                        double fd_step = 1e-5);

// --- finite greediness ---------------------------------------------------------

enum class GreedinessStatus { Ok, NonUniqueOptimum, NotYetGreedy, SingleAction };

struct GreedinessReport {
  GreedinessStatus status = GreedinessStatus::Ok;
  bool delta_defined = true;
  double delta = 0.0;          // min psi gap over states
  double epsilon = 0.0;        // half the min optimal q gap
  double beta_required = 0.0;  // the lemma's slope bound
  double beta_used = 0.0;
  double q_deviation = 0.0;    // max |q*(s,a) - q^pi(s,a)|
  bool q_deviation_ok = false; // q_deviation < epsilon / 2
  bool argmax_correct = true;  // per-state argmax of q^pi equals optimal
  bool policy_mass_ok = true;  // pi(a*|s) > 1 - (|A|-1) e^{-beta delta}
  bool product_bound_ok = true;
  std::vector<bool> argmax_per_state;

  bool pass() const {
    if (status == GreedinessStatus::SingleAction) return true;
    return status == GreedinessStatus::Ok && q_deviation_ok && argmax_correct &&
           policy_mass_ok && product_bound_ok;
  }
};

// psi is a per-state action-score table; the slope is set to beta_margin
// times the lemma bound and all conclusions are checked by enumeration.
GreedinessReport check_greediness(const Mdp& mdp, const std::vector<Vec>& psi,
                                  double beta_margin = 1.05);

// --- martingale noise -----------------------------------------------------------

struct MartingaleReport {
  long draws = 0;
  bool vacuous = false;         // N < 2: nothing to test
  double actor_mean_norm = 0.0;
  double actor_band = 0.0;      // 4 sigma_max sqrt(dim) / sqrt(N)
  double critic_mean_norm = 0.0;
  double critic_band = 0.0;
  double max_sq_residual = 0.0; // empirical second-moment bound
  bool pass = true;
};

MartingaleReport check_martingale(const AlgoModel& model, const Mdp& mdp, const Vec& theta,
                                  const Vec& omega, const ControlState& z,
                                  const ControlConfig& ctrl, long draws, std::uint64_t seed,
                                  kernels::Exec exec = kernels::Exec::Parallel);

// --- Lipschitz estimate -----------------------------------------------------------

// Max observed gradient-difference ratio over sampled parameter pairs in a
// ball; an empirical lower bound on the Lipschitz constant, never the
// constant itself.
double estimate_lipschitz(const std::function<Vec(const Vec&)>& gradient, std::size_t dim,
                          double radius, int num_pairs, std::uint64_t seed);

// --- combined assumption report ----------------------------------------------------

struct AssumptionReport {
  double lipschitz_estimate_h = 0.0;
  double lipschitz_estimate_f = 0.0;
  double noise_second_moment_max = 0.0;
  ScheduleDiagnosis schedule;
  bool boundedness_ok = true;
};

std::string greediness_to_json(const GreedinessReport& r);
std::string martingale_to_json(const MartingaleReport& r);

}  // namespace tsac
