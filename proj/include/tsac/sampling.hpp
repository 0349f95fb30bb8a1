#pragma once

#include <vector>

#include "tsac/common.hpp"
#include "tsac/mdp.hpp"

namespace tsac {

// Full-support episode distribution ordered by probability (descending)
// with a lexicographic tie-break, plus cumulative sums for inverse
// transform sampling. Interval i of [0,1] has length prob[i] exactly.
struct OrderedTrajectoryDistribution {
  std::vector<WeightedTrajectory> entries;
  Vec cumulative;

  std::size_t size() const { return entries.size(); }
};

OrderedTrajectoryDistribution build_ordered_distribution(
    const Mdp& mdp, const PolicyTable& policy, std::size_t guard = kEnumerationGuard);

// Right-open CDF convention: returns entry i with cumulative[i-1] <= u <
// cumulative[i]; u >= 1 returns the last entry.
const Trajectory& inverse_transform_sample(const OrderedTrajectoryDistribution& dist,
                                           double u);
std::size_t inverse_transform_index(const OrderedTrajectoryDistribution& dist, double u);

// Sequential sampler: walks the kernel step by step; same law as the
// inverse-transform map, usable when enumeration is too large.
Trajectory simulate_trajectory(const Mdp& mdp, const PolicyTable& policy, Rng& rng);

// Martingale residual bookkeeping: sampled minus exact gradient.
struct NoiseRecord {
  long iteration = 0;
  Vec residual_actor;   // h_hat - h
  Vec residual_critic;  // f_hat - f
  double actor_sq_norm = 0.0;
  double critic_sq_norm = 0.0;
};

NoiseRecord noise_residual(const Vec& exact_actor, const Vec& sampled_actor,
                           const Vec& exact_critic, const Vec& sampled_critic, long n);

}  // namespace tsac
