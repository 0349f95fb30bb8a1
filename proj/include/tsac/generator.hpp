#pragma once

#include <cstdint>

#include "tsac/common.hpp"
#include "tsac/mdp.hpp"

namespace tsac {

struct RandomMdpSpec {
  int horizon = 3;
  int max_states_per_layer = 3;  // layer sizes drawn in [1, max]
  int num_actions = 2;
  int reward_branches = 2;       // stochastic (s', r) branches per (s, a)
  double reward_bound = 1.0;
  bool fixed_start = true;
};

// Seeded layered MDP with random transition-reward kernels; every
// distribution is exactly normalized.
Mdp random_mdp(const RandomMdpSpec& spec, std::uint64_t seed);

// Random strictly positive policy rows (Dirichlet-ish via normalized
// exponentials).
PolicyTable random_policy(const Mdp& mdp, std::uint64_t seed);

// Random deterministic policy.
PolicyTable random_deterministic_policy(const Mdp& mdp, std::uint64_t seed);

}  // namespace tsac
