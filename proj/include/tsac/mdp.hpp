#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsac/common.hpp"

namespace tsac {

// One (state, action, realized reward) step; reward at position t is the
// realized R_{t+1}.
struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

// A full episode of exactly horizon+1 steps.
struct Trajectory {
  std::vector<Step> steps;

  int length() const { return static_cast<int>(steps.size()); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Sum of realized rewards from position t to the end.
double return_to_go(const Trajectory& tau, int t);
inline double total_return(const Trajectory& tau) { return return_to_go(tau, 0); }

// Lexicographic on (state, action, reward) triples; the deterministic
// tie-break used by the ordered sampling distribution.
bool trajectory_less(const Trajectory& a, const Trajectory& b);

// Episode start: either a fixed (s0, a0) pair or a distribution over s0
// with a0 drawn from the policy.
struct FixedStart {
  int state = 0;
  int action = 0;
};
struct StartDistribution {
  std::vector<std::pair<int, double>> state_probs;  // must sum to 1
};
using Initial = std::variant<FixedStart, StartDistribution>;

struct PolicyTable {
  std::vector<Vec> probs;  // probs[state][action]

  const Vec& row(int state) const { return probs[static_cast<std::size_t>(state)]; }
  static PolicyTable uniform(int num_states, int num_actions);
  static PolicyTable deterministic(int num_states, int num_actions,
                                   const std::vector<int>& actions);
  void validate(int num_actions) const;
};

// Finite time-aware MDP with undiscounted returns. States are arranged in
// layers t = 0..T; the kernel maps a layer-t state-action to (next state,
// reward, prob) outcomes in layer t+1, and layer-T state-actions to terminal
// reward outcomes (next_state = kEpisodeEnd).
class Mdp {
 public:
  static constexpr int kEpisodeEnd = -1;

  struct Outcome {
    int next_state = kEpisodeEnd;
    double reward = 0.0;
    double prob = 0.0;
  };

  Mdp(std::vector<std::vector<int>> layers, int num_actions,
      std::vector<std::vector<std::vector<Outcome>>> kernel, Initial initial,
      double reward_bound);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }
  double reward_bound() const { return reward_bound_; }
  const Initial& initial() const { return initial_; }
  bool has_fixed_start() const { return std::holds_alternative<FixedStart>(initial_); }

  int layer_of(int state) const { return layer_of_[static_cast<std::size_t>(state)]; }
  const std::vector<int>& layer(int t) const { return layers_[static_cast<std::size_t>(t)]; }

  const std::vector<Outcome>& outcomes(int state, int action) const {
    return kernel_[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
  }

  // r(s,a): expected immediate reward.
  double expected_reward(int state, int action) const;

  // First step index whose action carries a policy factor in the episode
  // measure: 1 for a fixed (s0, a0) start, 0 for a start distribution.
  int score_start() const { return has_fixed_start() ? 1 : 0; }

 private:
  std::vector<std::vector<int>> layers_;
  std::vector<int> layer_of_;
  int num_states_ = 0;
  int num_actions_ = 0;
  int horizon_ = 0;
  std::vector<std::vector<std::vector<Outcome>>> kernel_;  // [state][action]
  Initial initial_;
  double reward_bound_ = 0.0;
};

// Convenience builder used by generators and file loading: collects sparse
// (s, a, s', r, p) entries, merges duplicates, then validates.
class MdpBuilder {
 public:
  MdpBuilder(std::vector<std::vector<int>> layers, int num_actions, double reward_bound);

  // next_state == Mdp::kEpisodeEnd adds a terminal reward branch.
  MdpBuilder& add(int state, int action, int next_state, double reward, double prob);
  MdpBuilder& fixed_start(int state, int action);
  MdpBuilder& start_distribution(std::vector<std::pair<int, double>> probs);
  Mdp build() const;

 private:
  std::vector<std::vector<int>> layers_;
  int num_actions_;
  double reward_bound_;
  int num_states_;
  std::vector<std::vector<std::vector<Mdp::Outcome>>> kernel_;
  Initial initial_ = FixedStart{0, 0};
  bool initial_set_ = false;
};

struct WeightedTrajectory {
  Trajectory trajectory;
  double prob = 0.0;
};

inline constexpr std::size_t kEnumerationGuard = 10'000'000;

// All positive-probability episodes with their exact probabilities
// (kernel branches times policy factors, times the initial factor when the
// start is a distribution). Throws EnumerationTooLarge past the guard.
std::vector<WeightedTrajectory> enumerate_trajectories(
    const Mdp& mdp, const PolicyTable& policy, std::size_t guard = kEnumerationGuard);

// Exact probability of one episode; throws InconsistentTrajectory when tau
// does not fit the MDP's layering/kernel.
double trajectory_probability(const Mdp& mdp, const PolicyTable& policy,
                              const Trajectory& tau);

struct QTable {
  std::vector<Vec> q;  // q[state][action]
  Vec v;               // v[state] under the same policy

  double operator()(int s, int a) const {
    return q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  }
};

// Backward induction over time layers; exact for any policy.
QTable exact_q_values(const Mdp& mdp, const PolicyTable& policy);

struct OptimalPolicyResult {
  PolicyTable policy;        // deterministic argmax policy
  Vec v_star;                // v*(s)
  QTable q_star;             // q*(s,a) and v* again
  bool argmax_unique = true; // unique maximizer at every state
  std::vector<bool> unique_per_state;
};

OptimalPolicyResult optimal_policy(const Mdp& mdp, double tie_tol = 1e-12);

}  // namespace tsac
