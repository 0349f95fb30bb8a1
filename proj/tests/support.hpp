#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// are deliberately written with a different structure from the library code
// they check.

#include <map>
#include <vector>

#include "tsac/generator.hpp"
#include "tsac/mdp.hpp"

namespace tsac::testing {

// Breadth-first enumeration oracle: expands a flat list of weighted partial
// episodes layer by layer, no recursion, no pruning logic shared with the
// library's DFS.
inline std::vector<WeightedTrajectory> naive_enumerate(const Mdp& mdp,
                                                       const PolicyTable& policy) {
  struct Partial {
    std::vector<Step> steps;
    double prob;
    int state;
    int action;
  };
  std::vector<Partial> frontier;
  if (const auto* fixed = std::get_if<FixedStart>(&mdp.initial())) {
    frontier.push_back({{}, 1.0, fixed->state, fixed->action});
  } else {
    for (const auto& [s, ps] : std::get<StartDistribution>(mdp.initial()).state_probs)
      for (int a = 0; a < mdp.num_actions(); ++a)
        frontier.push_back({{}, ps * policy.row(s)[static_cast<std::size_t>(a)], s, a});
  }
  for (int t = 0; t <= mdp.horizon(); ++t) {
    std::vector<Partial> next;
    for (const Partial& p : frontier) {
      for (const Mdp::Outcome& o : mdp.outcomes(p.state, p.action)) {
        Partial q = p;
        q.steps.push_back({p.state, p.action, o.reward});
        q.prob *= o.prob;
        if (t == mdp.horizon()) {
          next.push_back(std::move(q));
        } else {
          for (int a = 0; a < mdp.num_actions(); ++a) {
            Partial r = q;
            r.prob *= policy.row(o.next_state)[static_cast<std::size_t>(a)];
            r.state = o.next_state;
            r.action = a;
            next.push_back(std::move(r));
          }
        }
      }
    }
    frontier = std::move(next);
  }
  std::vector<WeightedTrajectory> out;
  for (Partial& p : frontier)
    if (p.prob > 0.0) out.push_back({Trajectory{std::move(p.steps)}, p.prob});
  return out;
}

// Single-state-per-layer chain with deterministic transitions and
// action-dependent rewards; the smallest fully-controllable fixture.
inline Mdp tiny_chain(int horizon, double reward_a0, double reward_a1,
                      bool distribution_start = true) {
  std::vector<std::vector<int>> layers;
  for (int t = 0; t <= horizon; ++t) layers.push_back({t});
  MdpBuilder b(layers, 2, 1.0 + std::max(std::abs(reward_a0), std::abs(reward_a1)));
  for (int t = 0; t <= horizon; ++t) {
    const int next = t == horizon ? Mdp::kEpisodeEnd : t + 1;
    b.add(t, 0, next, reward_a0, 1.0);
    b.add(t, 1, next, reward_a1, 1.0);
  }
  if (distribution_start)
    b.start_distribution({{0, 1.0}});
  else
    b.fixed_start(0, 0);
  return b.build();
}

// Single-action chain (for score-free cases).
inline Mdp single_action_chain(int horizon, double reward) {
  std::vector<std::vector<int>> layers;
  for (int t = 0; t <= horizon; ++t) layers.push_back({t});
  MdpBuilder b(layers, 1, std::abs(reward) + 1.0);
  for (int t = 0; t <= horizon; ++t)
    b.add(t, 0, t == horizon ? Mdp::kEpisodeEnd : t + 1, reward, 1.0);
  b.start_distribution({{0, 1.0}});
  return b.build();
}

// Keyed by (state sequence, action sequence, reward sequence) for
// cross-implementation comparison of enumerations.
inline std::map<std::vector<double>, double> as_map(
    const std::vector<WeightedTrajectory>& list) {
  std::map<std::vector<double>, double> m;
  for (const WeightedTrajectory& wt : list) {
    std::vector<double> key;
    for (const Step& s : wt.trajectory.steps) {
      key.push_back(s.state);
      key.push_back(s.action);
      key.push_back(s.reward);
    }
    m[key] += wt.prob;
  }
  return m;
}

}  // namespace tsac::testing
