#include "tsac/sampling.hpp"

#include <algorithm>

namespace tsac {

OrderedTrajectoryDistribution build_ordered_distribution(const Mdp& mdp,
                                                         const PolicyTable& policy,
                                                         std::size_t guard) {
  OrderedTrajectoryDistribution dist;
  dist.entries = enumerate_trajectories(mdp, policy, guard);
  std::sort(dist.entries.begin(), dist.entries.end(),
            [](const WeightedTrajectory& a, const WeightedTrajectory& b) {
              if (a.prob != b.prob) return a.prob > b.prob;
              return trajectory_less(a.trajectory, b.trajectory);
            });
  dist.cumulative.resize(dist.entries.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.entries.size(); ++i) {
    acc += dist.entries[i].prob;
    dist.cumulative[i] = acc;
  }
  return dist;
}

std::size_t inverse_transform_index(const OrderedTrajectoryDistribution& dist, double u) {
  if (dist.entries.empty()) throw Error("inverse_transform_sample: empty distribution");
  const auto it = std::upper_bound(dist.cumulative.begin(), dist.cumulative.end(), u);
  if (it == dist.cumulative.end()) return dist.entries.size() - 1;
  return static_cast<std::size_t>(it - dist.cumulative.begin());
}

const Trajectory& inverse_transform_sample(const OrderedTrajectoryDistribution& dist,
                                           double u) {
  return dist.entries[inverse_transform_index(dist, u)].trajectory;
}

namespace {

// Picks an index from non-negative weights summing to ~1.
template <class WeightAt>
int pick(Rng& rng, int n, WeightAt&& weight) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += weight(i);
    if (u < acc) return i;
  }
  for (int i = n - 1; i >= 0; --i)
    if (weight(i) > 0.0) return i;
  throw Error("sampling: degenerate distribution");
}

}  // namespace

Trajectory simulate_trajectory(const Mdp& mdp, const PolicyTable& policy, Rng& rng) {
  Trajectory tau;
  tau.steps.reserve(static_cast<std::size_t>(mdp.horizon()) + 1);

  int state, action;
  if (const auto* fixed = std::get_if<FixedStart>(&mdp.initial())) {
    state = fixed->state;
    action = fixed->action;
  } else {
    const auto& dist = std::get<StartDistribution>(mdp.initial()).state_probs;
    const int idx = pick(rng, static_cast<int>(dist.size()),
                         [&](int i) { return dist[static_cast<std::size_t>(i)].second; });
    state = dist[static_cast<std::size_t>(idx)].first;
    const Vec& row = policy.row(state);
    action = pick(rng, mdp.num_actions(),
                  [&](int a) { return row[static_cast<std::size_t>(a)]; });
  }

  for (int t = 0; t <= mdp.horizon(); ++t) {
    const auto& outs = mdp.outcomes(state, action);
    const int k = pick(rng, static_cast<int>(outs.size()),
                       [&](int i) { return outs[static_cast<std::size_t>(i)].prob; });
    const Mdp::Outcome& o = outs[static_cast<std::size_t>(k)];
    tau.steps.push_back({state, action, o.reward});
    if (t == mdp.horizon()) break;
    state = o.next_state;
    const Vec& row = policy.row(state);
    action = pick(rng, mdp.num_actions(),
                  [&](int a) { return row[static_cast<std::size_t>(a)]; });
  }
  return tau;
}

NoiseRecord noise_residual(const Vec& exact_actor, const Vec& sampled_actor,
                           const Vec& exact_critic, const Vec& sampled_critic, long n) {
  if (exact_actor.size() != sampled_actor.size() ||
      exact_critic.size() != sampled_critic.size())
    throw ShapeMismatch("noise_residual: gradient shapes differ");
  NoiseRecord rec;
  rec.iteration = n;
  rec.residual_actor = sub(sampled_actor, exact_actor);
  rec.residual_critic = sub(sampled_critic, exact_critic);
  rec.actor_sq_norm = sq_norm(rec.residual_actor);
  rec.critic_sq_norm = sq_norm(rec.residual_critic);
  return rec;
}

}  // namespace tsac
