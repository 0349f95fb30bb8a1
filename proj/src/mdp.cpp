#include "tsac/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace tsac {

namespace {
constexpr double kDistTol = 1e-12;
}

double return_to_go(const Trajectory& tau, int t) {
  if (t < 0 || t >= tau.length()) throw IndexOutOfRange("return_to_go: bad time index");
  double g = 0.0;
  for (int k = t; k < tau.length(); ++k) g += tau.steps[static_cast<std::size_t>(k)].reward;
  return g;
}

bool trajectory_less(const Trajectory& a, const Trajectory& b) {
  const std::size_t n = std::min(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Step& x = a.steps[i];
    const Step& y = b.steps[i];
    if (x.state != y.state) return x.state < y.state;
    if (x.action != y.action) return x.action < y.action;
    if (x.reward != y.reward) return x.reward < y.reward;
  }
  return a.steps.size() < b.steps.size();
}

PolicyTable PolicyTable::uniform(int num_states, int num_actions) {
  PolicyTable p;
  p.probs.assign(static_cast<std::size_t>(num_states),
                 Vec(static_cast<std::size_t>(num_actions), 1.0 / num_actions));
  return p;
}

PolicyTable PolicyTable::deterministic(int num_states, int num_actions,
                                       const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != num_states)
    throw ShapeMismatch("deterministic policy: one action per state required");
  PolicyTable p;
  p.probs.assign(static_cast<std::size_t>(num_states),
                 Vec(static_cast<std::size_t>(num_actions), 0.0));
  for (int s = 0; s < num_states; ++s) {
    const int a = actions[static_cast<std::size_t>(s)];
    if (a < 0 || a >= num_actions) throw IndexOutOfRange("deterministic policy: bad action");
    p.probs[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = 1.0;
  }
  return p;
}

void PolicyTable::validate(int num_actions) const {
  for (const Vec& row : probs) {
    if (static_cast<int>(row.size()) != num_actions)
      throw ShapeMismatch("policy row has wrong arity");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw Error("policy probability negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kDistTol) throw Error("policy row does not sum to 1");
  }
}

Mdp::Mdp(std::vector<std::vector<int>> layers, int num_actions,
         std::vector<std::vector<std::vector<Outcome>>> kernel, Initial initial,
         double reward_bound)
    : layers_(std::move(layers)),
      num_actions_(num_actions),
      kernel_(std::move(kernel)),
      initial_(std::move(initial)),
      reward_bound_(reward_bound) {
  if (layers_.empty()) throw ConfigError("mdp: at least one layer required");
  if (num_actions_ <= 0) throw ConfigError("mdp: num_actions must be positive");
  if (reward_bound_ <= 0.0) throw ConfigError("mdp: reward bound must be positive");
  horizon_ = static_cast<int>(layers_.size()) - 1;

  int count = 0;
  for (const auto& layer : layers_) count += static_cast<int>(layer.size());
  num_states_ = count;
  layer_of_.assign(static_cast<std::size_t>(num_states_), -1);
  for (int t = 0; t <= horizon_; ++t) {
    for (int s : layers_[static_cast<std::size_t>(t)]) {
      if (s < 0 || s >= num_states_) throw ConfigError("mdp: state id out of range");
      if (layer_of_[static_cast<std::size_t>(s)] != -1)
        throw ConfigError("mdp: state listed in two layers");
      layer_of_[static_cast<std::size_t>(s)] = t;
    }
  }
  for (int s = 0; s < num_states_; ++s)
    if (layer_of_[static_cast<std::size_t>(s)] == -1)
      throw ConfigError("mdp: state missing from layers");

  if (static_cast<int>(kernel_.size()) != num_states_)
    throw ConfigError("mdp: kernel must cover every state");
  for (int s = 0; s < num_states_; ++s) {
    const int t = layer_of_[static_cast<std::size_t>(s)];
    auto& per_action = kernel_[static_cast<std::size_t>(s)];
    if (static_cast<int>(per_action.size()) != num_actions_)
      throw ConfigError("mdp: kernel must cover every action");
    for (int a = 0; a < num_actions_; ++a) {
      const auto& outs = per_action[static_cast<std::size_t>(a)];
      if (outs.empty()) throw ConfigError("mdp: empty outcome distribution");
      double sum = 0.0;
      for (const Outcome& o : outs) {
        if (o.prob < 0.0) throw ConfigError("mdp: negative outcome probability");
        sum += o.prob;
        if (std::abs(o.reward) > reward_bound_ + kDistTol)
          throw ConfigError("mdp: reward exceeds the declared bound");
        if (t == horizon_) {
          if (o.next_state != kEpisodeEnd)
            throw ConfigError("mdp: final-layer outcomes must end the episode");
        } else {
          if (o.next_state == kEpisodeEnd)
            throw ConfigError("mdp: non-final outcome ends the episode");
          if (o.next_state < 0 || o.next_state >= num_states_)
            throw ConfigError("mdp: outcome target out of range");
          if (layer_of_[static_cast<std::size_t>(o.next_state)] != t + 1)
            throw ConfigError("mdp: kernel edge crosses layers");
        }
      }
      if (std::abs(sum - 1.0) > kDistTol)
        throw ConfigError("mdp: outcome distribution does not sum to 1");
    }
  }

  if (const auto* fixed = std::get_if<FixedStart>(&initial_)) {
    if (fixed->state < 0 || fixed->state >= num_states_ ||
        layer_of_[static_cast<std::size_t>(fixed->state)] != 0)
      throw ConfigError("mdp: start state must lie in layer 0");
    if (fixed->action < 0 || fixed->action >= num_actions_)
      throw ConfigError("mdp: start action out of range");
  } else {
    const auto& dist = std::get<StartDistribution>(initial_);
    double sum = 0.0;
    for (const auto& [s, p] : dist.state_probs) {
      if (s < 0 || s >= num_states_ || layer_of_[static_cast<std::size_t>(s)] != 0)
        throw ConfigError("mdp: start distribution state must lie in layer 0");
      if (p < 0.0) throw ConfigError("mdp: negative start probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kDistTol)
      throw ConfigError("mdp: start distribution does not sum to 1");
  }
}

double Mdp::expected_reward(int state, int action) const {
  double r = 0.0;
  for (const Outcome& o : outcomes(state, action)) r += o.prob * o.reward;
  return r;
}

MdpBuilder::MdpBuilder(std::vector<std::vector<int>> layers, int num_actions,
                       double reward_bound)
    : layers_(std::move(layers)), num_actions_(num_actions), reward_bound_(reward_bound) {
  int count = 0;
  for (const auto& layer : layers_) count += static_cast<int>(layer.size());
  num_states_ = count;
  kernel_.assign(static_cast<std::size_t>(num_states_),
                 std::vector<std::vector<Mdp::Outcome>>(static_cast<std::size_t>(num_actions_)));
}

MdpBuilder& MdpBuilder::add(int state, int action, int next_state, double reward,
                            double prob) {
  if (state < 0 || state >= num_states_ || action < 0 || action >= num_actions_)
    throw ConfigError("mdp builder: entry out of range");
  auto& outs = kernel_[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
  for (Mdp::Outcome& o : outs) {
    if (o.next_state == next_state && o.reward == reward) {
      o.prob += prob;  // merge duplicate branches
      return *this;
    }
  }
  outs.push_back({next_state, reward, prob});
  return *this;
}

MdpBuilder& MdpBuilder::fixed_start(int state, int action) {
  initial_ = FixedStart{state, action};
  initial_set_ = true;
  return *this;
}

MdpBuilder& MdpBuilder::start_distribution(std::vector<std::pair<int, double>> probs) {
  initial_ = StartDistribution{std::move(probs)};
  initial_set_ = true;
  return *this;
}

Mdp MdpBuilder::build() const {
  if (!initial_set_) throw ConfigError("mdp builder: initial condition not set");
  return Mdp(layers_, num_actions_, kernel_, initial_, reward_bound_);
}

namespace {

// DFS over the episode tree, carrying the probability product.
struct Enumerator {
  const Mdp& mdp;
  const PolicyTable& policy;
  std::size_t guard;
  std::size_t emitted = 0;
  std::vector<Step> prefix;
  std::vector<WeightedTrajectory> out;

  void expand(int state, int action, double prob, int t) {
    for (const Mdp::Outcome& o : mdp.outcomes(state, action)) {
      if (o.prob == 0.0) continue;
      prefix.push_back({state, action, o.reward});
      const double p = prob * o.prob;
      if (t == mdp.horizon()) {
        if (++emitted > guard)
          throw EnumerationTooLarge("trajectory enumeration exceeds the term guard");
        out.push_back({Trajectory{prefix}, p});
      } else {
        const Vec& row = policy.row(o.next_state);
        for (int a = 0; a < mdp.num_actions(); ++a) {
          const double pa = row[static_cast<std::size_t>(a)];
          if (pa == 0.0) continue;
          expand(o.next_state, a, p * pa, t + 1);
        }
      }
      prefix.pop_back();
    }
  }

  void run() {
    if (const auto* fixed = std::get_if<FixedStart>(&mdp.initial())) {
      expand(fixed->state, fixed->action, 1.0, 0);
    } else {
      for (const auto& [s, ps] : std::get<StartDistribution>(mdp.initial()).state_probs) {
        if (ps == 0.0) continue;
        const Vec& row = policy.row(s);
        for (int a = 0; a < mdp.num_actions(); ++a) {
          const double pa = row[static_cast<std::size_t>(a)];
          if (pa == 0.0) continue;
          expand(s, a, ps * pa, 0);
        }
      }
    }
  }
};

}  // namespace

std::vector<WeightedTrajectory> enumerate_trajectories(const Mdp& mdp,
                                                       const PolicyTable& policy,
                                                       std::size_t guard) {
  policy.validate(mdp.num_actions());
  Enumerator e{mdp, policy, guard, 0, {}, {}};
  e.prefix.reserve(static_cast<std::size_t>(mdp.horizon()) + 1);
  e.run();
  return std::move(e.out);
}

double trajectory_probability(const Mdp& mdp, const PolicyTable& policy,
                              const Trajectory& tau) {
  if (tau.length() != mdp.horizon() + 1)
    throw InconsistentTrajectory("trajectory has wrong length");
  double p = 1.0;
  const Step& first = tau.steps.front();
  if (mdp.layer_of(first.state) != 0)
    throw InconsistentTrajectory("trajectory does not start in layer 0");
  if (const auto* fixed = std::get_if<FixedStart>(&mdp.initial())) {
    if (first.state != fixed->state || first.action != fixed->action)
      throw InconsistentTrajectory("trajectory start differs from the fixed start");
  } else {
    double ps = 0.0;
    for (const auto& [s, q] : std::get<StartDistribution>(mdp.initial()).state_probs)
      if (s == first.state) ps += q;
    p *= ps * policy.row(first.state)[static_cast<std::size_t>(first.action)];
  }
  for (int t = 0; t <= mdp.horizon(); ++t) {
    const Step& step = tau.steps[static_cast<std::size_t>(t)];
    if (mdp.layer_of(step.state) != t)
      throw InconsistentTrajectory("trajectory state in the wrong layer");
    const int next = t < mdp.horizon() ? tau.steps[static_cast<std::size_t>(t) + 1].state
                                       : Mdp::kEpisodeEnd;
    double branch = 0.0;
    for (const Mdp::Outcome& o : mdp.outcomes(step.state, step.action))
      if (o.next_state == next && o.reward == step.reward) branch += o.prob;
    if (branch == 0.0)
      throw InconsistentTrajectory("trajectory step has no matching kernel branch");
    p *= branch;
    if (t < mdp.horizon()) {
      const Step& nxt = tau.steps[static_cast<std::size_t>(t) + 1];
      p *= policy.row(nxt.state)[static_cast<std::size_t>(nxt.action)];
    }
  }
  return p;
}

QTable exact_q_values(const Mdp& mdp, const PolicyTable& policy) {
  policy.validate(mdp.num_actions());
  QTable table;
  table.q.assign(static_cast<std::size_t>(mdp.num_states()),
                 Vec(static_cast<std::size_t>(mdp.num_actions()), 0.0));
  table.v.assign(static_cast<std::size_t>(mdp.num_states()), 0.0);
  for (int t = mdp.horizon(); t >= 0; --t) {
    for (int s : mdp.layer(t)) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        double q = 0.0;
        for (const Mdp::Outcome& o : mdp.outcomes(s, a)) {
          q += o.prob * o.reward;
          if (o.next_state != Mdp::kEpisodeEnd)
            q += o.prob * table.v[static_cast<std::size_t>(o.next_state)];
        }
        table.q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = q;
      }
      table.v[static_cast<std::size_t>(s)] =
          dot(policy.row(s), table.q[static_cast<std::size_t>(s)]);
    }
  }
  return table;
}

OptimalPolicyResult optimal_policy(const Mdp& mdp, double tie_tol) {
  OptimalPolicyResult res;
  res.q_star.q.assign(static_cast<std::size_t>(mdp.num_states()),
                      Vec(static_cast<std::size_t>(mdp.num_actions()), 0.0));
  res.q_star.v.assign(static_cast<std::size_t>(mdp.num_states()), 0.0);
  res.unique_per_state.assign(static_cast<std::size_t>(mdp.num_states()), true);
  std::vector<int> best(static_cast<std::size_t>(mdp.num_states()), 0);

  for (int t = mdp.horizon(); t >= 0; --t) {
    for (int s : mdp.layer(t)) {
      Vec& qs = res.q_star.q[static_cast<std::size_t>(s)];
      for (int a = 0; a < mdp.num_actions(); ++a) {
        double q = 0.0;
        for (const Mdp::Outcome& o : mdp.outcomes(s, a)) {
          q += o.prob * o.reward;
          if (o.next_state != Mdp::kEpisodeEnd)
            q += o.prob * res.q_star.v[static_cast<std::size_t>(o.next_state)];
        }
        qs[static_cast<std::size_t>(a)] = q;
      }
      int arg = 0;
      for (int a = 1; a < mdp.num_actions(); ++a)
        if (qs[static_cast<std::size_t>(a)] > qs[static_cast<std::size_t>(arg)]) arg = a;
      int near = 0;
      for (int a = 0; a < mdp.num_actions(); ++a)
        if (qs[static_cast<std::size_t>(arg)] - qs[static_cast<std::size_t>(a)] <= tie_tol)
          ++near;
      res.unique_per_state[static_cast<std::size_t>(s)] = near == 1;
      if (near != 1) res.argmax_unique = false;
      best[static_cast<std::size_t>(s)] = arg;
      res.q_star.v[static_cast<std::size_t>(s)] = qs[static_cast<std::size_t>(arg)];
    }
  }
  res.v_star = res.q_star.v;
  res.policy = PolicyTable::deterministic(mdp.num_states(), mdp.num_actions(), best);
  return res;
}

}  // namespace tsac
