#include "tsac/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "tsac/network.hpp"
#include "tsac/policy.hpp"
#include "tsac/sampling.hpp"

namespace tsac {

namespace {

// E_{tau_{0,t}}[R_{t+1}]: prefix enumeration with rewards marginalized along
// the way and the expected immediate reward at the cut.
double prefix_expected_reward(const Mdp& mdp, const PolicyTable& policy, int t) {
  struct Walker {
    const Mdp& mdp;
    const PolicyTable& policy;
    int cut;
    double total = 0.0;

    void walk(int state, int action, double prob, int depth) {
      if (depth == cut) {
        total += prob * mdp.expected_reward(state, action);
        return;
      }
      for (const Mdp::Outcome& o : mdp.outcomes(state, action)) {
        if (o.prob == 0.0 || o.next_state == Mdp::kEpisodeEnd) continue;
        const Vec& row = policy.row(o.next_state);
        for (int a = 0; a < mdp.num_actions(); ++a) {
          const double pa = row[static_cast<std::size_t>(a)];
          if (pa == 0.0) continue;
          walk(o.next_state, a, prob * o.prob * pa, depth + 1);
        }
      }
    }
  } walker{mdp, policy, t};

  if (const auto* fixed = std::get_if<FixedStart>(&mdp.initial())) {
    walker.walk(fixed->state, fixed->action, 1.0, 0);
  } else {
    for (const auto& [s, ps] : std::get<StartDistribution>(mdp.initial()).state_probs) {
      if (ps == 0.0) continue;
      const Vec& row = policy.row(s);
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const double pa = row[static_cast<std::size_t>(a)];
        if (pa == 0.0) continue;
        walker.walk(s, a, ps * pa, 0);
      }
    }
  }
  return walker.total;
}

}  // namespace

double check_causality(const Mdp& mdp, const PolicyTable& policy) {
  const auto support = enumerate_trajectories(mdp, policy);
  double worst = 0.0;
  for (int t = 0; t <= mdp.horizon(); ++t) {
    double full = 0.0;
    for (const WeightedTrajectory& wt : support)
      full += wt.prob * wt.trajectory.steps[static_cast<std::size_t>(t)].reward;
    const double prefix = prefix_expected_reward(mdp, policy, t);
    worst = std::max(worst, std::abs(full - prefix));
  }
  return worst;
}

PgtReport check_policy_gradient_theorem(const PpoModel& model, const Mdp& mdp,
                                        const Vec& theta, double slope, double fd_step) {
  PgtReport report;

  const auto expected_return = [&](const Vec& params) {
    const PolicyTable pi = model.actor.tabulate(params, slope);
    double j = 0.0;
    for (const WeightedTrajectory& wt : enumerate_trajectories(mdp, pi))
      j += wt.prob * total_return(wt.trajectory);
    return j;
  };
  report.grad_fd = finite_diff_gradient(expected_return, theta, fd_step);

  const PolicyTable pi = model.actor.tabulate(theta, slope);
  const auto support = enumerate_trajectories(mdp, pi);
  const QTable q = exact_q_values(mdp, pi);

  const std::size_t m = theta.size();
  report.grad_score_togo.assign(m, 0.0);
  report.grad_score_q.assign(m, 0.0);
  const int start = mdp.score_start();
  for (const WeightedTrajectory& wt : support) {
    for (int k = start; k < wt.trajectory.length(); ++k) {
      const Step& step = wt.trajectory.steps[static_cast<std::size_t>(k)];
      const Vec score = model.actor.log_policy_gradient(theta, slope, step.state, step.action);
      axpy(wt.prob * return_to_go(wt.trajectory, k), score, report.grad_score_togo);
      axpy(wt.prob * q(step.state, step.action), score, report.grad_score_q);
    }
  }

  report.dev_exact = relative_deviation(report.grad_score_togo, report.grad_score_q);
  report.dev_fd = std::max(relative_deviation(report.grad_fd, report.grad_score_togo),
                           relative_deviation(report.grad_fd, report.grad_score_q));
  return report;
}

GreedinessReport check_greediness(const Mdp& mdp, const std::vector<Vec>& psi,
                                  double beta_margin) {
  GreedinessReport rep;
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  if (static_cast<int>(psi.size()) != S)
    throw ShapeMismatch("check_greediness: psi needs one row per state");

  if (A == 1) {
    rep.status = GreedinessStatus::SingleAction;
    rep.delta_defined = false;
    return rep;
  }

  const OptimalPolicyResult opt = optimal_policy(mdp);
  if (!opt.argmax_unique) {
    rep.status = GreedinessStatus::NonUniqueOptimum;
    return rep;
  }
  std::vector<int> best(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    const Vec& row = opt.policy.row(s);
    best[static_cast<std::size_t>(s)] =
        static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }

  // delta from the current psi ranking; epsilon from the exact q gaps.
  double delta = std::numeric_limits<double>::infinity();
  for (int s = 0; s < S; ++s) {
    const int a_star = best[static_cast<std::size_t>(s)];
    for (int a = 0; a < A; ++a) {
      if (a == a_star) continue;
      delta = std::min(delta, psi[static_cast<std::size_t>(s)][static_cast<std::size_t>(a_star)] -
                                  psi[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]);
    }
  }
  rep.delta = delta;
  if (!(delta > 0.0)) {
    rep.status = GreedinessStatus::NotYetGreedy;
    return rep;
  }

  double q_gap = std::numeric_limits<double>::infinity();
  for (int s = 0; s < S; ++s) {
    const int a_star = best[static_cast<std::size_t>(s)];
    for (int a = 0; a < A; ++a) {
      if (a == a_star) continue;
      q_gap = std::min(q_gap, opt.v_star[static_cast<std::size_t>(s)] - opt.q_star(s, a));
    }
  }
  rep.epsilon = 0.5 * q_gap;

  rep.beta_required = greediness_beta(A, S, mdp.horizon(), mdp.reward_bound(), rep.delta,
                                      rep.epsilon);
  rep.beta_used = beta_margin * rep.beta_required;

  PolicyTable pi;
  pi.probs.resize(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s)
    pi.probs[static_cast<std::size_t>(s)] =
        softmax_with_slope(psi[static_cast<std::size_t>(s)], rep.beta_used);

  const QTable q_pi = exact_q_values(mdp, pi);
  rep.q_deviation = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      rep.q_deviation = std::max(rep.q_deviation, std::abs(opt.q_star(s, a) - q_pi(s, a)));
  rep.q_deviation_ok = rep.q_deviation < 0.5 * rep.epsilon;

  rep.argmax_per_state.assign(static_cast<std::size_t>(S), true);
  for (int s = 0; s < S; ++s) {
    const Vec& row = q_pi.q[static_cast<std::size_t>(s)];
    const int arg = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    const bool ok = arg == best[static_cast<std::size_t>(s)];
    rep.argmax_per_state[static_cast<std::size_t>(s)] = ok;
    if (!ok) rep.argmax_correct = false;
  }

  const double mass_bound =
      1.0 - static_cast<double>(A - 1) * std::exp(-rep.beta_used * rep.delta);
  for (int s = 0; s < S; ++s) {
    if (pi.row(s)[static_cast<std::size_t>(best[static_cast<std::size_t>(s)])] <= mass_bound) {
      rep.policy_mass_ok = false;
      break;
    }
  }

  // Trajectory product bound; the empty product at horizon zero is exempt.
  if (mdp.horizon() > 0) {
    const double prod_bound = static_cast<double>(mdp.horizon()) *
                              static_cast<double>(A - 1) *
                              std::exp(-rep.beta_used * rep.delta);
    for (const WeightedTrajectory& wt : enumerate_trajectories(mdp, pi)) {
      double prod_opt = 1.0, prod_pi = 1.0;
      for (int t = 1; t < wt.trajectory.length(); ++t) {
        const Step& step = wt.trajectory.steps[static_cast<std::size_t>(t)];
        prod_opt *= opt.policy.row(step.state)[static_cast<std::size_t>(step.action)];
        prod_pi *= pi.row(step.state)[static_cast<std::size_t>(step.action)];
      }
      if (std::abs(prod_opt - prod_pi) >= prod_bound) {
        rep.product_bound_ok = false;
        break;
      }
    }
  }
  return rep;
}

MartingaleReport check_martingale(const AlgoModel& model, const Mdp& mdp, const Vec& theta,
                                  const Vec& omega, const ControlState& z,
                                  const ControlConfig& ctrl, long draws, std::uint64_t seed,
                                  kernels::Exec exec) {
  MartingaleReport rep;
  rep.draws = draws;
  if (draws < 2) {
    rep.vacuous = true;
    return rep;
  }

  const std::size_t m = theta.size();
  const std::size_t k = omega.size();
  Vec exact_h, exact_f;
  PpoSettings settings{ctrl.kl_eps, ctrl.weight_decay};
  PpoTables tables;
  OrderedTrajectoryDistribution dist_pi, dist_behavioral;

  if (model.algo == Algo::Rudder) {
    const RudderExact exact = rudder_exact(model.rudder, mdp, theta, omega, z, exec);
    exact_h = exact.h;
    exact_f = exact.f;
    dist_pi = build_ordered_distribution(
        mdp, rudder_sampling_policy(model.rudder, theta, z.z1_now));
    dist_behavioral = build_ordered_distribution(mdp, model.rudder.behavioral);
  } else {
    tables = ppo_tables(model.ppo, mdp, theta, omega, z, settings);
    const auto support = enumerate_trajectories(mdp, tables.pi);
    const PpoExact exact = ppo_exact(tables, support, exec);
    exact_h = exact.h;
    exact_f = model.algo == Algo::PpoTd ? exact.f_td : exact.f_mc;
    dist_pi = build_ordered_distribution(mdp, tables.pi);
  }

  const std::size_t dim = m + k;
  std::vector<double> sq_norms(static_cast<std::size_t>(draws), 0.0);
  const Rng base(seed);
  // Packed accumulator: [sum residual | sum residual^2].
  const Vec acc = kernels::accumulate(
      static_cast<std::size_t>(draws), 2 * dim,
      [&](std::size_t i, std::span<double> out) {
        Rng rng = base.substream(i);
        Vec res(dim, 0.0);
        if (model.algo == Algo::Rudder) {
          const Trajectory& tau_h =
              inverse_transform_sample(dist_behavioral, rng.uniform01());
          const Trajectory& tau_g = inverse_transform_sample(dist_pi, rng.uniform01());
          rudder_actor_grad_sampled_acc(model.rudder, tau_h, theta, omega, z.z2_now, 1.0,
                                        std::span<double>(res).subspan(0, m));
          rudder_critic_grad_sampled_acc(model.rudder, tau_g, omega, z.z2_now, 1.0,
                                         std::span<double>(res).subspan(m, k));
        } else {
          const Trajectory& tau = inverse_transform_sample(dist_pi, rng.uniform01());
          ppo_policy_grad_sampled_acc(tables, tau, 1.0,
                                      std::span<double>(res).subspan(0, m));
          if (model.algo == Algo::PpoTd)
            td_critic_grad_sampled_acc(tables, tau, 1.0,
                                       std::span<double>(res).subspan(m, k));
          else
            mc_critic_grad_sampled_acc(tables, tau, 1.0,
                                       std::span<double>(res).subspan(m, k));
        }
        for (std::size_t c = 0; c < m; ++c) res[c] -= exact_h[c];
        for (std::size_t c = 0; c < k; ++c) res[m + c] -= exact_f[c];
        double sq = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
          out[c] += res[c];
          out[dim + c] += res[c] * res[c];
          sq += res[c] * res[c];
        }
        sq_norms[i] = sq;
      },
      exec);

  const double n = static_cast<double>(draws);
  double sigma_max_h = 0.0, sigma_max_f = 0.0;
  double mean_sq_h = 0.0, mean_sq_f = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double mean = acc[c] / n;
    const double var = std::max(0.0, (acc[dim + c] - n * mean * mean) / (n - 1.0));
    if (c < m) {
      sigma_max_h = std::max(sigma_max_h, std::sqrt(var));
      mean_sq_h += mean * mean;
    } else {
      sigma_max_f = std::max(sigma_max_f, std::sqrt(var));
      mean_sq_f += mean * mean;
    }
  }
  rep.actor_mean_norm = std::sqrt(mean_sq_h);
  rep.critic_mean_norm = std::sqrt(mean_sq_f);
  rep.actor_band = 4.0 * sigma_max_h * std::sqrt(static_cast<double>(m)) / std::sqrt(n);
  rep.critic_band = 4.0 * sigma_max_f * std::sqrt(static_cast<double>(k)) / std::sqrt(n);
  rep.max_sq_residual = *std::max_element(sq_norms.begin(), sq_norms.end());
  rep.pass = rep.actor_mean_norm <= rep.actor_band && rep.critic_mean_norm <= rep.critic_band;
  return rep;
}

double estimate_lipschitz(const std::function<Vec(const Vec&)>& gradient, std::size_t dim,
                          double radius, int num_pairs, std::uint64_t seed) {
  const Rng base(seed);
  double best = 0.0;
  for (int p = 0; p < num_pairs; ++p) {
    Rng rng = base.substream(static_cast<std::uint64_t>(p));
    Vec x(dim), y(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = rng.gaussian();
    clamp_norm(x, radius * rng.uniform01());
    // Alternate far pairs with nearby pairs along a random direction.
    const double step = p % 2 == 0 ? radius * rng.uniform01() : 1e-3 * radius;
    for (std::size_t i = 0; i < dim; ++i) y[i] = rng.gaussian();
    const double yn = norm2(y);
    for (std::size_t i = 0; i < dim; ++i) y[i] = x[i] + step * y[i] / (yn > 0 ? yn : 1.0);
    clamp_norm(y, radius);
    const double dist = norm2(sub(y, x));
    if (dist <= 0.0) continue;
    const double ratio = norm2(sub(gradient(x), gradient(y))) / dist;
    best = std::max(best, ratio);
  }
  return best;
}

std::string greediness_to_json(const GreedinessReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  switch (r.status) {
    case GreedinessStatus::Ok: j["status"] = "ok"; break;
    case GreedinessStatus::NonUniqueOptimum: j["status"] = "non-unique-optimum"; break;
    case GreedinessStatus::NotYetGreedy: j["status"] = "not-yet-greedy"; break;
    case GreedinessStatus::SingleAction: j["status"] = "single-action"; break;
  }
  j["delta_defined"] = r.delta_defined;
  j["delta"] = r.delta;
  j["epsilon"] = r.epsilon;
  j["beta_required"] = r.beta_required;
  j["beta_used"] = r.beta_used;
  j["q_deviation"] = r.q_deviation;
  j["q_deviation_ok"] = r.q_deviation_ok;
  j["argmax_correct"] = r.argmax_correct;
  j["policy_mass_ok"] = r.policy_mass_ok;
  j["product_bound_ok"] = r.product_bound_ok;
  j["pass"] = r.pass();
  return j.dump(2) + "\n";
}

std::string martingale_to_json(const MartingaleReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["draws"] = r.draws;
  j["vacuous"] = r.vacuous;
  j["actor_mean_norm"] = r.actor_mean_norm;
  j["actor_band"] = r.actor_band;
  j["critic_mean_norm"] = r.critic_mean_norm;
  j["critic_band"] = r.critic_band;
  j["max_sq_residual"] = r.max_sq_residual;
  j["pass"] = r.pass;
  return j.dump(2) + "\n";
}

}  // namespace tsac
