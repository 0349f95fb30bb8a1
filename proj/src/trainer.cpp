#include "tsac/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsac/sampling.hpp"

namespace tsac {

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::PpoTd: return "ppo-td";
    case Algo::PpoMc: return "ppo-mc";
    case Algo::Rudder: return "rudder";
  }
  return "?";
}

Algo algo_from_name(const std::string& name) {
  if (name == "ppo-td") return Algo::PpoTd;
  if (name == "ppo-mc") return Algo::PpoMc;
  if (name == "rudder") return Algo::Rudder;
  throw ConfigError("unknown algorithm '" + name + "'");
}

double LearningRateSchedule::a(long n) const {
  return a0 / std::pow(1.0 + static_cast<double>(n), p_a);
}

double LearningRateSchedule::b(long n) const {
  return b0 / std::pow(1.0 + static_cast<double>(n), p_b);
}

ScheduleDiagnosis validate_schedule(const LearningRateSchedule& sched) {
  ScheduleDiagnosis d;
  d.sum_a_diverges = sched.p_a <= 1.0;
  d.sum_b_diverges = sched.p_b <= 1.0;
  d.sq_sum_a_finite = 2.0 * sched.p_a > 1.0;
  d.sq_sum_b_finite = 2.0 * sched.p_b > 1.0;
  d.timescales_separated = sched.p_a > sched.p_b;
  d.non_increasing = sched.a0 >= 0.0 && sched.b0 >= 0.0 && sched.p_a >= 0.0 && sched.p_b >= 0.0;
  return d;
}

AlgoModel make_model(Algo algo, const Mdp& mdp, int hidden_width, Activation act) {
  AlgoModel m;
  m.algo = algo;
  if (algo == Algo::Rudder)
    m.rudder = make_rudder_model(mdp, hidden_width, act);
  else
    m.ppo = make_ppo_model(mdp, hidden_width, act);
  return m;
}

void init_model_params(const AlgoModel& model, std::uint64_t seed, double scale, Vec& theta,
                       Vec& omega) {
  Rng root(seed);
  Rng actor_rng = root.substream(1);
  Rng critic_rng = root.substream(2);
  if (model.algo == Algo::Rudder) {
    theta = model.rudder.actor_q.init_params(actor_rng, scale);
    omega = model.rudder.critic_g.init_params(critic_rng, scale);
  } else {
    theta = model.ppo.actor.net.init_params(actor_rng, scale);
    omega = model.ppo.critic.init_params(critic_rng, scale);
  }
}

std::vector<int> greedy_actions(const AlgoModel& model, const Mdp& mdp, const Vec& theta) {
  std::vector<int> actions(static_cast<std::size_t>(mdp.num_states()), 0);
  for (int s = 0; s < mdp.num_states(); ++s) {
    const Vec scores =
        model.algo == Algo::Rudder
            ? model.rudder.actor_q.forward(theta, one_hot(s, mdp.num_states()))
            : model.ppo.actor.logits(theta, s);
    int best = 0;
    for (int a = 1; a < mdp.num_actions(); ++a)
      if (scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(best)])
        best = a;
    actions[static_cast<std::size_t>(s)] = best;
  }
  return actions;
}

namespace {

struct SampledStep {
  Vec h;
  Vec f;
  double loss_h = 0.0;
  double loss_g = 0.0;
};

// Draws one episode from the given policy, preferring the inverse-transform
// map when the support is enumerable.
Trajectory draw_episode(const Mdp& mdp, const PolicyTable& pi, SamplerKind kind, Rng& rng) {
  if (kind != SamplerKind::Sequential) {
    try {
      const auto dist = build_ordered_distribution(mdp, pi);
      return inverse_transform_sample(dist, rng.uniform01());
    } catch (const EnumerationTooLarge&) {
      if (kind == SamplerKind::InverseTransform) throw;
    }
  }
  return simulate_trajectory(mdp, pi, rng);
}

}  // namespace

RunRecord train(const Mdp& mdp, const TrainConfig& cfg) {
  if (cfg.max_iters <= 0) throw ConfigError("train: max_iters must be positive");
  if (cfg.record_every <= 0) throw ConfigError("train: record_every must be positive");

  const AlgoModel model = make_model(cfg.algo, mdp, cfg.hidden_width, cfg.activation);
  Vec theta, omega;
  init_model_params(model, cfg.seed, cfg.init_scale, theta, omega);

  Rng root(cfg.seed);
  Rng sample_rng = root.substream(3);

  ControlState z = ControlState::initial(cfg.control.beta, cfg.control.z2_mode,
                                         cfg.control.alpha, cfg.control.z2_init, theta, omega);
  PpoSettings ppo_settings{cfg.control.kl_eps, cfg.control.weight_decay};

  RunRecord rec;
  rec.theta_final = theta;
  rec.omega_final = omega;

  int streak = 0;
  long last_recorded = -1;
  double ema_loss_h = 0.0, ema_loss_g = 0.0;
  bool ema_init = false;


  for (long n = 0; n < cfg.max_iters; ++n) {
    SampledStep step;
    PolicyTable pi;
    Trajectory tau_actor, tau_critic;

    if (cfg.algo == Algo::Rudder) {
      pi = rudder_sampling_policy(model.rudder, theta, z.z1_now);
      tau_actor = draw_episode(mdp, model.rudder.behavioral, cfg.sampler, sample_rng);
      tau_critic = draw_episode(mdp, pi, cfg.sampler, sample_rng);
      step.h = rudder_actor_grad_sampled(model.rudder, tau_actor, theta, omega, z.z2_now);
      step.f = rudder_critic_grad_sampled(model.rudder, tau_critic, omega, z.z2_now);
      step.loss_h =
          rudder_actor_loss_sampled(model.rudder, tau_actor, theta, omega, z.z2_now);
      step.loss_g = rudder_critic_loss_sampled(model.rudder, tau_critic, omega, z.z2_now);
    } else {
      const PpoTables tables = ppo_tables(model.ppo, mdp, theta, omega, z, ppo_settings);
      pi = tables.pi;
      tau_actor = draw_episode(mdp, pi, cfg.sampler, sample_rng);
      tau_critic = tau_actor;  // PPO shares the on-policy draw
      step.h = ppo_policy_grad_sampled(tables, tau_actor);
      step.f = cfg.algo == Algo::PpoTd ? td_critic_grad_sampled(tables, tau_actor)
                                       : mc_critic_grad_sampled(tables, tau_actor);
      step.loss_h = ppo_policy_loss_sampled(tables, tau_actor);
      step.loss_g = cfg.algo == Algo::PpoTd ? td_critic_loss_sampled(tables, tau_actor)
                                            : mc_critic_loss_sampled(tables, tau_actor);
    }

    if (!ema_init) {
      ema_loss_h = step.loss_h;
      ema_loss_g = step.loss_g;
      ema_init = true;
    } else {
      ema_loss_h = 0.99 * ema_loss_h + 0.01 * step.loss_h;
      ema_loss_g = 0.99 * ema_loss_g + 0.01 * step.loss_g;
    }

    const double an = cfg.schedule.a(n);
    const double bn = cfg.schedule.b(n);
    Vec theta_next = theta;
    axpy(-an, step.h, theta_next);
    clamp_norm(theta_next, cfg.param_clamp);
    Vec omega_next = omega;
    axpy(-bn, step.f, omega_next);
    clamp_norm(omega_next, cfg.param_clamp);
    if (!all_finite(theta_next) || !all_finite(omega_next))
      throw NonFiniteUpdate("train: parameters left the finite range at iteration " +
                            std::to_string(n));

    const double dtheta = norm2(sub(theta_next, theta));
    const double domega = norm2(sub(omega_next, omega));

    const bool record_now = n % cfg.record_every == 0;
    if (record_now || n == cfg.max_iters - 1) {
      RunRow row;
      row.n = n;
      row.z1 = z.z1_now;
      row.z2 = z.z2_now;
      row.dtheta = dtheta;
      row.domega = domega;
      bool exact_done = false;
      try {
        if (cfg.algo == Algo::Rudder) {
          const RudderExact exact =
              rudder_exact(model.rudder, mdp, theta, omega, z, cfg.exec);
          row.loss_h = exact.loss_h;
          row.loss_g = exact.loss_g;
          row.h_norm = norm2(exact.h);
          row.f_norm = norm2(exact.f);
          row.m1_sq = sq_norm(sub(step.h, exact.h));
          row.m2_sq = sq_norm(sub(step.f, exact.f));
          exact_done = true;
        } else {
          const PpoTables tables = ppo_tables(model.ppo, mdp, theta, omega, z, ppo_settings);
          const auto support = enumerate_trajectories(mdp, tables.pi);
          const PpoExact exact = ppo_exact(tables, support, cfg.exec);
          const Vec& f_exact = cfg.algo == Algo::PpoTd ? exact.f_td : exact.f_mc;
          row.loss_h = exact.loss_h;
          row.loss_g = cfg.algo == Algo::PpoTd ? exact.loss_td : exact.loss_mc;
          row.h_norm = norm2(exact.h);
          row.f_norm = norm2(f_exact);
          row.m1_sq = sq_norm(sub(step.h, exact.h));
          row.m2_sq = sq_norm(sub(step.f, f_exact));
          exact_done = true;
        }
      } catch (const EnumerationTooLarge&) {
        // Too large for exact tracking; report sampled moving averages.
      }
      if (!exact_done) {
        row.loss_h = ema_loss_h;
        row.loss_g = ema_loss_g;
        row.h_norm = norm2(step.h);
        row.f_norm = norm2(step.f);
        row.m1_sq = std::numeric_limits<double>::quiet_NaN();
        row.m2_sq = std::numeric_limits<double>::quiet_NaN();
      } else {
        rec.max_m1_sq = std::max(rec.max_m1_sq, row.m1_sq);
        rec.max_m2_sq = std::max(rec.max_m2_sq, row.m2_sq);
      }
      if (record_now || n != last_recorded) {
        rec.rows.push_back(row);
        last_recorded = n;
      }
    }

    // Stopping surrogate: rate-normalized parameter deltas small over a
    // full window. Zero rates never satisfy it.
    const double norm_a =
        an > 0.0 ? dtheta / an : std::numeric_limits<double>::infinity();
    const double norm_b =
        bn > 0.0 ? domega / bn : std::numeric_limits<double>::infinity();
    if (std::max(norm_a, norm_b) < cfg.stop_tol) {
      if (++streak >= cfg.stop_window) {
        z = step_control(z, theta, omega);
        theta = std::move(theta_next);
        omega = std::move(omega_next);
        rec.converged = true;
        rec.iterations = n + 1;
        break;
      }
    } else {
      streak = 0;
    }

    z = step_control(z, std::move(theta), std::move(omega));
    theta = std::move(theta_next);
    omega = std::move(omega_next);
    rec.iterations = n + 1;
  }

  rec.theta_final = theta;
  rec.omega_final = omega;
  rec.final_z1 = z.z1_now;
  rec.final_z2 = z.z2_now;
  rec.greedy_actions = greedy_actions(model, mdp, theta);
  return rec;
}

namespace {

// Exact critic gradient at the control limit (z1 = beta, z2 = 0) with the
// frozen-target slot refreshed to the current omega each evaluation.
Vec exact_critic_limit_gradient(const AlgoModel& model, const Mdp& mdp, const Vec& theta,
                                const Vec& omega, double beta, double kl_eps) {
  ControlState z;
  z.beta = beta;
  z.z1_now = z.z1_prev = beta;
  z.z2_now = z.z2_prev = 0.0;
  z.theta_prev = theta;
  z.omega_prev = omega;
  if (model.algo == Algo::Rudder) return rudder_exact(model.rudder, mdp, theta, omega, z).f;
  const PpoSettings settings{kl_eps, 0.0};
  const PpoExact exact = ppo_exact(model.ppo, mdp, theta, omega, z, settings);
  return model.algo == Algo::PpoTd ? exact.f_td : exact.f_mc;
}

Vec exact_actor_limit_gradient(const AlgoModel& model, const Mdp& mdp, const Vec& theta,
                               const Vec& omega, double beta, double kl_eps) {
  ControlState z;
  z.beta = beta;
  z.z1_now = z.z1_prev = beta;
  z.z2_now = z.z2_prev = 0.0;
  z.theta_prev = theta;
  z.omega_prev = omega;
  if (model.algo == Algo::Rudder) return rudder_exact(model.rudder, mdp, theta, omega, z).h;
  const PpoSettings settings{kl_eps, 0.0};
  return ppo_exact(model.ppo, mdp, theta, omega, z, settings).h;
}

}  // namespace

Vec relax_critic(const AlgoModel& model, const Mdp& mdp, const Vec& theta, Vec omega,
                 double beta, const OdeFlowConfig& cfg) {
  double step = cfg.inner_step;
  double prev_norm = std::numeric_limits<double>::infinity();
  for (long it = 0; it < cfg.inner_max_iters; ++it) {
    const Vec f = exact_critic_limit_gradient(model, mdp, theta, omega, beta, cfg.kl_eps);
    const double fn = norm2(f);
    if (!std::isfinite(fn) || fn > 1e8)
      throw InnerLoopDiverged("relax_critic: gradient norm left the finite range");
    if (fn < cfg.inner_tol) return omega;
    if (fn > prev_norm * (1.0 + 1e-9)) step = std::max(step * 0.5, 1e-6);
    prev_norm = fn;
    axpy(-step, f, omega);
  }
  throw InnerLoopDiverged("relax_critic: tolerance not reached within the iteration cap");
}

OdeFlowResult ode_limit_flow(const AlgoModel& model, const Mdp& mdp, Vec theta0, Vec omega0,
                             double beta, const OdeFlowConfig& cfg) {
  OdeFlowResult res;
  Vec theta = std::move(theta0);
  Vec omega = std::move(omega0);
  for (long k = 0; k < cfg.outer_steps; ++k) {
    omega = relax_critic(model, mdp, theta, std::move(omega), beta, cfg);
    res.path.emplace_back(theta, omega);
    const Vec h = exact_actor_limit_gradient(model, mdp, theta, omega, beta, cfg.kl_eps);
    axpy(-cfg.outer_step, h, theta);
  }
  omega = relax_critic(model, mdp, theta, std::move(omega), beta, cfg);
  res.path.emplace_back(theta, omega);
  res.theta_final = std::move(theta);
  res.omega_final = std::move(omega);
  return res;
}

}  // namespace tsac
