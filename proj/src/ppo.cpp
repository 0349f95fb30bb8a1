#include "tsac/ppo.hpp"

#include <cmath>

namespace tsac {

PpoModel make_ppo_model(const Mdp& mdp, int hidden_width, Activation act) {
  PpoModel m;
  m.num_actions = mdp.num_actions();
  m.actor.num_states = mdp.num_states();
  m.actor.net = Network{{mdp.num_states(), hidden_width, mdp.num_actions()}, act};
  m.critic = Network{{mdp.num_states(), hidden_width, mdp.num_actions()}, act};
  return m;
}

double PpoTables::rho(const Trajectory& tau) const {
  double r = wd_term;
  for (const Step& step : tau.steps) r += kl_term[static_cast<std::size_t>(step.state)];
  return r;
}

PpoTables ppo_tables(const PpoModel& model, const Mdp& mdp, const Vec& theta,
                     const Vec& omega, const ControlState& z, const PpoSettings& settings) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  PpoTables t;
  t.num_actions = A;
  t.z2 = z.z2_now;
  t.score_start = mdp.score_start();
  t.dim_theta = theta.size();
  t.dim_omega = omega.size();
  t.pi = model.actor.tabulate(theta, z.z1_now);
  t.score.resize(static_cast<std::size_t>(S * A));
  t.q_grad.resize(static_cast<std::size_t>(S * A));
  t.q_now.resize(static_cast<std::size_t>(S));
  t.q_prev.resize(static_cast<std::size_t>(S));
  t.v_now.assign(static_cast<std::size_t>(S), 0.0);
  t.kl_term.assign(static_cast<std::size_t>(S), 0.0);
  t.kl_grad.resize(static_cast<std::size_t>(S));

  for (int s = 0; s < S; ++s) {
    const Vec input = one_hot(s, S);
    t.q_now[static_cast<std::size_t>(s)] = model.critic.forward(omega, input);
    t.q_prev[static_cast<std::size_t>(s)] = model.critic.forward(z.omega_prev, input);
    t.v_now[static_cast<std::size_t>(s)] =
        dot(t.pi.row(s), t.q_now[static_cast<std::size_t>(s)]);
    for (int a = 0; a < A; ++a) {
      t.score[static_cast<std::size_t>(s * A + a)] =
          model.actor.log_policy_gradient(theta, z.z1_now, s, a);
      t.q_grad[static_cast<std::size_t>(s * A + a)] =
          model.critic.backward(omega, input, one_hot(a, A));
    }
    // Trust region: old policy reconstructed from (theta_{n-1}, z1_{n-1}).
    const Vec p_old = model.actor.action_distribution(z.theta_prev, z.z1_prev, s);
    const Vec q_new = t.pi.row(s);
    t.kl_term[static_cast<std::size_t>(s)] = kl_smoothed(p_old, q_new, settings.kl_eps);
    const Vec dq = kl_smoothed_grad_q(p_old, q_new, settings.kl_eps);
    double mix = 0.0;
    for (std::size_t j = 0; j < q_new.size(); ++j) mix += dq[j] * q_new[j];
    Vec cot(q_new.size());
    for (std::size_t i = 0; i < q_new.size(); ++i)
      cot[i] = z.z1_now * q_new[i] * (dq[i] - mix);
    t.kl_grad[static_cast<std::size_t>(s)] =
        model.actor.net.backward(theta, input, cot);
  }
  t.wd_term = settings.weight_decay * sq_norm(theta);
  t.wd_grad.assign(theta.size(), 0.0);
  axpy(2.0 * settings.weight_decay, theta, t.wd_grad);
  return t;
}

double ppo_policy_loss_sampled(const PpoTables& t, const Trajectory& tau) {
  return -total_return(tau) + t.z2 * t.rho(tau);
}

void ppo_policy_grad_sampled_acc(const PpoTables& t, const Trajectory& tau, double scale,
                                 std::span<double> acc) {
  const double rho = t.rho(tau);
  const int horizon = tau.length() - 1;
  for (int k = t.score_start; k <= horizon; ++k) {
    const Step& step = tau.steps[static_cast<std::size_t>(k)];
    const double coeff = -t.advantage(step.state, step.action) + t.z2 * rho;
    axpy(scale * coeff, t.score_at(step.state, step.action), acc);
  }
  for (const Step& step : tau.steps)
    axpy(scale * t.z2, t.kl_grad[static_cast<std::size_t>(step.state)], acc);
  axpy(scale * t.z2, t.wd_grad, acc);
}

Vec ppo_policy_grad_sampled(const PpoTables& t, const Trajectory& tau) {
  Vec grad(t.dim_theta, 0.0);
  ppo_policy_grad_sampled_acc(t, tau, 1.0, grad);
  return grad;
}

namespace {

// One-step TD errors along tau with the frozen previous critic as target;
// the bootstrap past the horizon is zero.
inline double td_error(const PpoTables& t, const Trajectory& tau, int k) {
  const Step& step = tau.steps[static_cast<std::size_t>(k)];
  double target = step.reward;
  if (k + 1 < tau.length()) {
    const Step& next = tau.steps[static_cast<std::size_t>(k) + 1];
    target += t.q_prev[static_cast<std::size_t>(next.state)][static_cast<std::size_t>(next.action)];
  }
  return target - t.q_at(step.state, step.action);
}

}  // namespace

double td_critic_loss_sampled(const PpoTables& t, const Trajectory& tau) {
  double loss = 0.0;
  for (int k = 0; k < tau.length(); ++k) {
    const double d = td_error(t, tau, k);
    loss += 0.5 * d * d;
  }
  return loss;
}

void td_critic_grad_sampled_acc(const PpoTables& t, const Trajectory& tau, double scale,
                                std::span<double> acc) {
  for (int k = 0; k < tau.length(); ++k) {
    const Step& step = tau.steps[static_cast<std::size_t>(k)];
    axpy(-scale * td_error(t, tau, k), t.q_grad_at(step.state, step.action), acc);
  }
}

Vec td_critic_grad_sampled(const PpoTables& t, const Trajectory& tau) {
  Vec grad(t.dim_omega, 0.0);
  td_critic_grad_sampled_acc(t, tau, 1.0, grad);
  return grad;
}

double mc_critic_loss_sampled(const PpoTables& t, const Trajectory& tau) {
  double loss = 0.0;
  double togo = 0.0;
  for (int k = tau.length() - 1; k >= 0; --k) {
    const Step& step = tau.steps[static_cast<std::size_t>(k)];
    togo += step.reward;
    const double d = togo - t.q_at(step.state, step.action);
    loss += 0.5 * d * d;
  }
  return loss;
}

void mc_critic_grad_sampled_acc(const PpoTables& t, const Trajectory& tau, double scale,
                                std::span<double> acc) {
  double togo = 0.0;
  for (int k = tau.length() - 1; k >= 0; --k) {
    const Step& step = tau.steps[static_cast<std::size_t>(k)];
    togo += step.reward;
    const double d = togo - t.q_at(step.state, step.action);
    axpy(-scale * d, t.q_grad_at(step.state, step.action), acc);
  }
}

Vec mc_critic_grad_sampled(const PpoTables& t, const Trajectory& tau) {
  Vec grad(t.dim_omega, 0.0);
  mc_critic_grad_sampled_acc(t, tau, 1.0, grad);
  return grad;
}

PpoExact ppo_exact(const PpoTables& t, const std::vector<WeightedTrajectory>& support,
                   kernels::Exec exec) {
  const std::size_t m = t.dim_theta;
  const std::size_t k = t.dim_omega;
  const std::size_t dim = m + 2 * k + 3;
  const Vec acc = kernels::accumulate(
      support.size(), dim,
      [&](std::size_t i, std::span<double> out) {
        const WeightedTrajectory& wt = support[i];
        const double w = wt.prob;
        ppo_policy_grad_sampled_acc(t, wt.trajectory, w, out.subspan(0, m));
        td_critic_grad_sampled_acc(t, wt.trajectory, w, out.subspan(m, k));
        mc_critic_grad_sampled_acc(t, wt.trajectory, w, out.subspan(m + k, k));
        out[dim - 3] += w * ppo_policy_loss_sampled(t, wt.trajectory);
        out[dim - 2] += w * td_critic_loss_sampled(t, wt.trajectory);
        out[dim - 1] += w * mc_critic_loss_sampled(t, wt.trajectory);
      },
      exec);
  PpoExact res;
  res.h.assign(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(m));
  res.f_td.assign(acc.begin() + static_cast<std::ptrdiff_t>(m),
                  acc.begin() + static_cast<std::ptrdiff_t>(m + k));
  res.f_mc.assign(acc.begin() + static_cast<std::ptrdiff_t>(m + k),
                  acc.begin() + static_cast<std::ptrdiff_t>(m + 2 * k));
  res.loss_h = acc[dim - 3];
  res.loss_td = acc[dim - 2];
  res.loss_mc = acc[dim - 1];
  return res;
}

PpoExact ppo_exact(const PpoModel& model, const Mdp& mdp, const Vec& theta, const Vec& omega,
                   const ControlState& z, const PpoSettings& settings, kernels::Exec exec) {
  const PpoTables t = ppo_tables(model, mdp, theta, omega, z, settings);
  const auto support = enumerate_trajectories(mdp, t.pi);
  return ppo_exact(t, support, exec);
}

double ppo_policy_loss_exact(const PpoModel& model, const Mdp& mdp, const Vec& theta,
                             const Vec& omega, const ControlState& z,
                             const PpoSettings& settings) {
  return ppo_exact(model, mdp, theta, omega, z, settings).loss_h;
}

Vec ppo_policy_grad_exact(const PpoModel& model, const Mdp& mdp, const Vec& theta,
                          const Vec& omega, const ControlState& z,
                          const PpoSettings& settings) {
  return ppo_exact(model, mdp, theta, omega, z, settings).h;
}

Vec exact_score_expectation(const PpoTables& t, const std::vector<WeightedTrajectory>& support,
                            const std::vector<Vec>& weight_table) {
  Vec acc(t.dim_theta, 0.0);
  for (const WeightedTrajectory& wt : support) {
    const int horizon = wt.trajectory.length() - 1;
    for (int k = t.score_start; k <= horizon; ++k) {
      const Step& step = wt.trajectory.steps[static_cast<std::size_t>(k)];
      const double weight =
          weight_table[static_cast<std::size_t>(step.state)][static_cast<std::size_t>(step.action)];
      axpy(wt.prob * weight, t.score_at(step.state, step.action), acc);
    }
  }
  return acc;
}

}  // namespace tsac
