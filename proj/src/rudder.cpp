#include "tsac/rudder.hpp"

namespace tsac {

RudderModel make_rudder_model(const Mdp& mdp, int hidden_width, Activation act) {
  RudderModel m;
  m.num_states = mdp.num_states();
  m.num_actions = mdp.num_actions();
  m.horizon = mdp.horizon();
  m.actor_q = Network{{mdp.num_states(), hidden_width, mdp.num_actions()}, act};
  m.critic_g = Network{{m.encoding_dim(), hidden_width, 1}, act};
  m.behavioral = PolicyTable::uniform(mdp.num_states(), mdp.num_actions());
  return m;
}

Vec encode_prefix(const RudderModel& model, const Trajectory& tau, int prefix_len) {
  if (prefix_len < 0 || prefix_len > tau.length())
    throw IndexOutOfRange("encode_prefix: bad prefix length");
  const int stride = model.num_states + model.num_actions;
  Vec enc(static_cast<std::size_t>(model.encoding_dim()), 0.0);
  for (int k = 0; k < prefix_len; ++k) {
    const Step& step = tau.steps[static_cast<std::size_t>(k)];
    enc[static_cast<std::size_t>(k * stride + step.state)] = 1.0;
    enc[static_cast<std::size_t>(k * stride + model.num_states + step.action)] = 1.0;
  }
  return enc;
}

RedistributedRewards redistribute(const RudderModel& model, const Trajectory& tau,
                                  const Vec& omega) {
  const int n = tau.length();
  RedistributedRewards out;
  out.realized_return = total_return(tau);
  out.rewards.resize(static_cast<std::size_t>(n));
  double prev = 0.0;
  double sum = 0.0;
  for (int t = 0; t < n; ++t) {
    const double g = model.critic_g.forward(omega, encode_prefix(model, tau, t + 1))[0];
    out.rewards[static_cast<std::size_t>(t)] = g - prev;
    sum += g - prev;
    prev = g;
  }
  const double correction = (out.realized_return - sum) / n;
  for (double& r : out.rewards) r += correction;
  return out;
}

PolicyTable rudder_sampling_policy(const RudderModel& model, const Vec& theta, double slope) {
  PolicyTable table;
  table.probs.resize(static_cast<std::size_t>(model.num_states));
  for (int s = 0; s < model.num_states; ++s) {
    const Vec q = model.actor_q.forward(theta, one_hot(s, model.num_states));
    table.probs[static_cast<std::size_t>(s)] = softmax_with_slope(q, slope);
  }
  return table;
}

double rudder_actor_loss_sampled(const RudderModel& model, const Trajectory& tau,
                                 const Vec& theta, const Vec& omega, double z2) {
  const RedistributedRewards red = redistribute(model, tau, omega);
  double loss = 0.5 * z2 * sq_norm(theta);
  for (int t = 0; t < tau.length(); ++t) {
    const Step& step = tau.steps[static_cast<std::size_t>(t)];
    const Vec q = model.actor_q.forward(theta, one_hot(step.state, model.num_states));
    const double d = red.rewards[static_cast<std::size_t>(t)] -
                     q[static_cast<std::size_t>(step.action)];
    loss += 0.5 * d * d;
  }
  return loss;
}

void rudder_actor_grad_sampled_acc(const RudderModel& model, const Trajectory& tau,
                                   const Vec& theta, const Vec& omega, double z2,
                                   double scale, std::span<double> acc) {
  // Redistributed rewards are targets: constants w.r.t. theta.
  const RedistributedRewards red = redistribute(model, tau, omega);
  axpy(scale * z2, theta, acc);
  for (int t = 0; t < tau.length(); ++t) {
    const Step& step = tau.steps[static_cast<std::size_t>(t)];
    const Vec input = one_hot(step.state, model.num_states);
    const Vec q = model.actor_q.forward(theta, input);
    const double d = red.rewards[static_cast<std::size_t>(t)] -
                     q[static_cast<std::size_t>(step.action)];
    model.actor_q.backward_acc(theta, input, one_hot(step.action, model.num_actions),
                               -scale * d, acc);
  }
}

double rudder_critic_loss_sampled(const RudderModel& model, const Trajectory& tau,
                                  const Vec& omega, double z2) {
  const double g =
      model.critic_g.forward(omega, encode_prefix(model, tau, tau.length()))[0];
  const double d = total_return(tau) - g;
  return 0.5 * d * d + 0.5 * z2 * sq_norm(omega);
}

void rudder_critic_grad_sampled_acc(const RudderModel& model, const Trajectory& tau,
                                    const Vec& omega, double z2, double scale,
                                    std::span<double> acc) {
  const Vec enc = encode_prefix(model, tau, tau.length());
  const double g = model.critic_g.forward(omega, enc)[0];
  const double d = total_return(tau) - g;
  model.critic_g.backward_acc(omega, enc, Vec{1.0}, -scale * d, acc);
  axpy(scale * z2, omega, acc);
}

Vec rudder_critic_grad_sampled(const RudderModel& model, const Trajectory& tau,
                               const Vec& omega, double z2) {
  Vec grad(omega.size(), 0.0);
  rudder_critic_grad_sampled_acc(model, tau, omega, z2, 1.0, grad);
  return grad;
}

Vec rudder_actor_grad_sampled(const RudderModel& model, const Trajectory& tau,
                              const Vec& theta, const Vec& omega, double z2) {
  Vec grad(theta.size(), 0.0);
  rudder_actor_grad_sampled_acc(model, tau, theta, omega, z2, 1.0, grad);
  return grad;
}

RudderExact rudder_exact(const RudderModel& model, const Mdp& mdp, const Vec& theta,
                         const Vec& omega, const ControlState& z, kernels::Exec exec) {
  const std::size_t m = theta.size();
  const std::size_t k = omega.size();
  RudderExact res;

  // Actor loss/gradient: expectation over the behavioral policy.
  const auto support_h = enumerate_trajectories(mdp, model.behavioral);
  const Vec acc_h = kernels::accumulate(
      support_h.size(), m + 1,
      [&](std::size_t i, std::span<double> out) {
        const WeightedTrajectory& wt = support_h[i];
        rudder_actor_grad_sampled_acc(model, wt.trajectory, theta, omega, z.z2_now, wt.prob,
                                      out.subspan(0, m));
        out[m] += wt.prob *
                  rudder_actor_loss_sampled(model, wt.trajectory, theta, omega, z.z2_now);
      },
      exec);
  res.h.assign(acc_h.begin(), acc_h.begin() + static_cast<std::ptrdiff_t>(m));
  res.loss_h = acc_h[m];

  // Critic loss/gradient: expectation over the current sampling policy.
  const PolicyTable pi = rudder_sampling_policy(model, theta, z.z1_now);
  const auto support_g = enumerate_trajectories(mdp, pi);
  const Vec acc_g = kernels::accumulate(
      support_g.size(), k + 1,
      [&](std::size_t i, std::span<double> out) {
        const WeightedTrajectory& wt = support_g[i];
        rudder_critic_grad_sampled_acc(model, wt.trajectory, omega, z.z2_now, wt.prob,
                                       out.subspan(0, k));
        out[k] += wt.prob *
                  rudder_critic_loss_sampled(model, wt.trajectory, omega, z.z2_now);
      },
      exec);
  res.f.assign(acc_g.begin(), acc_g.begin() + static_cast<std::ptrdiff_t>(k));
  res.loss_g = acc_g[k];
  return res;
}

}  // namespace tsac
