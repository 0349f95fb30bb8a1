#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tsac/generator.hpp"
#include "tsac/ppo.hpp"
#include "tsac/sampling.hpp"

using namespace tsac;

namespace {

// Fixture bundle: model, parameters, control state at a generic mid-run
// point (z1 above 1, distinct previous parameters).
struct Setup {
  Mdp mdp;
  PpoModel model;
  Vec theta;
  Vec omega;
  ControlState z;
  PpoSettings settings;
};

Setup make_setup(const Mdp& mdp, std::uint64_t seed, double z2, int hidden = 4) {
  Setup s{mdp, make_ppo_model(mdp, hidden), {}, {}, {}, {}};
  Rng rng(seed);
  s.theta = s.model.actor.net.init_params(rng, 0.4);
  s.omega = s.model.critic.init_params(rng, 0.4);
  Vec theta_prev = s.model.actor.net.init_params(rng, 0.4);
  Vec omega_prev = s.model.critic.init_params(rng, 0.4);
  s.z = ControlState::initial(5.0, Z2Mode::Geometric, 0.9, 1.0, theta_prev, omega_prev);
  s.z.z1_now = 2.0;
  s.z.z1_prev = 1.8;
  s.z.z2_now = z2;
  s.settings = PpoSettings{1e-3, 0.01};
  return s;
}

// Linear critic whose parameters reproduce a q-table exactly.
PpoModel exact_q_model(const Mdp& mdp, const QTable& q, Vec& omega_out) {
  PpoModel m = make_ppo_model(mdp, 4);
  m.critic = Network{{mdp.num_states(), mdp.num_actions()}, Activation::Tanh};
  const int S = mdp.num_states(), A = mdp.num_actions();
  omega_out.assign(static_cast<std::size_t>(m.critic.param_count()), 0.0);
  for (int a = 0; a < A; ++a)
    for (int s = 0; s < S; ++s)
      omega_out[static_cast<std::size_t>(a * S + s)] = q(s, a);
  return m;
}

}  // namespace

TEST_SUITE("ppo") {

TEST_CASE("policy loss without regularization is minus the certain return") {
  const Mdp mdp = testing::tiny_chain(2, 0.5, -0.25);
  Setup s = make_setup(mdp, 1, 0.0);
  // Saturate the policy toward action 0 via large logits.
  SoftmaxPolicy& actor = s.model.actor;
  actor.net = Network{{mdp.num_states(), mdp.num_actions()}, Activation::Tanh};
  s.theta.assign(static_cast<std::size_t>(actor.net.param_count()), 0.0);
  for (int st = 0; st < mdp.num_states(); ++st)
    s.theta[static_cast<std::size_t>(st)] = 60.0;  // logit of action 0 at state st
  s.z.theta_prev = s.theta;
  const double loss = ppo_policy_loss_exact(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  CHECK(loss == doctest::Approx(-1.5).epsilon(1e-9));
}

TEST_CASE("zero rewards with unchanged policy and no decay give zero loss") {
  const Mdp mdp = testing::tiny_chain(2, 0.0, 0.0);
  Setup s = make_setup(mdp, 2, 0.7);
  s.z.theta_prev = s.theta;  // trust region compares identical policies
  s.z.z1_prev = s.z.z1_now;
  s.settings.weight_decay = 0.0;
  CHECK(ppo_policy_loss_exact(s.model, mdp, s.theta, s.omega, s.z, s.settings) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact policy loss matches a Monte Carlo average at 3 sigma") {
  RandomMdpSpec spec;
  spec.horizon = 2;
  spec.fixed_start = false;
  const Mdp mdp = random_mdp(spec, 5);
  Setup s = make_setup(mdp, 6, 0.4);
  const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  const double exact = ppo_exact(t, enumerate_trajectories(mdp, t.pi)).loss_h;

  const auto dist = build_ordered_distribution(mdp, t.pi);
  const long n = 1000000;
  const Rng base(777);
  const Vec acc = kernels::accumulate(
      static_cast<std::size_t>(n), 2,
      [&](std::size_t i, std::span<double> out) {
        Rng rng = base.substream(i);
        const double v =
            ppo_policy_loss_sampled(t, inverse_transform_sample(dist, rng.uniform01()));
        out[0] += v;
        out[1] += v * v;
      },
      kernels::Exec::Parallel);
  const double mean = acc[0] / static_cast<double>(n);
  const double var = (acc[1] - static_cast<double>(n) * mean * mean) /
                     static_cast<double>(n - 1);
  const double band = 3.0 * std::sqrt(var / static_cast<double>(n));
  CHECK(std::abs(mean - exact) <= band);
}

TEST_CASE("constant critic removes the advantage term") {
  const Mdp mdp = testing::tiny_chain(1, 1.0, 0.0);
  Setup s = make_setup(mdp, 7, 0.0);
  // Constant critic: zero weights, equal biases.
  s.model.critic = Network{{mdp.num_states(), mdp.num_actions()}, Activation::Tanh};
  s.omega.assign(static_cast<std::size_t>(s.model.critic.param_count()), 0.0);
  const int S = mdp.num_states(), A = mdp.num_actions();
  for (int a = 0; a < A; ++a) s.omega[static_cast<std::size_t>(A * S + a)] = 3.7;
  s.z.omega_prev = s.omega;
  const Vec h = ppo_policy_grad_exact(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  CHECK(norm2(h) < 1e-12);  // z2 = 0: nothing else contributes
}

TEST_CASE("with the exact q critic the gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomMdpSpec spec;
    spec.horizon = 2;
    spec.fixed_start = seed % 2 == 0;
    const Mdp mdp = random_mdp(spec, 300 + seed);
    Setup s = make_setup(mdp, 400 + seed, 0.0);
    // policy-gradient theorem with baseline: substitute the exact q of the
    // current policy for the critic.
    const PolicyTable pi = s.model.actor.tabulate(s.theta, s.z.z1_now);
    Vec omega_exact;
    const PpoModel model = exact_q_model(mdp, exact_q_values(mdp, pi), omega_exact);
    Setup se = s;
    se.model = model;
    se.omega = omega_exact;
    se.z.omega_prev = omega_exact;
    const Vec h =
        ppo_policy_grad_exact(se.model, mdp, se.theta, se.omega, se.z, se.settings);
    const auto loss = [&](const Vec& q) {
      return ppo_policy_loss_exact(se.model, mdp, q, se.omega, se.z, se.settings);
    };
    const Vec fd = finite_diff_gradient(loss, se.theta, 1e-5);
    CHECK(relative_deviation(h, fd) < 1e-4);
  }
}

TEST_CASE("policy gradient with trust region matches finite differences") {
  // Full criterion-3 style check: z2 > 0, exact-q critic, smoothed-KL rho.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomMdpSpec spec;
    spec.horizon = 2;
    spec.max_states_per_layer = 2;
    spec.fixed_start = seed % 2 == 1;
    const Mdp mdp = random_mdp(spec, 500 + seed);
    Setup s = make_setup(mdp, 600 + seed, 0.35);
    const PolicyTable pi = s.model.actor.tabulate(s.theta, s.z.z1_now);
    Vec omega_exact;
    const PpoModel model = exact_q_model(mdp, exact_q_values(mdp, pi), omega_exact);
    Setup se = s;
    se.model = model;
    se.omega = omega_exact;
    se.z.omega_prev = omega_exact;
    const Vec h =
        ppo_policy_grad_exact(se.model, mdp, se.theta, se.omega, se.z, se.settings);
    const auto loss = [&](const Vec& q) {
      return ppo_policy_loss_exact(se.model, mdp, q, se.omega, se.z, se.settings);
    };
    CHECK(relative_deviation(h, finite_diff_gradient(loss, se.theta, 1e-5)) < 1e-4);
  }
}

TEST_CASE("single-action episodes carry no score component") {
  const Mdp mdp = testing::single_action_chain(2, 0.5);
  Setup s = make_setup(mdp, 8, 0.0);
  const Vec h = ppo_policy_grad_exact(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  CHECK(norm2(h) < 1e-14);
}

TEST_CASE("expectation of the sampled gradient is the exact gradient") {
  RandomMdpSpec spec;
  spec.horizon = 2;
  const Mdp mdp = random_mdp(spec, 9);
  Setup s = make_setup(mdp, 10, 0.5);
  const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  const auto support = enumerate_trajectories(mdp, t.pi);
  const PpoExact exact = ppo_exact(t, support);
  Vec mean_h(s.theta.size(), 0.0), mean_td(s.omega.size(), 0.0), mean_mc(s.omega.size(), 0.0);
  for (const auto& wt : support) {
    ppo_policy_grad_sampled_acc(t, wt.trajectory, wt.prob, mean_h);
    td_critic_grad_sampled_acc(t, wt.trajectory, wt.prob, mean_td);
    mc_critic_grad_sampled_acc(t, wt.trajectory, wt.prob, mean_mc);
  }
  CHECK(relative_deviation(mean_h, exact.h) < 1e-12);
  CHECK(relative_deviation(mean_td, exact.f_td) < 1e-12);
  CHECK(relative_deviation(mean_mc, exact.f_mc) < 1e-12);
}

TEST_CASE("deterministic episodes make sampled and exact gradients coincide") {
  const Mdp mdp = testing::tiny_chain(2, 0.3, -0.3);
  Setup s = make_setup(mdp, 11, 0.2);
  // Near-deterministic policy via a huge slope.
  s.z.z1_now = 400.0;
  s.z.z1_prev = 400.0;
  const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  const auto support = enumerate_trajectories(mdp, t.pi);
  const PpoExact exact = ppo_exact(t, support);
  // The dominant trajectory carries essentially all probability.
  std::size_t top = 0;
  for (std::size_t i = 1; i < support.size(); ++i)
    if (support[i].prob > support[top].prob) top = i;
  REQUIRE(support[top].prob > 1.0 - 1e-9);
  const Vec h_hat = ppo_policy_grad_sampled(t, support[top].trajectory);
  CHECK(relative_deviation(h_hat, exact.h) < 1e-6);
}

TEST_CASE("bellman-consistent critic zeroes the td error on a deterministic chain") {
  const Mdp mdp = testing::tiny_chain(2, 0.5, -0.5);
  const PolicyTable pi = PolicyTable::deterministic(mdp.num_states(), mdp.num_actions(),
                                                    {0, 0, 0});
  const QTable q = exact_q_values(mdp, pi);
  Vec omega;
  const PpoModel model = exact_q_model(mdp, q, omega);
  Setup s = make_setup(mdp, 12, 0.0);
  ControlState z = s.z;
  z.omega_prev = omega;  // omega_n = omega_{n-1}
  const PpoTables t = ppo_tables(model, mdp, s.theta, omega, z, s.settings);
  Trajectory tau;
  tau.steps = {{0, 0, 0.5}, {1, 0, 0.5}, {2, 0, 0.5}};
  CHECK(td_critic_loss_sampled(t, tau) == doctest::Approx(0.0).epsilon(1e-18));
  CHECK(norm2(td_critic_grad_sampled(t, tau)) < 1e-12);
}

TEST_CASE("zero-reward episodes with a zero critic have zero td loss") {
  const Mdp mdp = testing::tiny_chain(2, 0.0, 0.0);
  Setup s = make_setup(mdp, 13, 0.0);
  s.omega.assign(s.omega.size(), 0.0);
  s.z.omega_prev.assign(s.z.omega_prev.size(), 0.0);
  const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  Trajectory tau;
  tau.steps = {{0, 1, 0.0}, {1, 0, 0.0}, {2, 1, 0.0}};
  CHECK(td_critic_loss_sampled(t, tau) == doctest::Approx(0.0));
}

TEST_CASE("td gradient matches finite differences with a frozen target") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomMdpSpec spec;
    spec.horizon = 2;
    const Mdp mdp = random_mdp(spec, 700 + seed);
    Setup s = make_setup(mdp, 800 + seed, 0.3);
    const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
    const auto dist = build_ordered_distribution(mdp, t.pi);
    Rng rng(900 + seed);
    const Trajectory tau = inverse_transform_sample(dist, rng.uniform01());
    const Vec analytic = td_critic_grad_sampled(t, tau);
    const auto loss = [&](const Vec& w) {
      // omega_prev stays frozen inside z.
      const PpoTables probe = ppo_tables(s.model, mdp, s.theta, w, s.z, s.settings);
      return td_critic_loss_sampled(probe, tau);
    };
    const Vec fd = finite_diff_gradient(loss, s.omega, 1e-5);
    CHECK(relative_deviation(analytic, fd) < 1e-5);
  }
}

TEST_CASE("mc critic equal to realized returns has zero gradient") {
  const Mdp mdp = testing::tiny_chain(2, 0.5, -0.5);
  const PolicyTable det = PolicyTable::deterministic(mdp.num_states(), mdp.num_actions(),
                                                     {0, 0, 0});
  const QTable q = exact_q_values(mdp, det);
  Vec omega;
  const PpoModel model = exact_q_model(mdp, q, omega);
  Setup s = make_setup(mdp, 14, 0.0);
  s.z.omega_prev = omega;
  const PpoTables t = ppo_tables(model, mdp, s.theta, omega, s.z, s.settings);
  Trajectory tau;
  tau.steps = {{0, 0, 0.5}, {1, 0, 0.5}, {2, 0, 0.5}};
  CHECK(norm2(mc_critic_grad_sampled(t, tau)) < 1e-12);
}

TEST_CASE("constant critic on a zero-reward episode expands the square") {
  const Mdp mdp = testing::tiny_chain(2, 0.0, 0.0);
  Setup s = make_setup(mdp, 15, 0.0);
  s.model.critic = Network{{mdp.num_states(), mdp.num_actions()}, Activation::Tanh};
  const int S = mdp.num_states(), A = mdp.num_actions();
  const double c = 1.3;
  s.omega.assign(static_cast<std::size_t>(s.model.critic.param_count()), 0.0);
  for (int a = 0; a < A; ++a) s.omega[static_cast<std::size_t>(A * S + a)] = c;
  s.z.omega_prev = s.omega;
  const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  Trajectory tau;
  tau.steps = {{0, 0, 0.0}, {1, 1, 0.0}, {2, 0, 0.0}};
  const Vec grad = mc_critic_grad_sampled(t, tau);
  // f_mc = -sum_t (0 - c) grad q = c sum_t grad q(s_t, a_t).
  Vec expected(s.omega.size(), 0.0);
  for (const Step& step : tau.steps)
    axpy(c, t.q_grad_at(step.state, step.action), expected);
  CHECK(relative_deviation(grad, expected) < 1e-12);
}

TEST_CASE("mc gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomMdpSpec spec;
    spec.horizon = 2;
    const Mdp mdp = random_mdp(spec, 1000 + seed);
    Setup s = make_setup(mdp, 1100 + seed, 0.3);
    const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
    const auto dist = build_ordered_distribution(mdp, t.pi);
    Rng rng(1200 + seed);
    const Trajectory tau = inverse_transform_sample(dist, rng.uniform01());
    const Vec analytic = mc_critic_grad_sampled(t, tau);
    const auto loss = [&](const Vec& w) {
      const PpoTables probe = ppo_tables(s.model, mdp, s.theta, w, s.z, s.settings);
      return mc_critic_loss_sampled(probe, tau);
    };
    CHECK(relative_deviation(analytic, finite_diff_gradient(loss, s.omega, 1e-5)) < 1e-5);
  }
}

TEST_CASE("baseline invariance of the exact score expectation") {
  RandomMdpSpec spec;
  spec.horizon = 3;
  spec.fixed_start = false;
  const Mdp mdp = random_mdp(spec, 16);
  Setup s = make_setup(mdp, 17, 0.0);
  const PpoTables t = ppo_tables(s.model, mdp, s.theta, s.omega, s.z, s.settings);
  const auto support = enumerate_trajectories(mdp, t.pi);
  const int S = mdp.num_states(), A = mdp.num_actions();
  std::vector<Vec> adv(static_cast<std::size_t>(S), Vec(static_cast<std::size_t>(A), 0.0));
  std::vector<Vec> shifted = adv;
  Rng rng(18);
  for (int st = 0; st < S; ++st) {
    const double c = rng.uniform(-2.0, 2.0);  // state-only offset
    for (int a = 0; a < A; ++a) {
      const double v = t.advantage(st, a);
      adv[static_cast<std::size_t>(st)][static_cast<std::size_t>(a)] = v;
      shifted[static_cast<std::size_t>(st)][static_cast<std::size_t>(a)] = v + c;
    }
  }
  const Vec base = exact_score_expectation(t, support, adv);
  const Vec moved = exact_score_expectation(t, support, shifted);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(base[i] - moved[i]) < 1e-10);
}

}  // TEST_SUITE
