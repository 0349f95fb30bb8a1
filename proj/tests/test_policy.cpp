#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "tsac/control.hpp"
#include "tsac/network.hpp"
#include "tsac/policy.hpp"

using namespace tsac;

namespace {

SoftmaxPolicy table_policy(int num_states, int num_actions) {
  // Affine net over one-hot states: each column of W is a free logit table.
  SoftmaxPolicy pol;
  pol.num_states = num_states;
  pol.net = Network{{num_states, num_actions}, Activation::Tanh};
  return pol;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("flat scores give the uniform distribution at any slope") {
  const Vec logits = {0.0, 0.0};
  for (double slope : {1.0, 3.0, 50.0}) {
    const Vec p = softmax_with_slope(logits, slope);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("slope ln 3 with unit gap gives 3:1 odds") {
  const Vec gap = {1.0, 0.0};
  const Vec p = softmax_with_slope(gap, std::log(3.0));
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax is invariant under constant logit shifts") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    Vec logits(4);
    for (double& x : logits) x = rng.uniform(-2.0, 2.0);
    const double slope = rng.uniform(1.0, 10.0);
    const Vec base = softmax_with_slope(logits, slope);
    const double c = rng.uniform(-5.0, 5.0);
    Vec shifted = logits;
    for (double& x : shifted) x += c;
    const Vec moved = softmax_with_slope(shifted, slope);
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK(base[i] == doctest::Approx(moved[i]).epsilon(1e-10));
  }
}

TEST_CASE("slope never flips the action ranking") {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    Vec logits(3);
    for (double& x : logits) x = rng.uniform(-1.0, 1.0);
    const auto arg_logits =
        std::max_element(logits.begin(), logits.end()) - logits.begin();
    const Vec p = softmax_with_slope(logits, rng.uniform(1.0, 200.0));
    const auto arg_p = std::max_element(p.begin(), p.end()) - p.begin();
    CHECK(arg_logits == arg_p);
  }
}

TEST_CASE("score expectation under the policy is zero") {
  const SoftmaxPolicy pol = table_policy(2, 3);
  Rng rng(17);
  const Vec theta = pol.net.init_params(rng, 0.7);
  for (int s = 0; s < 2; ++s) {
    const Vec probs = pol.action_distribution(theta, 2.5, s);
    Vec mean(theta.size(), 0.0);
    for (int a = 0; a < 3; ++a)
      axpy(probs[static_cast<std::size_t>(a)], pol.log_policy_gradient(theta, 2.5, s, a),
           mean);
    CHECK(norm2(mean) < 1e-12);
  }
}

TEST_CASE("single-action policy has a zero score") {
  const SoftmaxPolicy pol = table_policy(2, 1);
  Rng rng(21);
  const Vec theta = pol.net.init_params(rng);
  CHECK(norm2(pol.log_policy_gradient(theta, 4.0, 1, 0)) == 0.0);
}

TEST_CASE("log policy gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SoftmaxPolicy pol;
    pol.num_states = 3;
    pol.net = Network{{3, 5, 2}, Activation::Tanh};
    Rng rng(40 + seed);
    const Vec theta = pol.net.init_params(rng, 0.6);
    const int s = static_cast<int>(seed % 3);
    const int a = static_cast<int>(seed % 2);
    const double slope = 1.0 + static_cast<double>(seed % 4);
    const Vec analytic = pol.log_policy_gradient(theta, slope, s, a);
    const auto loss = [&](const Vec& q) {
      return std::log(pol.action_distribution(q, slope, s)[static_cast<std::size_t>(a)]);
    };
    const Vec numeric = finite_diff_gradient(loss, theta, 1e-5);
    CHECK(relative_deviation(analytic, numeric) < 1e-5);
  }
}

TEST_CASE("smoothed kl of identical distributions is zero") {
  const Vec p = {0.2, 0.5, 0.3};
  CHECK(kl_smoothed(p, p, 1e-3) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("smoothed kl worked example") {
  // p = (1,0), q = (0,1), eps = 1: tilde p = (2/3, 1/3), tilde q reversed,
  // KL = (1/3) ln 2.
  const Vec p = {1.0, 0.0};
  const Vec q = {0.0, 1.0};
  CHECK(kl_smoothed(p, q, 1.0) == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("smoothed kl is definite and below the direct-sum oracle") {
  Rng rng(55);
  for (int rep = 0; rep < 100; ++rep) {
    Vec p(3), q(3);
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < 3; ++i) {
      p[static_cast<std::size_t>(i)] = 0.05 + rng.uniform01();
      q[static_cast<std::size_t>(i)] = 0.05 + rng.uniform01();
      sp += p[static_cast<std::size_t>(i)];
      sq += q[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < 3; ++i) {
      p[static_cast<std::size_t>(i)] /= sp;
      q[static_cast<std::size_t>(i)] /= sq;
    }
    const double eps = 1e-3;
    const double smoothed = kl_smoothed(p, q, eps);
    CHECK(smoothed >= 0.0);
    // Direct summation of the unsmoothed divergence (all entries positive).
    double direct = 0.0;
    for (int i = 0; i < 3; ++i)
      direct += p[static_cast<std::size_t>(i)] *
                std::log(p[static_cast<std::size_t>(i)] / q[static_cast<std::size_t>(i)]);
    CHECK(smoothed <= direct + 1e-9);
    // Definiteness: distinct inputs give strictly positive divergence.
    if (relative_deviation(p, q) > 1e-3) CHECK(smoothed > 0.0);
  }
  const Vec half = {0.5, 0.5};
  const Vec lone = {1.0};
  CHECK_THROWS_AS(kl_smoothed(half, lone, 1e-3), DimensionMismatch);
}

TEST_CASE("trust region vanishes for identical policies without decay") {
  const SoftmaxPolicy pol = table_policy(3, 2);
  Rng rng(66);
  const Vec theta = pol.net.init_params(rng);
  Trajectory tau;
  tau.steps = {{0, 0, 0.0}, {1, 1, 0.0}, {2, 0, 1.0}};
  CHECK(trajectory_trust_region(pol, theta, 2.0, theta, 2.0, tau, 1e-3, 0.0) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("empty state list leaves only the weight decay term") {
  const SoftmaxPolicy pol = table_policy(2, 2);
  Rng rng(67);
  const Vec theta = pol.net.init_params(rng);
  const double wd = 0.37;
  CHECK(trust_region_states(pol, theta, 1.0, theta, 1.0, {}, 1e-3, wd) ==
        doctest::Approx(wd * sq_norm(theta)).epsilon(1e-12));
}

TEST_CASE("trust region gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SoftmaxPolicy pol;
    pol.num_states = 3;
    pol.net = Network{{3, 4, 2}, Activation::Tanh};
    Rng rng(80 + seed);
    const Vec theta_old = pol.net.init_params(rng, 0.5);
    const Vec theta_new = pol.net.init_params(rng, 0.5);
    Trajectory tau;
    tau.steps = {{0, 0, 0.0}, {1, 1, 0.0}, {2, 0, 0.0}};
    const double slope_old = 1.5, slope_new = 2.5, eps = 1e-3, wd = 0.01;
    const Vec analytic =
        trust_region_grad(pol, theta_old, slope_old, theta_new, slope_new, tau, eps, wd);
    const auto loss = [&](const Vec& q) {
      return trajectory_trust_region(pol, theta_old, slope_old, q, slope_new, tau, eps, wd);
    };
    const Vec numeric = finite_diff_gradient(loss, theta_new, 1e-5);
    CHECK(relative_deviation(analytic, numeric) < 1e-5);
  }
}

TEST_CASE("greedy mass bound from the finite-greediness argument") {
  // With a psi gap of delta and slope beta, the top action holds more than
  // 1 - (|A|-1) e^{-beta delta} of the mass.
  Rng rng(91);
  for (int rep = 0; rep < 50; ++rep) {
    const int actions = 2 + rng.uniform_int(3);
    const double delta = 0.2 + rng.uniform01();
    Vec logits(static_cast<std::size_t>(actions));
    logits[0] = 1.0;  // top action with an exact gap of delta to the rest
    for (int a = 1; a < actions; ++a)
      logits[static_cast<std::size_t>(a)] = 1.0 - delta - rng.uniform01();
    const double beta = greediness_beta(actions, 3, 2, 1.0, delta, 0.05);
    const Vec p = softmax_with_slope(logits, beta);
    const double bound =
        1.0 - static_cast<double>(actions - 1) * std::exp(-beta * delta);
    CHECK(p[0] > bound);
  }
}

}  // TEST_SUITE
