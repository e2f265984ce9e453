// Copyright 2026 The gtrpo-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "gtrpo/env_suite.hpp"
#include "gtrpo/error.hpp"
#include "gtrpo/oracle.hpp"
#include "gtrpo/random_spec.hpp"

using namespace gtrpo;

namespace {

// Value of the policy by recursion over (step, x, y), written independently
// of the library evaluator.
double recursive_value(const PomdpSpec& s, const Table& pi, std::size_t step, std::size_t x, std::size_t y) {
  double v = 0.0;
  for (std::size_t a = 0; a < s.num_actions(); ++a)
    for (std::size_t xn = 0; xn < s.num_latent(); ++xn) {
      const double t = s.transition(x, a, xn);
      if (t == 0.0) continue;
      for (std::size_t yn = 0; yn < s.num_obs(); ++yn) {
        const double o = s.observation(xn, yn);
        if (o == 0.0) continue;
        const bool ends = xn == s.terminal_latent() || step + 1 == s.max_steps();
        const double future = ends ? 0.0 : recursive_value(s, pi, step + 1, xn, yn);
        v += pi(y, a) * t * o * (s.reward_mean(y, a, yn) + s.gamma() * future);
      }
    }
  return v;
}

double reference_eta(const PomdpSpec& s, const PolicyParams& p) {
  const Table pi = p.probabilities();
  double v = 0.0;
  for (std::size_t x = 0; x + 1 < s.num_latent(); ++x)
    for (std::size_t y = 0; y < s.num_obs(); ++y)
      if (s.init(x) > 0.0 && s.observation(x, y) > 0.0) v += s.init(x) * s.observation(x, y) * recursive_value(s, pi, 0, x, y);
  return v;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, down = x;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    g[i] = (f(up) - f(down)) / 2e-5;
  }
  return g;
}

PolicyParams bandit_policy(double l0, double l1) {
  Table t = Table::Zero(2, 2);
  t(0, 0) = l0;
  t(0, 1) = l1;
  return PolicyParams(t);
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("enumeration counts") {
    CHECK(TrajectoryAtlas::enumerate(testing::self_loop(2, 2)).size() == 4);

    PomdpTables t = testing::self_loop(2, 2).tables();
    t.transition = {0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0};  // a0 ends the episode
    const PomdpSpec spec(t);
    const auto atlas = TrajectoryAtlas::enumerate(spec, 2);
    CHECK(atlas.size() == 3);
    CHECK(total_mass(atlas, PolicyParams(2, 2)) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("enumeration guards") {
    const PomdpSpec loop = testing::self_loop(2, 4);
    CHECK_THROWS_AS(TrajectoryAtlas::enumerate(loop, 2), MassLeakError);
    const PomdpSpec wide = testing::self_loop(3, 40);
    CHECK_THROWS_AS(TrajectoryAtlas::enumerate(wide), SizeError);
  }

  TEST_CASE("TwoDoor mass is one for random policies") {
    const PomdpSpec spec = build_env(EnvConfig{});
    const auto atlas = TrajectoryAtlas::enumerate(spec, 4);
    Rng rng(10);
    for (int k = 0; k < 20; ++k)
      CHECK(std::abs(total_mass(atlas, random_policy(rng, spec.num_obs(), spec.num_actions(), 2.0)) - 1.0) <= 1e-9);
  }

  TEST_CASE("eta values") {
    const PomdpSpec chain = testing::deterministic_chain(2, 1.0);
    CHECK(eta(TrajectoryAtlas::enumerate(chain), PolicyParams(3, 1)) == 2.0);
    const PomdpSpec bandit = one_step_bandit();
    CHECK(eta(TrajectoryAtlas::enumerate(bandit), PolicyParams(2, 2)) == 0.5);
    const PomdpSpec twodoor = build_env(EnvConfig{});
    const PolicyParams uniform(twodoor.num_obs(), twodoor.num_actions());
    CHECK(std::abs(eta(TrajectoryAtlas::enumerate(twodoor), uniform) - reference_eta(twodoor, uniform)) <= 1e-12);
    Rng rng(11);
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      CHECK(std::abs(eta(TrajectoryAtlas::enumerate(s), p) - reference_eta(s, p)) <= 1e-12);
      CHECK(std::abs(eta_backward_induction(s, p) - reference_eta(s, p)) <= 1e-12);
    }
  }

  TEST_CASE("policy gradient") {
    const auto bandit = TrajectoryAtlas::enumerate(one_step_bandit());
    const Table g = grad_eta(bandit, PolicyParams(2, 2));
    CHECK(g(0, 0) == 0.25);
    CHECK(g(0, 1) == -0.25);
    const Table flat = grad_eta(TrajectoryAtlas::enumerate(one_step_bandit(1.0, 1.0)), PolicyParams(2, 2));
    CHECK(flat.cwiseAbs().maxCoeff() == 0.0);

    Rng rng(12);
    for (int k = 0; k < 5; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      const Eigen::VectorXd exact = flatten(grad_eta(atlas, p));
      const Eigen::VectorXd fd =
          central_difference([&](const Eigen::VectorXd& v) { return eta(atlas, p.with_flat(v)); }, p.flat());
      CHECK((exact - fd).cwiseAbs().maxCoeff() <= 1e-6 * exact.cwiseAbs().maxCoeff());
      CHECK((exact - flatten(grad_eta_score_function(atlas, p))).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("Fisher matrices") {
    const auto bandit = TrajectoryAtlas::enumerate(one_step_bandit());
    const Eigen::MatrixXd f = fisher(bandit, PolicyParams(2, 2), false);
    CHECK(f(0, 0) == 0.25);
    CHECK(f(0, 1) == -0.25);
    CHECK(f(1, 0) == -0.25);
    CHECK(f(1, 1) == 0.25);
    CHECK(f.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(13);
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      for (bool discounted : {false, true}) {
        const Eigen::MatrixXd m = fisher(atlas, p, discounted);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() >= -1e-10);
      }
      if (kPrefixGammaOffset == 0) {
        const auto zero = TrajectoryAtlas::enumerate(s.with_gamma(0.0));
        CHECK(fisher(zero, p, true).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }

  TEST_CASE("divergences") {
    const auto bandit = TrajectoryAtlas::enumerate(one_step_bandit());
    const double expected = 0.5 * std::log(0.5 / 0.7310585786300049) + 0.5 * std::log(0.5 / 0.2689414213699951);
    CHECK(kl(bandit, PolicyParams(2, 2), bandit_policy(1, 0), KlVariant::kTrajectory) ==
          doctest::Approx(expected).epsilon(1e-13));
    CHECK(std::abs(expected - 0.12011450695827758) <= 1e-14);

    Rng rng(14);
    for (int k = 0; k < 100; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      const PolicyParams q = perturbed_policy(rng, p, 1.0);
      for (KlVariant v : {KlVariant::kTrajectory, KlVariant::kGamma}) {
        CHECK(kl(atlas, p, p, v) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(kl(atlas, p, q, v) >= 0.0);
      }
      const double tv = total_variation(atlas, p, q);
      CHECK(tv >= 0.0);
      CHECK(tv <= 1.0);
      // Pinsker
      CHECK(tv <= std::sqrt(0.5 * kl(atlas, p, q, KlVariant::kTrajectory)) + 1e-12);
    }
  }

  TEST_CASE("conditional tables") {
    Rng rng(15);
    for (int k = 0; k < 5; ++k) {
      const PomdpSpec s = random_small_spec(rng, true);
      const auto atlas = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      const ConditionalTables tab(atlas, p);
      const StartIndex st = tab.start();
      for (std::size_t h = 0; h < tab.horizon(); ++h)
        for (std::size_t y = 0; y < s.num_obs(); ++y) {
          double ref = std::nan("");
          for (std::size_t yp = 0; yp <= s.num_obs(); ++yp)
            for (std::size_t ap = 0; ap <= s.num_actions(); ++ap) {
              if ((yp == st.obs) != (ap == st.action) || !tab.v_defined(h, y, yp, ap)) continue;
              if (std::isnan(ref)) ref = tab.v(h, y, yp, ap);
              CHECK(std::abs(tab.v(h, y, yp, ap) - ref) <= 1e-10);
            }
        }
    }

    const PomdpSpec s = build_env(EnvConfig{});
    const auto atlas = TrajectoryAtlas::enumerate(s);
    const ConditionalTables tab(atlas, PolicyParams(s.num_obs(), s.num_actions()));
    std::size_t checked = 0;
    for (std::size_t h = 0; h < tab.horizon(); ++h)
      for (std::size_t yn = 0; yn < s.num_obs(); ++yn)
        for (std::size_t a = 0; a < s.num_actions(); ++a)
          for (std::size_t y = 0; y + 1 < s.num_obs(); ++y) {
            if (!tab.q_defined(h, yn, a, y)) {
              CHECK_THROWS_AS(tab.q(h, yn, a, y), MaskedEntryError);
              continue;
            }
            const bool last = h + 1 == s.max_steps() || yn == s.terminal_obs();
            const double future = last ? 0.0 : tab.v(h + 1, yn, y, a);
            CHECK(std::abs(tab.q(h, yn, a, y) - (s.reward_mean(y, a, yn) + s.gamma() * future)) <= 1e-10);
            if (last) CHECK(std::abs(tab.q(h, yn, a, y) - s.reward_mean(y, a, yn)) <= 1e-14);
            ++checked;
          }
    CHECK(checked > 0);
  }

  TEST_CASE("surrogate contact conditions") {
    const auto bandit = TrajectoryAtlas::enumerate(one_step_bandit());
    const PolicyParams old_p(2, 2), new_p = bandit_policy(0.7, -0.4);
    CHECK(surrogate_L(bandit, old_p, new_p) == doctest::Approx(eta(bandit, new_p)).epsilon(1e-15));

    Rng rng(16);
    for (int k = 0; k < 5; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      CHECK(std::abs(surrogate_L(atlas, p, p) - eta(atlas, p)) <= 1e-12);
      const Eigen::VectorXd g = flatten(grad_eta(atlas, p));
      const Eigen::VectorXd fd =
          central_difference([&](const Eigen::VectorXd& v) { return surrogate_L(atlas, p, p.with_flat(v)); }, p.flat());
      CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-6 * g.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("performance difference identity") {
    Rng rng(17);
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      const PolicyParams q = perturbed_policy(rng, p, 1.5);
      const ConditionalTables tab(atlas, p);
      CHECK(std::abs(eta(atlas, q) - eta(atlas, p) - expected_discounted_advantage(atlas, tab, q)) <= 1e-9);
    }
  }

  TEST_CASE("epsilon spans") {
    const PomdpSpec constant = testing::self_loop(2, 3);
    const auto atlas = TrajectoryAtlas::enumerate(constant);
    const EpsilonSpans zero = epsilon_spans(atlas, PolicyParams(2, 2), PolicyParams(2, 2));
    CHECK(zero.epsilon == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(zero.epsilon_prime == doctest::Approx(0.0).epsilon(1e-15));

    Rng rng(18);
    for (int k = 0; k < 20; ++k) {
      const PomdpSpec s = random_small_spec(rng);
      const auto a = TrajectoryAtlas::enumerate(s);
      const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
      const PolicyParams q = perturbed_policy(rng, p, 1.0);
      const EpsilonSpans e = epsilon_spans(a, p, q);
      const double g = s.gamma();
      CHECK(e.epsilon <= e.epsilon_prime * (1.0 - std::pow(g, static_cast<double>(a.horizon()))) / (1.0 - g) + 1e-12);
      CHECK(std::abs(e.epsilon - epsilon_recomputed(a, p, q)) <= 1e-12);
    }
  }

  TEST_CASE("identity observations reduce to the latent advantage") {
    Rng rng(19);
    const PomdpSpec s = random_small_spec(rng, true);
    const auto atlas = TrajectoryAtlas::enumerate(s);
    const PolicyParams p = random_policy(rng, s.num_obs(), s.num_actions());
    const ConditionalTables tab(atlas, p);
    const auto latent = latent_advantage(s, p);
    const std::size_t nx = s.num_latent(), na = s.num_actions();
    for (std::size_t a = 0; a < na; ++a) {
      double marginal = 0.0;
      for (std::size_t xn = 0; xn < nx; ++xn)
        if (s.transition(0, a, xn) > 0.0)
          marginal += s.transition(0, a, xn) * tab.advantage(0, xn, a, 0, tab.start().obs, tab.start().action);
      if (s.init(0) > 0.0) CHECK(std::abs(marginal - latent[(0 * nx + 0) * na + a]) <= 1e-10);
    }
  }
}
