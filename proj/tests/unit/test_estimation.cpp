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
#include <sstream>

#include "fixtures.hpp"
#include "gtrpo/env_suite.hpp"
#include "gtrpo/estimation.hpp"
#include "gtrpo/oracle.hpp"
#include "gtrpo/random_spec.hpp"

using namespace gtrpo;

namespace {

Trajectory repeated(std::size_t length) {
  Trajectory t;
  for (std::size_t h = 0; h < length; ++h) t.events.push_back({0, 0, 0, 0.0});
  t.next_obs = 1;
  t.terminated_naturally = true;
  return t;
}

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("batches are reproducible") {
    const PomdpSpec s = build_env(EnvConfig{});
    const PolicyParams u(s.num_obs(), s.num_actions());
    const Batch a = sample_batch(s, u, 50, 7), b = sample_batch(s, u, 50, 7);
    CHECK(a.trajectories == b.trajectories);
    CHECK(a.trajectories[3] == sample_episode(s, u, derive_seed(7, 3)));
    std::size_t steps = 0;
    for (const auto& t : a.trajectories) steps += t.length();
    CHECK(a.total_steps() == steps);
    CHECK_THROWS(sample_batch(s, u, 0, 1));
  }

  TEST_CASE("gradient estimator") {
    const PomdpSpec zero = testing::self_loop(2, 3, 0.0);
    const Batch one = sample_batch(zero, PolicyParams(2, 2), 1, 3);
    CHECK(mc_policy_gradient(one, 1.0).cwiseAbs().maxCoeff() == 0.0);

    const PomdpSpec b1 = one_step_bandit(1.0, 0.0), b2 = one_step_bandit(2.0, 0.0);
    const PolicyParams u(2, 2);
    const Table g1 = mc_policy_gradient(sample_batch(b1, u, 1000, 5), 1.0);
    const Table g2 = mc_policy_gradient(sample_batch(b2, u, 1000, 5), 1.0);
    CHECK(g2 == 2.0 * g1);
  }

  TEST_CASE("value table on a single trajectory") {
    const PomdpSpec chain = testing::deterministic_chain(3, 0.9);
    const Batch batch = sample_batch(chain, PolicyParams(4, 1), 1, 1);
    const VTable v = fit_v_table(batch, 0.9);
    const auto& t = batch.trajectories[0];
    const auto tails = tail_returns(t, 0.9);
    for (std::size_t h = 0; h < t.length(); ++h) CHECK(v.value(v.cell_of(t, h)) == tails[h]);
    const PositionAdvantages adv = empirical_advantage(batch, v, 0.9);
    for (std::size_t h = 0; h < t.length(); ++h) {
      CHECK(adv.valid[0][h]);
      CHECK(adv.values[0][h] == 0.0);
    }
  }

  TEST_CASE("deterministic spec matches oracle values at m = 1") {
    const PomdpSpec chain = testing::deterministic_chain(3, 0.8);
    const PolicyParams p(4, 1);
    const auto atlas = TrajectoryAtlas::enumerate(chain);
    const ConditionalTables tab(atlas, p);
    const Batch batch = sample_batch(chain, p, 1, 2);
    const VTable v = fit_v_table(batch, 0.8);
    const auto& t = batch.trajectories[0];
    for (std::size_t h = 0; h < t.length(); ++h) {
      const std::size_t yp = h == 0 ? tab.start().obs : t.events[h - 1].obs;
      const std::size_t ap = h == 0 ? tab.start().action : t.events[h - 1].action;
      CHECK(std::abs(v.value(v.cell_of(t, h)) - tab.v(h, t.events[h].obs, yp, ap)) <= 1e-10);
    }
  }

  TEST_CASE("constant myopic rewards give zero advantages") {
    const PomdpSpec constant = testing::self_loop(1, 4, 2.0);
    const Batch batch = sample_batch(constant, PolicyParams(2, 1), 30, 4);
    const PositionAdvantages adv = empirical_advantage(batch, fit_v_table(batch, 0.0), 0.0);
    for (const auto& row : adv.values)
      for (double a : row) CHECK(a == doctest::Approx(0.0).epsilon(1e-14));
  }

  TEST_CASE("unvisited cells fall back to the mean tail return") {
    const PomdpSpec s = build_env(EnvConfig{});
    const Batch batch = sample_batch(s, PolicyParams(s.num_obs(), s.num_actions()), 5, 1);
    const VTable v = fit_v_table(batch, s.gamma());
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : batch.trajectories)
      for (double g : tail_returns(t, s.gamma())) sum += g, ++n;
    CHECK(v.default_value() == doctest::Approx(sum / n).epsilon(1e-14));
    for (std::size_t c = 0; c < v.num_cells(); ++c)
      if (!v.visited(c)) {
        CHECK(v.value(c) == v.default_value());
        CHECK(std::isnan(v.std_error(c)));
      }
  }

  TEST_CASE("observation context pools histories") {
    const PomdpSpec s = build_env(EnvConfig{});
    const Batch batch = sample_batch(s, PolicyParams(s.num_obs(), s.num_actions()), 200, 3);
    const VTable v = fit_v_table(batch, s.gamma(), ValueContext::kObservation);
    for (const auto& t : batch.trajectories)
      for (std::size_t h = 0; h < t.length(); ++h)
        CHECK(v.cell_of(t, h) == v.cell(t.events[h].obs, v.start_obs(), v.start_action()));
  }

  TEST_CASE("kl estimators") {
    Table old_logits = Table::Zero(2, 2), new_logits = Table::Zero(2, 2);
    new_logits(0, 0) = 0.8;
    Batch batch;
    batch.policy_used = PolicyParams(old_logits);
    batch.trajectories = {repeated(1), repeated(3)};
    const PolicyParams new_p(new_logits);
    const double k = log_prob(batch.policy_used, 0, 0) - log_prob(new_p, 0, 0);
    CHECK(empirical_kl(batch, new_p, EmpiricalKlVariant::kEpisodic) == doctest::Approx(2.0 * k).epsilon(1e-15));
    CHECK(empirical_kl(batch, new_p, EmpiricalKlVariant::kTrpo) == doctest::Approx(k).epsilon(1e-15));
    CHECK(empirical_kl(batch, batch.policy_used, EmpiricalKlVariant::kEpisodic) == 0.0);
    CHECK(empirical_kl(batch, batch.policy_used, EmpiricalKlVariant::kTrpo) == 0.0);

    batch.trajectories = {repeated(3), repeated(3), repeated(3)};
    CHECK(empirical_kl(batch, new_p, EmpiricalKlVariant::kEpisodic) ==
          doctest::Approx(3.0 * empirical_kl(batch, new_p, EmpiricalKlVariant::kTrpo)).epsilon(1e-15));
  }

  TEST_CASE("sampled discounted divergence") {
    Table new_logits = Table::Zero(2, 2);
    new_logits(0, 1) = -0.6;
    Batch batch;
    batch.policy_used = PolicyParams(2, 2);
    batch.trajectories = {repeated(2)};
    const PolicyParams new_p(new_logits);
    const double k = log_prob(batch.policy_used, 0, 0) - log_prob(new_p, 0, 0);
    const double g = 0.7;
    // prefixes h = 1, 2, 3 of a length-2 episode hold 1, 2, 2 steps
    const double expected = prefix_weight(g, 1) * k + prefix_weight(g, 2) * 2 * k + prefix_weight(g, 3) * 2 * k;
    CHECK(empirical_gamma_divergence(batch, new_p, g, 3) == doctest::Approx(expected).epsilon(1e-14));
    const DivergenceReport r = empirical_divergences(batch, new_p, g, 3);
    CHECK(r.d_gamma == doctest::Approx(expected).epsilon(1e-14));
    CHECK(r.per_episode.size() == 1);
    CHECK(r.per_episode[0] == doctest::Approx(2 * k).epsilon(1e-14));
  }

  TEST_CASE("batch csv") {
    const PomdpSpec s = one_step_bandit();
    std::ostringstream out;
    write_batch_csv(out, sample_batch(s, PolicyParams(2, 2), 2, 0));
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "episode_id,h,x,y,a,r");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
  }
}
