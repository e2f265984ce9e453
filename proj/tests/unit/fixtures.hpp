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

#ifndef GTRPO_TESTS_FIXTURES_HPP_
#define GTRPO_TESTS_FIXTURES_HPP_

#include <cstddef>
#include <vector>

#include "gtrpo/pomdp.hpp"

namespace gtrpo::testing {

/// Identity-observed deterministic chain x0 -> x1 -> ... -> x_T with one
/// action and a unit reward per step. num_states excludes x_T.
inline PomdpSpec deterministic_chain(std::size_t num_states, double gamma, double reward = 1.0) {
  PomdpTables t;
  t.num_latent = num_states + 1;
  t.num_obs = num_states + 1;
  t.num_actions = 1;
  t.init.assign(num_states, 0.0);
  t.init[0] = 1.0;
  t.transition.assign(t.num_latent * t.num_latent, 0.0);
  for (std::size_t x = 0; x < t.num_latent; ++x) t.transition[x * t.num_latent + std::min(x + 1, num_states)] = 1.0;
  t.observation.assign(t.num_latent * t.num_obs, 0.0);
  for (std::size_t x = 0; x < t.num_latent; ++x) t.observation[x * t.num_obs + x] = 1.0;
  t.reward_mean.assign(t.num_obs * t.num_obs, reward);
  t.gamma = gamma;
  t.max_steps = num_states;
  return PomdpSpec(std::move(t));
}

/// One non-terminal state that loops on itself under every action, one
/// observation, episodes cut at max_steps.
inline PomdpSpec self_loop(std::size_t num_actions, std::size_t max_steps, double reward = 1.0) {
  PomdpTables t;
  t.num_latent = 2;
  t.num_obs = 2;
  t.num_actions = num_actions;
  t.init = {1.0};
  t.transition.assign(2 * num_actions * 2, 0.0);
  for (std::size_t a = 0; a < num_actions; ++a) {
    t.transition[(0 * num_actions + a) * 2 + 0] = 1.0;
    t.transition[(1 * num_actions + a) * 2 + 1] = 1.0;
  }
  t.observation = {1.0, 0.0, 0.0, 1.0};
  t.reward_mean.assign(2 * num_actions * 2, reward);
  t.gamma = 1.0;
  t.max_steps = max_steps;
  return PomdpSpec(std::move(t));
}

}  // namespace gtrpo::testing

#endif  // GTRPO_TESTS_FIXTURES_HPP_
