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

#ifndef GTRPO_ENV_SUITE_HPP_
#define GTRPO_ENV_SUITE_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gtrpo/pomdp.hpp"

namespace gtrpo {

/// Built-in benchmark environments.
///
///  - TwoDoor: a noisy cue says which of two doors is safe; the agent may
///    listen (small cost) or walk through a door. The right door starts a
///    new round (+1), the wrong one ends the episode (-1).
///  - NoisyChain: a three-cell corridor with confusable position readings;
///    stepping off the right end terminates with +1, every surviving step
///    pays a negative alive bonus.
///  - CliffAlive: climb towards a goal (+1) with a risk of falling off;
///    staying upright earns a positive alive bonus, lying low a negative one.
enum class Benchmark { kTwoDoor, kNoisyChain, kCliffAlive };

Benchmark parse_benchmark(std::string_view name);
std::string_view benchmark_name(Benchmark base);

struct EnvConfig {
  Benchmark base = Benchmark::kTwoDoor;
  double obs_noise = 0.0;              ///< in [0, 1)
  double alive_bonus_scale_pos = 1.0;
  double alive_bonus_scale_neg = 1.0;
  std::size_t max_steps = 0;           ///< 0 keeps the benchmark default
};

/// The unscaled pieces a benchmark is assembled from. Reward tables share the
/// Rbar[y][a][y'] layout; the built reward is task + c_pos*alive_pos + c_neg*alive_neg.
struct EnvComponents {
  PomdpTables tables;  ///< reward_mean holds the task component only
  std::vector<double> alive_pos;
  std::vector<double> alive_neg;
};

EnvComponents env_components(Benchmark base);

/// Folds observation noise into O and scales the alive bonus terms.
/// Throws SpecError when obs_noise is outside [0, 1) or a scale is not finite.
PomdpSpec build_env(const EnvConfig& config);

/// One-step bandit: a single non-terminal state, two actions, both leading to
/// x_T with mean rewards (r0, r1). gamma = 1, max_steps = 1.
PomdpSpec one_step_bandit(double r0 = 1.0, double r1 = 0.0);

}  // namespace gtrpo

#endif  // GTRPO_ENV_SUITE_HPP_
