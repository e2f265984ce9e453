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

#ifndef GTRPO_POMDP_HPP_
#define GTRPO_POMDP_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gtrpo/policy.hpp"
#include "gtrpo/trajectory.hpp"

namespace gtrpo {

/// Raw tables of a finite episodic POMDP, before validation.
///
/// The last latent index is the absorbing terminal state x_T and the last
/// observation index is the terminal observation it emits.
struct PomdpTables {
  std::size_t num_latent = 0;   ///< includes x_T
  std::size_t num_obs = 0;      ///< includes the terminal observation
  std::size_t num_actions = 0;
  std::vector<double> init;         ///< P1 over the num_latent - 1 non-terminal states
  std::vector<double> transition;   ///< T[x][a][x'], row-major
  std::vector<double> observation;  ///< O[x][y], row-major
  std::vector<double> reward_mean;  ///< Rbar[y][a][y'], row-major
  double reward_noise_std = 0.0;
  double gamma = 1.0;
  std::size_t max_steps = 1;
};

/// Immutable, validated POMDP. Safe to share read-only between threads.
class PomdpSpec {
 public:
  /// Tolerance on every probability-row sum.
  static constexpr double kRowTolerance = 1e-12;

  /// Validates all invariants; throws SpecError naming the first violation.
  explicit PomdpSpec(PomdpTables tables);

  std::size_t num_latent() const noexcept { return t_.num_latent; }
  std::size_t num_obs() const noexcept { return t_.num_obs; }
  std::size_t num_actions() const noexcept { return t_.num_actions; }
  std::size_t terminal_latent() const noexcept { return t_.num_latent - 1; }
  std::size_t terminal_obs() const noexcept { return t_.num_obs - 1; }
  std::size_t num_nonterminal_latent() const noexcept { return t_.num_latent - 1; }
  std::size_t num_nonterminal_obs() const noexcept { return t_.num_obs - 1; }
  double gamma() const noexcept { return t_.gamma; }
  double reward_noise_std() const noexcept { return t_.reward_noise_std; }
  std::size_t max_steps() const noexcept { return t_.max_steps; }

  double init(std::size_t x) const { return t_.init[x]; }
  double transition(std::size_t x, std::size_t a, std::size_t x_next) const {
    return t_.transition[(x * t_.num_actions + a) * t_.num_latent + x_next];
  }
  double observation(std::size_t x, std::size_t y) const { return t_.observation[x * t_.num_obs + y]; }
  double reward_mean(std::size_t y, std::size_t a, std::size_t y_next) const {
    return t_.reward_mean[(y * t_.num_actions + a) * t_.num_obs + y_next];
  }

  std::span<const double> init_row() const { return t_.init; }
  std::span<const double> transition_row(std::size_t x, std::size_t a) const {
    return std::span<const double>(t_.transition).subspan((x * t_.num_actions + a) * t_.num_latent,
                                                          t_.num_latent);
  }
  std::span<const double> observation_row(std::size_t x) const {
    return std::span<const double>(t_.observation).subspan(x * t_.num_obs, t_.num_obs);
  }

  const PomdpTables& tables() const noexcept { return t_; }

  /// True when every non-terminal state can reach x_T within num_latent steps.
  bool terminal_reachable() const;

  /// A copy with gamma / max_steps replaced (re-validated).
  PomdpSpec with_gamma(double gamma) const;
  PomdpSpec with_max_steps(std::size_t max_steps) const;

 private:
  PomdpTables t_;
};

/// Random source used by every sampler. Draw order is part of the contract:
/// uniform() and normal() wrap the standard distributions over mt19937_64,
/// and normal() consumes nothing when the standard deviation is zero.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  /// Inverse-CDF draw: first index whose running sum exceeds u.
  std::size_t categorical(std::span<const double> probs);

  double normal(double mean, double stddev) {
    if (stddev == 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stateless mixing of (base, index) into a well-spread 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Samples one episode under a memoryless policy.
///
/// Draw order: x1 ~ P1, y1 ~ O(.|x1), then for each step a ~ pi(.|y),
/// x' ~ T(.|x,a), y' ~ O(.|x'), r ~ N(Rbar[y][a][y'], std). Stops when x'
/// is terminal or the episode reaches max_steps. Identical seeds give
/// bit-identical trajectories.
Trajectory sample_episode(const PomdpSpec& spec, const PolicyParams& policy, std::uint64_t rng_seed);

/// Same as sample_episode with a precomputed probability table.
Trajectory sample_episode_with_probs(const PomdpSpec& spec, const Table& probs, std::uint64_t rng_seed);

/// Throws ShapeError unless the policy table is num_obs x num_actions.
void check_policy_shape(const PomdpSpec& spec, const PolicyParams& policy);

}  // namespace gtrpo

#endif  // GTRPO_POMDP_HPP_
