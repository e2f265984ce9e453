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

#include "gtrpo/pomdp.hpp"

#include <cmath>
#include <sstream>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

void check_row(std::span<const double> row, const std::string& what) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) throw SpecError(what + " has a negative or non-finite entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > PomdpSpec::kRowTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << " sums to " << sum << ", not 1";
    throw SpecError(msg.str());
  }
}

}  // namespace

PomdpSpec::PomdpSpec(PomdpTables tables) : t_(std::move(tables)) {
  const auto nx = t_.num_latent, ny = t_.num_obs, na = t_.num_actions;
  if (nx < 2) throw SpecError("num_latent must include at least one non-terminal state and x_T");
  if (ny < 2) throw SpecError("num_obs must include at least one non-terminal observation and the terminal one");
  if (na < 1) throw SpecError("num_actions must be positive");
  if (t_.init.size() != nx - 1) throw SpecError("init must have num_latent - 1 entries");
  if (t_.transition.size() != nx * na * nx) throw SpecError("transition table has the wrong size");
  if (t_.observation.size() != nx * ny) throw SpecError("observation table has the wrong size");
  if (t_.reward_mean.size() != ny * na * ny) throw SpecError("reward table has the wrong size");
  if (!(t_.gamma >= 0.0 && t_.gamma <= 1.0)) throw SpecError("gamma must lie in [0, 1]");
  if (!std::isfinite(t_.reward_noise_std) || t_.reward_noise_std < 0.0)
    throw SpecError("reward_noise_std must be finite and nonnegative");
  if (t_.max_steps < 1) throw SpecError("max_steps must be positive");
  for (double r : t_.reward_mean)
    if (!std::isfinite(r)) throw SpecError("reward_mean has a non-finite entry");

  check_row(init_row(), "init");
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a)
      check_row(transition_row(x, a), "transition row x=" + std::to_string(x) + " a=" + std::to_string(a));
    check_row(observation_row(x), "observation row x=" + std::to_string(x));
  }
  for (std::size_t a = 0; a < na; ++a)
    if (transition(terminal_latent(), a, terminal_latent()) != 1.0)
      throw SpecError("terminal latent state must be absorbing");
  if (observation(terminal_latent(), terminal_obs()) != 1.0)
    throw SpecError("terminal latent state must emit the terminal observation");
  for (std::size_t x = 0; x + 1 < nx; ++x)
    if (observation(x, terminal_obs()) != 0.0)
      throw SpecError("non-terminal state x=" + std::to_string(x) + " emits the terminal observation");
}

bool PomdpSpec::terminal_reachable() const {
  const auto nx = num_latent();
  std::vector<bool> reaches(nx, false);
  reaches[terminal_latent()] = true;
  for (std::size_t round = 0; round < nx; ++round) {
    for (std::size_t x = 0; x + 1 < nx; ++x) {
      if (reaches[x]) continue;
      for (std::size_t a = 0; a < num_actions() && !reaches[x]; ++a)
        for (std::size_t xn = 0; xn < nx; ++xn)
          if (reaches[xn] && transition(x, a, xn) > 0.0) {
            reaches[x] = true;
            break;
          }
    }
  }
  for (bool r : reaches)
    if (!r) return false;
  return true;
}

PomdpSpec PomdpSpec::with_gamma(double gamma) const {
  PomdpTables copy = t_;
  copy.gamma = gamma;
  return PomdpSpec(std::move(copy));
}

PomdpSpec PomdpSpec::with_max_steps(std::size_t max_steps) const {
  PomdpTables copy = t_;
  copy.max_steps = max_steps;
  return PomdpSpec(std::move(copy));
}

std::size_t Rng::categorical(std::span<const double> probs) {
  const double u = uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the running sum.
  return last_positive;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  // splitmix64 finalizer over a golden-ratio stride
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_policy_shape(const PomdpSpec& spec, const PolicyParams& policy) {
  if (policy.num_obs() != spec.num_obs() || policy.num_actions() != spec.num_actions())
    throw ShapeError("policy shape " + std::to_string(policy.num_obs()) + "x" +
                     std::to_string(policy.num_actions()) + " does not match spec " +
                     std::to_string(spec.num_obs()) + "x" + std::to_string(spec.num_actions()));
}

Trajectory sample_episode(const PomdpSpec& spec, const PolicyParams& policy, std::uint64_t rng_seed) {
  check_policy_shape(spec, policy);
  return sample_episode_with_probs(spec, policy.probabilities(), rng_seed);
}

Trajectory sample_episode_with_probs(const PomdpSpec& spec, const Table& probs, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  Trajectory traj;
  traj.events.reserve(std::min<std::size_t>(spec.max_steps(), 64));

  std::size_t x = rng.categorical(spec.init_row());
  std::size_t y = rng.categorical(spec.observation_row(x));
  for (;;) {
    const std::span<const double> pi(probs.row(static_cast<Eigen::Index>(y)).data(), spec.num_actions());
    const std::size_t a = rng.categorical(pi);
    const std::size_t x_next = rng.categorical(spec.transition_row(x, a));
    const std::size_t y_next = rng.categorical(spec.observation_row(x_next));
    const double r = rng.normal(spec.reward_mean(y, a, y_next), spec.reward_noise_std());
    traj.events.push_back({x, y, a, r});
    if (x_next == spec.terminal_latent()) {
      traj.terminated_naturally = true;
      traj.next_latent = x_next;
      traj.next_obs = y_next;
      break;
    }
    if (traj.events.size() >= spec.max_steps()) {
      traj.next_latent = x_next;
      traj.next_obs = y_next;
      break;
    }
    x = x_next;
    y = y_next;
  }
  return traj;
}

double discounted_return(const Trajectory& traj, double gamma) {
  double total = 0.0, weight = 1.0;
  for (const auto& e : traj.events) {
    total += weight * e.reward;
    weight *= gamma;
  }
  return total;
}

double undiscounted_return(const Trajectory& traj) {
  double total = 0.0;
  for (const auto& e : traj.events) total += e.reward;
  return total;
}

std::vector<double> tail_returns(const Trajectory& traj, double gamma) {
  std::vector<double> tails(traj.length());
  double running = 0.0;
  for (std::size_t h = traj.length(); h-- > 0;) {
    running = traj.events[h].reward + gamma * running;
    tails[h] = running;
  }
  return tails;
}

}  // namespace gtrpo
