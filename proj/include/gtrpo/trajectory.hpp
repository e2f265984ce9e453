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

#ifndef GTRPO_TRAJECTORY_HPP_
#define GTRPO_TRAJECTORY_HPP_

#include <cstddef>
#include <vector>

namespace gtrpo {

/// One step (x_h, y_h, a_h, r_h) of an episode.
struct Event {
  std::size_t latent = 0;
  std::size_t obs = 0;
  std::size_t action = 0;
  double reward = 0.0;

  bool operator==(const Event&) const = default;
};

/// A sampled episode. The successor (next_latent, next_obs) of the last event
/// is kept because the final reward is drawn conditioned on next_obs; it is
/// the terminal pair iff the episode terminated naturally.
struct Trajectory {
  std::vector<Event> events;
  std::size_t next_latent = 0;
  std::size_t next_obs = 0;
  bool terminated_naturally = false;

  std::size_t length() const noexcept { return events.size(); }

  /// Observation that followed step h (0-based): y_{h+1}.
  std::size_t obs_after(std::size_t h) const {
    return h + 1 < events.size() ? events[h + 1].obs : next_obs;
  }

  bool operator==(const Trajectory&) const = default;
};

/// Sum over h of gamma^(h-1) r_h, first reward undiscounted.
double discounted_return(const Trajectory& traj, double gamma);

/// Undiscounted sum of rewards.
double undiscounted_return(const Trajectory& traj);

/// Tail returns G_h = sum_{h'>=h} gamma^(h'-h) r_h' for every position.
std::vector<double> tail_returns(const Trajectory& traj, double gamma);

}  // namespace gtrpo

#endif  // GTRPO_TRAJECTORY_HPP_
