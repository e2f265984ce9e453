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

#ifndef GTRPO_ESTIMATION_HPP_
#define GTRPO_ESTIMATION_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gtrpo/pomdp.hpp"

namespace gtrpo {

/// m trajectories sampled under one policy snapshot. Episode t uses seed
/// derive_seed(seed_base, t).
struct Batch {
  std::vector<Trajectory> trajectories;
  PolicyParams policy_used;
  std::uint64_t seed_base = 0;

  std::size_t size() const noexcept { return trajectories.size(); }
  std::size_t total_steps() const;
};

/// Throws Error when m == 0.
Batch sample_batch(const PomdpSpec& spec, const PolicyParams& policy, std::size_t m, std::uint64_t seed_base);

/// (1/m) sum_t score(tau_t) R(tau_t), R the realized discounted return.
Table mc_policy_gradient(const Batch& batch, double gamma);

/// Context a value cell is keyed on.
enum class ValueContext {
  kHistory,      ///< (y_h, y_{h-1}, a_{h-1}); the first step uses (y, START, START)
  kObservation,  ///< y_h alone, stored in the (y, START, START) cell
};

/// h-independent tabular value estimate with per-cell sample statistics.
class VTable {
 public:
  VTable(std::size_t num_obs, std::size_t num_actions, ValueContext context);

  std::size_t num_obs() const noexcept { return ny_; }
  std::size_t num_actions() const noexcept { return na_; }
  ValueContext context() const noexcept { return context_; }
  std::size_t start_obs() const noexcept { return ny_; }
  std::size_t start_action() const noexcept { return na_; }

  /// Cell for the position h of a trajectory under this table's context.
  std::size_t cell_of(const Trajectory& traj, std::size_t h) const;
  std::size_t cell(std::size_t y, std::size_t y_prev, std::size_t a_prev) const {
    return (y * (ny_ + 1) + y_prev) * (na_ + 1) + a_prev;
  }
  std::size_t num_cells() const noexcept { return values_.size(); }

  bool visited(std::size_t cell) const { return counts_[cell] > 0; }
  std::size_t count(std::size_t cell) const { return counts_[cell]; }

  /// Sample mean, or default_value() for unvisited cells.
  double value(std::size_t cell) const { return visited(cell) ? values_[cell] : default_value_; }

  /// Standard error of the cell mean, clustered by episode (positions of one
  /// episode are not independent). NaN for unvisited cells.
  double std_error(std::size_t cell) const { return std_errors_[cell]; }

  double default_value() const noexcept { return default_value_; }

 private:
  friend VTable fit_v_table(const Batch& batch, double gamma, ValueContext context);

  std::size_t ny_, na_;
  ValueContext context_;
  std::vector<double> values_, std_errors_;
  std::vector<std::size_t> counts_;
  double default_value_ = 0.0;
};

/// Cell means of the tail returns G_h = sum_{h' >= h} gamma^(h'-h) r_h'.
/// Unvisited cells report the batch-wide mean tail return.
VTable fit_v_table(const Batch& batch, double gamma, ValueContext context = ValueContext::kHistory);

/// Per-position estimates aligned with batch.trajectories[t].events[h].
/// valid[t][h] is false where the value cell was never visited.
struct PositionAdvantages {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<char>> valid;
};

/// A_hat = G_h - v[cell of h].
PositionAdvantages empirical_advantage(const Batch& batch, const VTable& v, double gamma);

enum class EmpiricalKlVariant { kEpisodic, kTrpo };

/// episodic: (1/m) sum_t sum_h log(pi_old / pi_new)(a_h|y_h); trpo: same sum / sum_t |tau_t|.
double empirical_kl(const Batch& batch, const PolicyParams& policy_new, EmpiricalKlVariant variant);

/// Sampled analog of the discounted divergence, estimated from the old
/// policy's samples: (1/m) sum_t sum_h prefix_weight(h) sum_{k <= min(h,|tau|)} log(pi_old/pi_new),
/// h = 1..horizon.
double empirical_gamma_divergence(const Batch& batch, const PolicyParams& policy_new, double gamma,
                                  std::size_t horizon);

struct DivergenceReport {
  double kl_episodic = 0.0;
  double kl_trpo = 0.0;
  double d_gamma = 0.0;
  std::vector<double> per_episode;  ///< sum_h log(pi_old / pi_new) for each episode
};

DivergenceReport empirical_divergences(const Batch& batch, const PolicyParams& policy_new, double gamma,
                                       std::size_t horizon);

/// One line per step: episode_id,h,x,y,a,r with a header line.
void write_batch_csv(std::ostream& out, const Batch& batch);

}  // namespace gtrpo

#endif  // GTRPO_ESTIMATION_HPP_
