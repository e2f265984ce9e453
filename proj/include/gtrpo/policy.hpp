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

#ifndef GTRPO_POLICY_HPP_
#define GTRPO_POLICY_HPP_

#include <cstddef>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "gtrpo/trajectory.hpp"

namespace gtrpo {

/// Row-major (num_obs x num_actions) table: logits, probabilities and
/// policy gradients all share this layout, so flattening is a plain Map.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::VectorXd flatten(const Table& table) {
  return Eigen::Map<const Eigen::VectorXd>(table.data(), table.size());
}

inline Table unflatten(const Eigen::VectorXd& flat, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Table>(flat.data(), rows, cols);
}

/// Tabular softmax memoryless policy pi(a|y) = softmax(theta[y])[a].
///
/// Value type: every update produces a new PolicyParams. The terminal
/// observation row is present so that shapes match the spec, but no sampled
/// or enumerated step ever reads it.
class PolicyParams {
 public:
  PolicyParams() = default;

  /// Uniform policy (all logits zero).
  PolicyParams(std::size_t num_obs, std::size_t num_actions);

  /// Throws ShapeError on an empty table and Error on non-finite logits.
  explicit PolicyParams(Table logits);

  std::size_t num_obs() const noexcept { return static_cast<std::size_t>(logits_.rows()); }
  std::size_t num_actions() const noexcept { return static_cast<std::size_t>(logits_.cols()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(logits_.size()); }

  const Table& logits() const noexcept { return logits_; }
  Eigen::VectorXd flat() const { return flatten(logits_); }

  /// Same shape, logits replaced by `flat` (row-major).
  PolicyParams with_flat(const Eigen::VectorXd& flat) const;

  /// Full probability table, one softmax per row.
  Table probabilities() const;

  /// log pi(a|y) for every entry.
  Table log_probabilities() const;

 private:
  Table logits_;
};

/// pi(.|obs). Throws ShapeError when obs is out of range.
Eigen::VectorXd action_probs(const PolicyParams& policy, std::size_t obs);

/// log pi(action|obs), computed with a log-sum-exp.
double log_prob(const PolicyParams& policy, std::size_t obs, std::size_t action);

/// d log pi(a|y) / d theta: row y holds 1{a=b} - pi(b|y), other rows zero.
Table log_prob_grad(const PolicyParams& policy, std::size_t obs, std::size_t action);

/// Sum over the episode of log_prob_grad; equals grad log f(tau; theta).
Table trajectory_score(const PolicyParams& policy, const Trajectory& traj);

/// Sum over the first `steps` events only (prefix score).
Table prefix_score(const PolicyParams& policy, const Trajectory& traj, std::size_t steps);

/// pi_new(a|y) / pi_old(a|y), evaluated as exp of a log difference.
double policy_ratio(const PolicyParams& new_policy, const PolicyParams& old_policy,
                    std::size_t obs, std::size_t action);

/// Checkpoint format: "num_obs num_actions" header line followed by one line
/// per observation with the logits at 17 significant digits.
void write_policy(std::ostream& out, const PolicyParams& policy);
PolicyParams read_policy(std::istream& in);

void save_policy(const std::string& path, const PolicyParams& policy);
PolicyParams load_policy(const std::string& path);

}  // namespace gtrpo

#endif  // GTRPO_POLICY_HPP_
