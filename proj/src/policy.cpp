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

#include "gtrpo/policy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

void check_obs(const PolicyParams& policy, std::size_t obs) {
  if (obs >= policy.num_obs())
    throw ShapeError("observation " + std::to_string(obs) + " out of range (num_obs=" +
                     std::to_string(policy.num_obs()) + ")");
}

void check_action(const PolicyParams& policy, std::size_t action) {
  if (action >= policy.num_actions())
    throw ShapeError("action " + std::to_string(action) + " out of range (num_actions=" +
                     std::to_string(policy.num_actions()) + ")");
}

// log-sum-exp of one logit row, shifted by its maximum.
double row_log_normalizer(const Table& logits, Eigen::Index y) {
  const double top = logits.row(y).maxCoeff();
  return top + std::log((logits.row(y).array() - top).exp().sum());
}

}  // namespace

PolicyParams::PolicyParams(std::size_t num_obs, std::size_t num_actions)
    : logits_(Table::Zero(static_cast<Eigen::Index>(num_obs), static_cast<Eigen::Index>(num_actions))) {
  if (num_obs == 0 || num_actions == 0) throw ShapeError("policy table must be non-empty");
}

PolicyParams::PolicyParams(Table logits) : logits_(std::move(logits)) {
  if (logits_.size() == 0) throw ShapeError("policy table must be non-empty");
  if (!logits_.allFinite()) throw Error("policy logits must be finite");
}

PolicyParams PolicyParams::with_flat(const Eigen::VectorXd& flat) const {
  if (static_cast<std::size_t>(flat.size()) != dim()) throw ShapeError("flat parameter vector has the wrong size");
  return PolicyParams(unflatten(flat, logits_.rows(), logits_.cols()));
}

Table PolicyParams::probabilities() const {
  Table probs(logits_.rows(), logits_.cols());
  for (Eigen::Index y = 0; y < logits_.rows(); ++y) {
    const double top = logits_.row(y).maxCoeff();
    probs.row(y) = (logits_.row(y).array() - top).exp();
    probs.row(y) /= probs.row(y).sum();
  }
  return probs;
}

Table PolicyParams::log_probabilities() const {
  Table out(logits_.rows(), logits_.cols());
  for (Eigen::Index y = 0; y < logits_.rows(); ++y)
    out.row(y) = logits_.row(y).array() - row_log_normalizer(logits_, y);
  return out;
}

Eigen::VectorXd action_probs(const PolicyParams& policy, std::size_t obs) {
  check_obs(policy, obs);
  const auto row = policy.logits().row(static_cast<Eigen::Index>(obs));
  Eigen::VectorXd p = (row.array() - row.maxCoeff()).exp().transpose();
  return p / p.sum();
}

double log_prob(const PolicyParams& policy, std::size_t obs, std::size_t action) {
  check_obs(policy, obs);
  check_action(policy, action);
  const auto y = static_cast<Eigen::Index>(obs);
  return policy.logits()(y, static_cast<Eigen::Index>(action)) - row_log_normalizer(policy.logits(), y);
}

Table log_prob_grad(const PolicyParams& policy, std::size_t obs, std::size_t action) {
  check_action(policy, action);
  Table grad = Table::Zero(policy.logits().rows(), policy.logits().cols());
  grad.row(static_cast<Eigen::Index>(obs)) = -action_probs(policy, obs).transpose();
  grad(static_cast<Eigen::Index>(obs), static_cast<Eigen::Index>(action)) += 1.0;
  return grad;
}

Table prefix_score(const PolicyParams& policy, const Trajectory& traj, std::size_t steps) {
  const Table probs = policy.probabilities();
  Table score = Table::Zero(probs.rows(), probs.cols());
  steps = std::min(steps, traj.length());
  for (std::size_t h = 0; h < steps; ++h) {
    const auto& e = traj.events[h];
    check_obs(policy, e.obs);
    check_action(policy, e.action);
    const auto y = static_cast<Eigen::Index>(e.obs);
    score.row(y) -= probs.row(y);
    score(y, static_cast<Eigen::Index>(e.action)) += 1.0;
  }
  return score;
}

Table trajectory_score(const PolicyParams& policy, const Trajectory& traj) {
  return prefix_score(policy, traj, traj.length());
}

double policy_ratio(const PolicyParams& new_policy, const PolicyParams& old_policy, std::size_t obs,
                    std::size_t action) {
  if (new_policy.num_obs() != old_policy.num_obs() || new_policy.num_actions() != old_policy.num_actions())
    throw ShapeError("policy shapes differ");
  return std::exp(log_prob(new_policy, obs, action) - log_prob(old_policy, obs, action));
}

void write_policy(std::ostream& out, const PolicyParams& policy) {
  out << policy.num_obs() << ' ' << policy.num_actions() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index y = 0; y < policy.logits().rows(); ++y) {
    for (Eigen::Index a = 0; a < policy.logits().cols(); ++a) {
      if (a > 0) out << ' ';
      out << policy.logits()(y, a);
    }
    out << '\n';
  }
}

PolicyParams read_policy(std::istream& in) {
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows == 0 || cols == 0)
    throw ConfigError("policy checkpoint header must be 'num_obs num_actions'", 1);
  Table logits(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t y = 0; y < rows; ++y)
    for (std::size_t a = 0; a < cols; ++a)
      if (!(in >> logits(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(a))))
        throw ConfigError("policy checkpoint truncated or malformed", y + 2);
  return PolicyParams(std::move(logits));
}

void save_policy(const std::string& path, const PolicyParams& policy) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_policy(out, policy);
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_policy(in);
}

}  // namespace gtrpo
