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

#include "gtrpo/estimation.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "gtrpo/error.hpp"
#include "gtrpo/oracle.hpp"

namespace gtrpo {

std::size_t Batch::total_steps() const {
  std::size_t total = 0;
  for (const auto& t : trajectories) total += t.length();
  return total;
}

Batch sample_batch(const PomdpSpec& spec, const PolicyParams& policy, std::size_t m, std::uint64_t seed_base) {
  if (m == 0) throw Error("a batch needs at least one trajectory");
  check_policy_shape(spec, policy);
  const Table probs = policy.probabilities();
  Batch batch;
  batch.policy_used = policy;
  batch.seed_base = seed_base;
  batch.trajectories.reserve(m);
  for (std::size_t t = 0; t < m; ++t)
    batch.trajectories.push_back(sample_episode_with_probs(spec, probs, derive_seed(seed_base, t)));
  return batch;
}

Table mc_policy_gradient(const Batch& batch, double gamma) {
  const auto& policy = batch.policy_used;
  Table grad = Table::Zero(policy.logits().rows(), policy.logits().cols());
  for (const auto& t : batch.trajectories) grad += discounted_return(t, gamma) * trajectory_score(policy, t);
  return grad / static_cast<double>(batch.size());
}

VTable::VTable(std::size_t num_obs, std::size_t num_actions, ValueContext context)
    : ny_(num_obs), na_(num_actions), context_(context) {
  const std::size_t cells = ny_ * (ny_ + 1) * (na_ + 1);
  values_.assign(cells, 0.0);
  std_errors_.assign(cells, std::numeric_limits<double>::quiet_NaN());
  counts_.assign(cells, 0);
}

std::size_t VTable::cell_of(const Trajectory& traj, std::size_t h) const {
  const auto& ev = traj.events[h];
  if (context_ == ValueContext::kObservation || h == 0) return cell(ev.obs, ny_, na_);
  return cell(ev.obs, traj.events[h - 1].obs, traj.events[h - 1].action);
}

VTable fit_v_table(const Batch& batch, double gamma, ValueContext context) {
  const auto& policy = batch.policy_used;
  VTable v(policy.num_obs(), policy.num_actions(), context);
  const std::size_t cells = v.num_cells();
  std::vector<double> sums(cells, 0.0);
  double total = 0.0;
  std::size_t positions = 0;
  std::vector<std::vector<double>> tails(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& traj = batch.trajectories[t];
    tails[t] = tail_returns(traj, gamma);
    for (std::size_t h = 0; h < traj.length(); ++h) {
      const std::size_t c = v.cell_of(traj, h);
      ++v.counts_[c];
      sums[c] += tails[t][h];
      total += tails[t][h];
      ++positions;
    }
  }
  for (std::size_t c = 0; c < cells; ++c)
    if (v.counts_[c] > 0) v.values_[c] = sums[c] / static_cast<double>(v.counts_[c]);
  v.default_value_ = positions > 0 ? total / static_cast<double>(positions) : 0.0;

  // Episode-clustered variance of a ratio estimator:
  // SE^2 = sum_t (S_t - v n_t)^2 / (sum_t n_t)^2.
  std::vector<double> sq(cells, 0.0), ep_sum(cells, 0.0);
  std::vector<std::size_t> ep_count(cells, 0), touched;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& traj = batch.trajectories[t];
    touched.clear();
    for (std::size_t h = 0; h < traj.length(); ++h) {
      const std::size_t c = v.cell_of(traj, h);
      if (ep_count[c] == 0) touched.push_back(c);
      ++ep_count[c];
      ep_sum[c] += tails[t][h];
    }
    for (std::size_t c : touched) {
      const double resid = ep_sum[c] - v.values_[c] * static_cast<double>(ep_count[c]);
      sq[c] += resid * resid;
      ep_sum[c] = 0.0;
      ep_count[c] = 0;
    }
  }
  for (std::size_t c = 0; c < cells; ++c)
    if (v.counts_[c] > 0) v.std_errors_[c] = std::sqrt(sq[c]) / static_cast<double>(v.counts_[c]);
  return v;
}

PositionAdvantages empirical_advantage(const Batch& batch, const VTable& v, double gamma) {
  PositionAdvantages out;
  out.values.resize(batch.size());
  out.valid.resize(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& traj = batch.trajectories[t];
    const auto tails = tail_returns(traj, gamma);
    out.values[t].resize(traj.length());
    out.valid[t].resize(traj.length());
    for (std::size_t h = 0; h < traj.length(); ++h) {
      const std::size_t c = v.cell_of(traj, h);
      out.values[t][h] = tails[h] - v.value(c);
      out.valid[t][h] = v.visited(c) ? 1 : 0;
    }
  }
  return out;
}

namespace {

double episode_log_ratio(const Table& lp_old, const Table& lp_new, const Trajectory& traj) {
  double sum = 0.0;
  for (const auto& ev : traj.events) {
    const auto y = static_cast<Eigen::Index>(ev.obs), a = static_cast<Eigen::Index>(ev.action);
    sum += lp_old(y, a) - lp_new(y, a);
  }
  return sum;
}

}  // namespace

double empirical_kl(const Batch& batch, const PolicyParams& policy_new, EmpiricalKlVariant variant) {
  const Table lp_old = batch.policy_used.log_probabilities();
  const Table lp_new = policy_new.log_probabilities();
  double sum = 0.0;
  for (const auto& t : batch.trajectories) sum += episode_log_ratio(lp_old, lp_new, t);
  const double denom =
      variant == EmpiricalKlVariant::kEpisodic ? static_cast<double>(batch.size()) : static_cast<double>(batch.total_steps());
  return sum / denom;
}

double empirical_gamma_divergence(const Batch& batch, const PolicyParams& policy_new, double gamma,
                                  std::size_t horizon) {
  const Table lp_old = batch.policy_used.log_probabilities();
  const Table lp_new = policy_new.log_probabilities();
  double total = 0.0;
  for (const auto& t : batch.trajectories) {
    double cumulative = 0.0;
    for (std::size_t h = 0; h < std::max(horizon, t.length()); ++h) {
      if (h < t.length()) {
        const auto& ev = t.events[h];
        const auto y = static_cast<Eigen::Index>(ev.obs), a = static_cast<Eigen::Index>(ev.action);
        cumulative += lp_old(y, a) - lp_new(y, a);
      }
      total += prefix_weight(gamma, h + 1) * cumulative;
    }
  }
  return total / static_cast<double>(batch.size());
}

DivergenceReport empirical_divergences(const Batch& batch, const PolicyParams& policy_new, double gamma,
                                       std::size_t horizon) {
  const Table lp_old = batch.policy_used.log_probabilities();
  const Table lp_new = policy_new.log_probabilities();
  DivergenceReport r;
  r.per_episode.reserve(batch.size());
  double sum = 0.0;
  for (const auto& t : batch.trajectories) {
    r.per_episode.push_back(episode_log_ratio(lp_old, lp_new, t));
    sum += r.per_episode.back();
  }
  r.kl_episodic = sum / static_cast<double>(batch.size());
  r.kl_trpo = sum / static_cast<double>(batch.total_steps());
  r.d_gamma = empirical_gamma_divergence(batch, policy_new, gamma, horizon);
  return r;
}

void write_batch_csv(std::ostream& out, const Batch& batch) {
  out << "episode_id,h,x,y,a,r\n" << std::setprecision(17);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& traj = batch.trajectories[t];
    for (std::size_t h = 0; h < traj.length(); ++h) {
      const auto& ev = traj.events[h];
      out << t << ',' << h + 1 << ',' << ev.latent << ',' << ev.obs << ',' << ev.action << ',' << ev.reward << '\n';
    }
  }
}

}  // namespace gtrpo
