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

#include "gtrpo/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

// Recursive depth-first enumeration state.
struct Enumerator {
  const PomdpSpec& spec;
  std::size_t tau_max;
  std::vector<Event> path;
  std::vector<AtlasEntry>& entries;
  std::vector<Event>& events;

  void emit(std::size_t x_next, std::size_t y_next, bool terminated, double prob, double ret) {
    if (static_cast<double>(entries.size()) >= TrajectoryAtlas::kMaxEntries)
      throw SizeError("enumeration exceeds the entry budget");
    AtlasEntry e;
    e.offset = events.size();
    e.length = path.size();
    e.next_latent = x_next;
    e.next_obs = y_next;
    e.terminated_naturally = terminated;
    e.model_prob = prob;
    e.expected_return = ret;
    events.insert(events.end(), path.begin(), path.end());
    entries.push_back(e);
  }

  void expand(std::size_t x, std::size_t y, double prob, double ret, double discount) {
    const std::size_t nx = spec.num_latent(), ny = spec.num_obs();
    for (std::size_t a = 0; a < spec.num_actions(); ++a) {
      for (std::size_t xn = 0; xn < nx; ++xn) {
        const double pt = spec.transition(x, a, xn);
        if (pt <= 0.0) continue;
        for (std::size_t yn = 0; yn < ny; ++yn) {
          const double po = spec.observation(xn, yn);
          if (po <= 0.0) continue;
          const double r = spec.reward_mean(y, a, yn);
          const double p = prob * pt * po;
          const double ret_next = ret + discount * r;
          path.push_back({x, y, a, r});
          if (xn == spec.terminal_latent()) {
            emit(xn, yn, true, p, ret_next);
          } else if (path.size() >= spec.max_steps()) {
            emit(xn, yn, false, p, ret_next);
          } else if (path.size() >= tau_max) {
            throw MassLeakError("probability mass survives past tau_max=" + std::to_string(tau_max));
          } else {
            expand(xn, yn, p, ret_next, discount * spec.gamma());
          }
          path.pop_back();
        }
      }
    }
  }
};

// Expected reward tails along an entry: tails[h] = sum_{h' >= h} gamma^(h'-h) Rbar_{h'}.
void entry_tails(const TrajectoryAtlas& atlas, const AtlasEntry& e, double gamma, std::vector<double>& tails) {
  tails.resize(e.length);
  double running = 0.0;
  for (std::size_t h = e.length; h-- > 0;) {
    running = atlas.event(e, h).reward + gamma * running;
    tails[h] = running;
  }
}

void add_score(const Table& probs, std::size_t y, std::size_t a, Eigen::Ref<Eigen::VectorXd> flat_score) {
  const Eigen::Index na = probs.cols();
  const Eigen::Index base = static_cast<Eigen::Index>(y) * na;
  for (Eigen::Index b = 0; b < na; ++b) flat_score[base + b] -= probs(static_cast<Eigen::Index>(y), b);
  flat_score[base + static_cast<Eigen::Index>(a)] += 1.0;
}

// Probability of every distinct h-prefix under two policies. Ended entries
// (length < h) are their own atoms.
std::map<std::vector<std::size_t>, std::pair<double, double>> prefix_masses(const TrajectoryAtlas& atlas,
                                                                            const std::vector<double>& fp,
                                                                            const std::vector<double>& fq,
                                                                            std::size_t h) {
  std::map<std::vector<std::size_t>, std::pair<double, double>> groups;
  std::vector<std::size_t> key;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    const std::size_t n = std::min(h, e.length);
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const auto& ev = atlas.event(e, k);
      key.push_back(ev.latent);
      key.push_back(ev.obs);
      key.push_back(ev.action);
    }
    key.push_back(e.length < h ? 1 : 0);
    auto& slot = groups[key];
    slot.first += fp[i];
    slot.second += fq[i];
  }
  return groups;
}

}  // namespace

double prefix_weight(double gamma, std::size_t h) {
  return std::pow(gamma, static_cast<double>(static_cast<int>(h) - kPrefixGammaOffset));
}

TrajectoryAtlas TrajectoryAtlas::enumerate(const PomdpSpec& spec, std::size_t tau_max) {
  if (tau_max == 0) throw SizeError("tau_max must be positive");
  const double base = static_cast<double>(spec.num_nonterminal_latent() * spec.num_nonterminal_obs() *
                                          spec.num_actions());
  if (std::pow(base, static_cast<double>(tau_max)) > kMaxEntries)
    throw SizeError("(|X||Y||A|)^tau_max exceeds the enumeration budget");
  TrajectoryAtlas atlas(spec, tau_max);
  Enumerator en{spec, tau_max, {}, atlas.entries_, atlas.events_};
  for (std::size_t x = 0; x < spec.num_nonterminal_latent(); ++x) {
    if (spec.init(x) <= 0.0) continue;
    for (std::size_t y = 0; y < spec.num_obs(); ++y) {
      const double po = spec.observation(x, y);
      if (po <= 0.0) continue;
      en.expand(x, y, spec.init(x) * po, 0.0, 1.0);
    }
  }
  return atlas;
}

TrajectoryAtlas TrajectoryAtlas::enumerate(const PomdpSpec& spec) { return enumerate(spec, spec.max_steps()); }

Trajectory TrajectoryAtlas::trajectory(std::size_t i) const {
  const auto& e = entries_.at(i);
  Trajectory t;
  t.events.assign(events_.begin() + static_cast<std::ptrdiff_t>(e.offset),
                  events_.begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
  t.next_latent = e.next_latent;
  t.next_obs = e.next_obs;
  t.terminated_naturally = e.terminated_naturally;
  return t;
}

std::vector<double> trajectory_probs(const TrajectoryAtlas& atlas, const PolicyParams& policy) {
  check_policy_shape(atlas.spec(), policy);
  const Table probs = policy.probabilities();
  std::vector<double> f(atlas.size());
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    double p = e.model_prob;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      p *= probs(static_cast<Eigen::Index>(ev.obs), static_cast<Eigen::Index>(ev.action));
    }
    f[i] = p;
  }
  return f;
}

double total_mass(const TrajectoryAtlas& atlas, const PolicyParams& policy) {
  double total = 0.0;
  for (double p : trajectory_probs(atlas, policy)) total += p;
  return total;
}

double eta(const TrajectoryAtlas& atlas, const PolicyParams& policy) {
  const auto f = trajectory_probs(atlas, policy);
  double total = 0.0;
  for (std::size_t i = 0; i < atlas.size(); ++i) total += f[i] * atlas.entries()[i].expected_return;
  return total;
}

Table grad_eta(const TrajectoryAtlas& atlas, const PolicyParams& policy) {
  const auto f = trajectory_probs(atlas, policy);
  Table grad = Table::Zero(policy.logits().rows(), policy.logits().cols());
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const Trajectory t = atlas.trajectory(i);
    grad += (f[i] * atlas.entries()[i].expected_return) * trajectory_score(policy, t);
  }
  return grad;
}

Table grad_eta_score_function(const TrajectoryAtlas& atlas, const PolicyParams& policy) {
  check_policy_shape(atlas.spec(), policy);
  const Table probs = policy.probabilities();
  const Eigen::Index na = probs.cols();
  Table grad = Table::Zero(probs.rows(), na);
  for (const auto& e : atlas.entries()) {
    for (std::size_t h = 0; h < e.length; ++h) {
      double others = e.model_prob;
      for (std::size_t k = 0; k < e.length; ++k) {
        if (k == h) continue;
        const auto& ev = atlas.event(e, k);
        others *= probs(static_cast<Eigen::Index>(ev.obs), static_cast<Eigen::Index>(ev.action));
      }
      const auto& ev = atlas.event(e, h);
      const auto y = static_cast<Eigen::Index>(ev.obs);
      const auto a = static_cast<Eigen::Index>(ev.action);
      const double p_a = probs(y, a);
      for (Eigen::Index b = 0; b < na; ++b) {
        const double dpi = p_a * ((a == b ? 1.0 : 0.0) - probs(y, b));
        grad(y, b) += e.expected_return * others * dpi;
      }
    }
  }
  return grad;
}

Eigen::MatrixXd fisher(const TrajectoryAtlas& atlas, const PolicyParams& policy, bool discounted) {
  const auto f = trajectory_probs(atlas, policy);
  const Table probs = policy.probabilities();
  const auto d = static_cast<Eigen::Index>(policy.dim());
  const double gamma = atlas.spec().gamma();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd s(d);
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    s.setZero();
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      add_score(probs, ev.obs, ev.action, s);
      if (!discounted) continue;
      // Prefix h+1 holds the first h+1 events; once the entry has ended every
      // later prefix carries the full score.
      double w = prefix_weight(gamma, h + 1);
      if (h + 1 == e.length)
        for (std::size_t k = e.length + 1; k <= atlas.horizon(); ++k) w += prefix_weight(gamma, k);
      out.noalias() += (f[i] * w) * s * s.transpose();
    }
    if (!discounted) out.noalias() += f[i] * s * s.transpose();
  }
  return out;
}

double kl(const TrajectoryAtlas& atlas, const PolicyParams& from, const PolicyParams& to, KlVariant variant) {
  if (variant == KlVariant::kGamma) {
    const auto per = prefix_kl(atlas, from, to);
    const double gamma = atlas.spec().gamma();
    double total = 0.0;
    for (std::size_t h = 0; h < per.size(); ++h) total += prefix_weight(gamma, h + 1) * per[h];
    return total;
  }
  const auto f = trajectory_probs(atlas, from);
  const Table lp_from = from.log_probabilities();
  const Table lp_to = to.log_probabilities();
  double total = 0.0;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    double log_ratio = 0.0;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      const auto y = static_cast<Eigen::Index>(ev.obs), a = static_cast<Eigen::Index>(ev.action);
      log_ratio += lp_from(y, a) - lp_to(y, a);
    }
    total += f[i] * log_ratio;
  }
  return total;
}

std::vector<double> prefix_kl(const TrajectoryAtlas& atlas, const PolicyParams& from, const PolicyParams& to) {
  check_policy_shape(atlas.spec(), from);
  const auto f_to = trajectory_probs(atlas, to);
  const Table lp_from = from.log_probabilities();
  const Table lp_to = to.log_probabilities();
  std::vector<double> per(atlas.horizon(), 0.0);
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    double cumulative = 0.0;
    for (std::size_t h = 0; h < atlas.horizon(); ++h) {
      if (h < e.length) {
        const auto& ev = atlas.event(e, h);
        const auto y = static_cast<Eigen::Index>(ev.obs), a = static_cast<Eigen::Index>(ev.action);
        cumulative += lp_to(y, a) - lp_from(y, a);
      }
      per[h] += f_to[i] * cumulative;
    }
  }
  return per;
}

double total_variation(const TrajectoryAtlas& atlas, const PolicyParams& p, const PolicyParams& q) {
  const auto fp = trajectory_probs(atlas, p);
  const auto fq = trajectory_probs(atlas, q);
  double total = 0.0;
  for (std::size_t i = 0; i < atlas.size(); ++i) total += std::abs(fp[i] - fq[i]);
  return 0.5 * total;
}

std::vector<double> prefix_total_variation(const TrajectoryAtlas& atlas, const PolicyParams& p,
                                           const PolicyParams& q) {
  const auto fp = trajectory_probs(atlas, p);
  const auto fq = trajectory_probs(atlas, q);
  std::vector<double> out(atlas.horizon(), 0.0);
  for (std::size_t h = 1; h <= atlas.horizon(); ++h) {
    double total = 0.0;
    for (const auto& [key, masses] : prefix_masses(atlas, fp, fq, h)) total += std::abs(masses.first - masses.second);
    out[h - 1] = 0.5 * total;
  }
  return out;
}

ConditionalTables::ConditionalTables(const TrajectoryAtlas& atlas, const PolicyParams& policy)
    : ny_(atlas.spec().num_obs()),
      na_(atlas.spec().num_actions()),
      horizon_(atlas.horizon()),
      max_steps_(atlas.spec().max_steps()) {
  const auto f = trajectory_probs(atlas, policy);
  const std::size_t v_size = horizon_ * ny_ * (ny_ + 1) * (na_ + 1);
  const std::size_t q_size = horizon_ * ny_ * na_ * ny_;
  std::vector<double> v_weight(v_size, 0.0), q_weight(q_size, 0.0);
  v_.assign(v_size, 0.0);
  q_.assign(q_size, 0.0);
  joint_mask_.assign(q_size * (ny_ + 1) * (na_ + 1), 0);
  std::vector<double> tails;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    if (f[i] <= 0.0) continue;
    entry_tails(atlas, e, atlas.spec().gamma(), tails);
    std::size_t y_prev = ny_, a_prev = na_;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      const std::size_t y_next = atlas.obs_after(e, h);
      const std::size_t vi = v_index(h, ev.obs, y_prev, a_prev);
      v_weight[vi] += f[i];
      v_[vi] += f[i] * tails[h];
      const std::size_t qi = q_index(h, y_next, ev.action, ev.obs);
      q_weight[qi] += f[i];
      q_[qi] += f[i] * tails[h];
      joint_mask_[joint_index(h, y_next, ev.action, ev.obs, y_prev, a_prev)] = 1;
      y_prev = ev.obs;
      a_prev = ev.action;
    }
  }
  v_mask_.assign(v_size, 0);
  q_mask_.assign(q_size, 0);
  for (std::size_t k = 0; k < v_size; ++k)
    if (v_weight[k] > 0.0) {
      v_[k] /= v_weight[k];
      v_mask_[k] = 1;
    }
  for (std::size_t k = 0; k < q_size; ++k)
    if (q_weight[k] > 0.0) {
      q_[k] /= q_weight[k];
      q_mask_[k] = 1;
    }
}

bool ConditionalTables::v_defined(std::size_t h, std::size_t y, std::size_t y_prev, std::size_t a_prev) const {
  if (h >= horizon_ || y >= ny_ || y_prev > ny_ || a_prev > na_) return false;
  return v_mask_[v_index(h, y, y_prev, a_prev)] != 0;
}

bool ConditionalTables::q_defined(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y) const {
  if (h >= horizon_ || y_next >= ny_ || a >= na_ || y >= ny_) return false;
  return q_mask_[q_index(h, y_next, a, y)] != 0;
}

bool ConditionalTables::a_defined(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y,
                                  std::size_t y_prev, std::size_t a_prev) const {
  if (!q_defined(h, y_next, a, y) || !v_defined(h, y, y_prev, a_prev)) return false;
  return joint_mask_[joint_index(h, y_next, a, y, y_prev, a_prev)] != 0;
}

double ConditionalTables::v(std::size_t h, std::size_t y, std::size_t y_prev, std::size_t a_prev) const {
  if (!v_defined(h, y, y_prev, a_prev))
    throw MaskedEntryError("V read at a zero-probability context (h=" + std::to_string(h) + ")");
  return v_[v_index(h, y, y_prev, a_prev)];
}

double ConditionalTables::q(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y) const {
  if (!q_defined(h, y_next, a, y))
    throw MaskedEntryError("Q read at a zero-probability context (h=" + std::to_string(h) + ")");
  return q_[q_index(h, y_next, a, y)];
}

double ConditionalTables::advantage(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y,
                                    std::size_t y_prev, std::size_t a_prev) const {
  if (!a_defined(h, y_next, a, y, y_prev, a_prev))
    throw MaskedEntryError("A read at a zero-probability context (h=" + std::to_string(h) + ")");
  return q_[q_index(h, y_next, a, y)] - v_[v_index(h, y, y_prev, a_prev)];
}

double ConditionalTables::continuation(std::size_t h, std::size_t y_next, std::size_t y, std::size_t a) const {
  if (y_next + 1 == ny_ || h + 1 >= max_steps_ || h + 1 >= horizon_) return 0.0;
  return v(h + 1, y_next, y, a);
}

AveragedAdvantage::AveragedAdvantage(const TrajectoryAtlas& atlas, const ConditionalTables& tables,
                                     const PolicyParams& avg_policy) {
  const auto& spec = atlas.spec();
  check_policy_shape(spec, avg_policy);
  const Table probs = avg_policy.probabilities();
  const double gamma = spec.gamma();
  const StartIndex start = tables.start();
  std::map<std::array<std::size_t, 5>, double> cache;
  auto compute = [&](std::size_t h, std::size_t x, std::size_t y, std::size_t y_prev, std::size_t a_prev) {
    double g = 0.0;
    for (std::size_t a = 0; a < spec.num_actions(); ++a) {
      double inner = 0.0;
      for (std::size_t xn = 0; xn < spec.num_latent(); ++xn) {
        const double pt = spec.transition(x, a, xn);
        if (pt <= 0.0) continue;
        for (std::size_t yn = 0; yn < spec.num_obs(); ++yn) {
          const double po = spec.observation(xn, yn);
          if (po <= 0.0) continue;
          inner += pt * po * tables.advantage(h, yn, a, y, y_prev, a_prev);
        }
      }
      g += probs(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(a)) * inner;
    }
    return g;
  };
  offsets_.reserve(atlas.size());
  sums_.reserve(atlas.size());
  for (const auto& e : atlas.entries()) {
    offsets_.push_back(values_.size());
    std::size_t y_prev = start.obs, a_prev = start.action;
    double sum = 0.0, discount = 1.0;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      const std::array<std::size_t, 5> key{h, ev.latent, ev.obs, y_prev, a_prev};
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, compute(h, ev.latent, ev.obs, y_prev, a_prev)).first;
      values_.push_back(it->second);
      sum += discount * it->second;
      discount *= gamma;
      y_prev = ev.obs;
      a_prev = ev.action;
    }
    sums_.push_back(sum);
  }
}

double surrogate_L(const TrajectoryAtlas& atlas, const ConditionalTables& old_tables, double eta_old,
                   const std::vector<double>& old_probs, const PolicyParams& policy_new) {
  const AveragedAdvantage avg(atlas, old_tables, policy_new);
  double total = 0.0;
  for (std::size_t i = 0; i < atlas.size(); ++i) total += old_probs[i] * avg.discounted_sum(i);
  return eta_old + total;
}

double surrogate_L(const TrajectoryAtlas& atlas, const PolicyParams& policy_old, const PolicyParams& policy_new) {
  const ConditionalTables tables(atlas, policy_old);
  return surrogate_L(atlas, tables, eta(atlas, policy_old), trajectory_probs(atlas, policy_old), policy_new);
}

double expected_discounted_advantage(const TrajectoryAtlas& atlas, const ConditionalTables& base_tables,
                                     const PolicyParams& policy_eval) {
  const auto f = trajectory_probs(atlas, policy_eval);
  const double gamma = atlas.spec().gamma();
  const StartIndex start = base_tables.start();
  double total = 0.0;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    std::size_t y_prev = start.obs, a_prev = start.action;
    double sum = 0.0, discount = 1.0;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      sum += discount * base_tables.advantage(h, atlas.obs_after(e, h), ev.action, ev.obs, y_prev, a_prev);
      discount *= gamma;
      y_prev = ev.obs;
      a_prev = ev.action;
    }
    total += f[i] * sum;
  }
  return total;
}

EpsilonSpans epsilon_spans(const TrajectoryAtlas& atlas, const PolicyParams& policy_old,
                           const PolicyParams& avg_policy) {
  const ConditionalTables tables(atlas, policy_old);
  const AveragedAdvantage avg(atlas, tables, avg_policy);
  double g_max = 0.0, g_min = 0.0;
  double s_max = -std::numeric_limits<double>::infinity(), s_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    for (std::size_t h = 0; h < e.length; ++h) {
      g_max = std::max(g_max, avg.at(i, h));
      g_min = std::min(g_min, avg.at(i, h));
    }
    s_max = std::max(s_max, avg.discounted_sum(i));
    s_min = std::min(s_min, avg.discounted_sum(i));
  }
  return {atlas.size() == 0 ? 0.0 : s_max - s_min, g_max - g_min};
}

double epsilon_recomputed(const TrajectoryAtlas& atlas, const PolicyParams& policy_old,
                          const PolicyParams& avg_policy) {
  const auto& spec = atlas.spec();
  const ConditionalTables tables(atlas, policy_old);
  const Table probs = avg_policy.probabilities();
  const StartIndex start = tables.start();
  double s_max = -std::numeric_limits<double>::infinity(), s_min = std::numeric_limits<double>::infinity();
  for (const auto& e : atlas.entries()) {
    std::size_t y_prev = start.obs, a_prev = start.action;
    double sum = 0.0;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      double g = 0.0;
      for (std::size_t xn = 0; xn < spec.num_latent(); ++xn)
        for (std::size_t yn = 0; yn < spec.num_obs(); ++yn)
          for (std::size_t a = 0; a < spec.num_actions(); ++a) {
            const double w = probs(static_cast<Eigen::Index>(ev.obs), static_cast<Eigen::Index>(a)) *
                             spec.transition(ev.latent, a, xn) * spec.observation(xn, yn);
            if (w > 0.0) g += w * tables.advantage(h, yn, a, ev.obs, y_prev, a_prev);
          }
      sum += std::pow(spec.gamma(), static_cast<double>(h)) * g;
      y_prev = ev.obs;
      a_prev = ev.action;
    }
    s_max = std::max(s_max, sum);
    s_min = std::min(s_min, sum);
  }
  return atlas.size() == 0 ? 0.0 : s_max - s_min;
}

double eta_backward_induction(const PomdpSpec& spec, const PolicyParams& policy) {
  check_policy_shape(spec, policy);
  const Table probs = policy.probabilities();
  const std::size_t nx = spec.num_latent(), ny = spec.num_obs(), na = spec.num_actions();
  std::vector<double> next(nx * ny, 0.0), cur(nx * ny, 0.0);
  for (std::size_t step = spec.max_steps(); step-- > 0;) {
    for (std::size_t x = 0; x + 1 < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) {
        double w = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
          double qa = 0.0;
          for (std::size_t xn = 0; xn < nx; ++xn)
            for (std::size_t yn = 0; yn < ny; ++yn) {
              const double p = spec.transition(x, a, xn) * spec.observation(xn, yn);
              if (p <= 0.0) continue;
              const double cont = xn == spec.terminal_latent() ? 0.0 : next[xn * ny + yn];
              qa += p * (spec.reward_mean(y, a, yn) + spec.gamma() * cont);
            }
          w += probs(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(a)) * qa;
        }
        cur[x * ny + y] = w;
      }
    std::swap(cur, next);
  }
  double total = 0.0;
  for (std::size_t x = 0; x + 1 < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) total += spec.init(x) * spec.observation(x, y) * next[x * ny + y];
  return total;
}

std::vector<double> latent_advantage(const PomdpSpec& spec, const PolicyParams& policy) {
  check_policy_shape(spec, policy);
  if (spec.num_obs() != spec.num_latent()) throw SpecError("latent advantage needs an identity observation map");
  for (std::size_t x = 0; x < spec.num_latent(); ++x)
    if (spec.observation(x, x) != 1.0) throw SpecError("latent advantage needs an identity observation map");
  const Table probs = policy.probabilities();
  const std::size_t nx = spec.num_latent(), na = spec.num_actions(), steps = spec.max_steps();
  std::vector<double> adv(steps * nx * na, 0.0);
  std::vector<double> v_next(nx, 0.0), v_cur(nx, 0.0), q(nx * na, 0.0);
  for (std::size_t h = steps; h-- > 0;) {
    for (std::size_t x = 0; x + 1 < nx; ++x) {
      double v = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        double qa = 0.0;
        for (std::size_t xn = 0; xn < nx; ++xn) {
          const double pt = spec.transition(x, a, xn);
          if (pt <= 0.0) continue;
          const double cont = xn == spec.terminal_latent() ? 0.0 : v_next[xn];
          qa += pt * (spec.reward_mean(x, a, xn) + spec.gamma() * cont);
        }
        q[x * na + a] = qa;
        v += probs(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) * qa;
      }
      v_cur[x] = v;
      for (std::size_t a = 0; a < na; ++a) adv[(h * nx + x) * na + a] = q[x * na + a] - v;
    }
    std::swap(v_cur, v_next);
  }
  return adv;
}

PooledValues pooled_values(const TrajectoryAtlas& atlas, const PolicyParams& policy) {
  const auto& spec = atlas.spec();
  const auto f = trajectory_probs(atlas, policy);
  const std::size_t ny = spec.num_obs(), na = spec.num_actions();
  const std::size_t cells = ny * (ny + 1) * (na + 1);
  PooledValues out;
  out.value.assign(cells, 0.0);
  out.expected_visits.assign(cells, 0.0);
  out.advantage.assign(cells * na, 0.0);
  out.action_visits.assign(cells * na, 0.0);
  std::vector<double> tails;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const auto& e = atlas.entries()[i];
    entry_tails(atlas, e, spec.gamma(), tails);
    std::size_t y_prev = ny, a_prev = na;
    for (std::size_t h = 0; h < e.length; ++h) {
      const auto& ev = atlas.event(e, h);
      const std::size_t c = (ev.obs * (ny + 1) + y_prev) * (na + 1) + a_prev;
      out.expected_visits[c] += f[i];
      out.value[c] += f[i] * tails[h];
      out.action_visits[c * na + ev.action] += f[i];
      out.advantage[c * na + ev.action] += f[i] * tails[h];
      y_prev = ev.obs;
      a_prev = ev.action;
    }
  }
  for (std::size_t c = 0; c < cells; ++c) {
    out.value[c] = out.expected_visits[c] > 0.0 ? out.value[c] / out.expected_visits[c]
                                                 : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t a = 0; a < na; ++a) {
      double& slot = out.advantage[c * na + a];
      slot = out.action_visits[c * na + a] > 0.0 ? slot / out.action_visits[c * na + a] - out.value[c]
                                                 : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace gtrpo
