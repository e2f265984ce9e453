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

#ifndef GTRPO_ORACLE_HPP_
#define GTRPO_ORACLE_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "gtrpo/pomdp.hpp"

#ifndef GTRPO_PREFIX_GAMMA_OFFSET
#define GTRPO_PREFIX_GAMMA_OFFSET 0
#endif

namespace gtrpo {

/// Prefix h (1-based) of the discounted divergence and of F_gamma is weighted
/// by gamma^(h - kPrefixGammaOffset). The default 0 gives gamma^h.
inline constexpr int kPrefixGammaOffset = GTRPO_PREFIX_GAMMA_OFFSET;

/// gamma^(h - kPrefixGammaOffset), with h 1-based.
double prefix_weight(double gamma, std::size_t h);

/// One positive-probability trajectory of the model. The policy factor is not
/// stored: f(tau; theta) = model_prob * prod_h pi_theta(a_h | y_h).
struct AtlasEntry {
  std::size_t offset = 0;  ///< first event in TrajectoryAtlas::events()
  std::size_t length = 0;
  std::size_t next_latent = 0;
  std::size_t next_obs = 0;
  bool terminated_naturally = false;
  double model_prob = 0.0;
  double expected_return = 0.0;  ///< sum_h gamma^(h-1) Rbar[y_h][a_h][y_{h+1}]
};

/// Every trajectory of a spec with positive model probability, up to tau_max
/// events. Event rewards hold Rbar[y_h][a_h][y_{h+1}]. Immutable.
class TrajectoryAtlas {
 public:
  /// Entry budget: (|X_nt| |Y_nt| |A|)^tau_max must not exceed this.
  static constexpr double kMaxEntries = 1e7;

  /// Throws SizeError when the budget is exceeded and MassLeakError when a
  /// trajectory of length tau_max neither terminates nor hits max_steps.
  static TrajectoryAtlas enumerate(const PomdpSpec& spec, std::size_t tau_max);

  /// enumerate(spec, spec.max_steps()).
  static TrajectoryAtlas enumerate(const PomdpSpec& spec);

  const PomdpSpec& spec() const noexcept { return spec_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<AtlasEntry>& entries() const noexcept { return entries_; }
  const std::vector<Event>& events() const noexcept { return events_; }

  const Event& event(const AtlasEntry& e, std::size_t h) const { return events_[e.offset + h]; }

  /// Observation after step h (0-based), the successor for the last step.
  std::size_t obs_after(const AtlasEntry& e, std::size_t h) const {
    return h + 1 < e.length ? events_[e.offset + h + 1].obs : e.next_obs;
  }

  /// Materializes entry i as a Trajectory (rewards are the means).
  Trajectory trajectory(std::size_t i) const;

 private:
  TrajectoryAtlas(PomdpSpec spec, std::size_t horizon) : spec_(std::move(spec)), horizon_(horizon) {}

  PomdpSpec spec_;
  std::size_t horizon_;
  std::vector<AtlasEntry> entries_;
  std::vector<Event> events_;
};

/// f(tau; theta) for every entry, in entry order.
std::vector<double> trajectory_probs(const TrajectoryAtlas& atlas, const PolicyParams& policy);

/// Mass of the first min(h, |tau|) events of each entry is the prefix
/// distribution at step h; this returns sum_tau f(tau).
double total_mass(const TrajectoryAtlas& atlas, const PolicyParams& policy);

double eta(const TrajectoryAtlas& atlas, const PolicyParams& policy);

/// sum_tau f(tau) * score(tau) * R(tau).
Table grad_eta(const TrajectoryAtlas& atlas, const PolicyParams& policy);

/// Same gradient from d f / d theta written out with the product rule and
/// d pi(a|y) / d theta[y][b] = pi(a|y) (1{a=b} - pi(b|y)). Shares no code with
/// grad_eta beyond the atlas.
Table grad_eta_score_function(const TrajectoryAtlas& atlas, const PolicyParams& policy);

/// discounted=false: sum_tau f s s^T with the full-trajectory score.
/// discounted=true: sum_h prefix_weight(h) sum_tau f s_h s_h^T over prefixes.
Eigen::MatrixXd fisher(const TrajectoryAtlas& atlas, const PolicyParams& policy, bool discounted);

enum class KlVariant { kTrajectory, kGamma };

/// kTrajectory: KL(f_from || f_to).
/// kGamma: sum_h prefix_weight(h) KL(prefix_h under `to` || prefix_h under `from`).
double kl(const TrajectoryAtlas& atlas, const PolicyParams& from, const PolicyParams& to, KlVariant variant);

/// Per-prefix divergences KL(prefix_h under `to` || prefix_h under `from`), h = 1..horizon.
std::vector<double> prefix_kl(const TrajectoryAtlas& atlas, const PolicyParams& from, const PolicyParams& to);

/// 1/2 sum_tau |f_p - f_q|.
double total_variation(const TrajectoryAtlas& atlas, const PolicyParams& p, const PolicyParams& q);

/// Per-prefix total variation, h = 1..horizon.
std::vector<double> prefix_total_variation(const TrajectoryAtlas& atlas, const PolicyParams& p,
                                           const PolicyParams& q);

/// Start marker for y_prev / a_prev at the first step.
struct StartIndex {
  std::size_t obs;
  std::size_t action;
};

/// Exact conditional value tables of one policy. Step index h is 0-based here
/// (h = 0 is the first step, whose context is (y, START, START)).
///
///   V[h][y][y_prev][a_prev] = E[G_h | y_h, y_{h-1}, a_{h-1}]
///   Q[h][y_next][a][y]      = E[G_h | y_h, a_h, y_{h+1}]
///   A[h][y_next][a][y][y_prev][a_prev] = Q - V
///
/// with G_h = sum_{h' >= h} gamma^(h'-h) r_{h'}. Entries whose context has
/// zero probability are masked; reading one throws MaskedEntryError.
class ConditionalTables {
 public:
  ConditionalTables(const TrajectoryAtlas& atlas, const PolicyParams& policy);

  std::size_t horizon() const noexcept { return horizon_; }
  StartIndex start() const noexcept { return {ny_, na_}; }

  bool v_defined(std::size_t h, std::size_t y, std::size_t y_prev, std::size_t a_prev) const;
  bool q_defined(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y) const;
  bool a_defined(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y, std::size_t y_prev,
                 std::size_t a_prev) const;

  double v(std::size_t h, std::size_t y, std::size_t y_prev, std::size_t a_prev) const;
  double q(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y) const;
  double advantage(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y, std::size_t y_prev,
                   std::size_t a_prev) const;

  /// V_{h+1}(y_next, y, a) with the episode-end convention: 0 when y_next is
  /// the terminal observation or h+1 reaches max_steps.
  double continuation(std::size_t h, std::size_t y_next, std::size_t y, std::size_t a) const;

 private:
  std::size_t v_index(std::size_t h, std::size_t y, std::size_t y_prev, std::size_t a_prev) const {
    return ((h * ny_ + y) * (ny_ + 1) + y_prev) * (na_ + 1) + a_prev;
  }
  std::size_t q_index(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y) const {
    return ((h * ny_ + y_next) * na_ + a) * ny_ + y;
  }
  std::size_t joint_index(std::size_t h, std::size_t y_next, std::size_t a, std::size_t y, std::size_t y_prev,
                          std::size_t a_prev) const {
    return q_index(h, y_next, a, y) * (ny_ + 1) * (na_ + 1) + y_prev * (na_ + 1) + a_prev;
  }

  std::size_t ny_, na_, horizon_, max_steps_;
  std::vector<double> v_, q_;
  std::vector<char> v_mask_, q_mask_, joint_mask_;
};

/// Abar(y_next, y, h, y_prev, a_prev) with a ~ avg_policy, further averaged
/// over y_next through the model from the latent state x_h:
///
///   g_h = sum_a avg(a|y_h) sum_x' T(x'|x_h,a) sum_y' O(y'|x') A(y', a, y_h, ...)
///
/// g is a function of the prefix (x_h, y_h, y_{h-1}, a_{h-1}), so it is
/// stored per atlas position.
class AveragedAdvantage {
 public:
  AveragedAdvantage(const TrajectoryAtlas& atlas, const ConditionalTables& tables, const PolicyParams& avg_policy);

  /// g at event h of entry i.
  double at(std::size_t entry, std::size_t h) const { return values_[offsets_[entry] + h]; }

  /// sum_h gamma^(h-1) g_h along entry i.
  double discounted_sum(std::size_t entry) const { return sums_[entry]; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
  std::vector<double> sums_;
};

/// L_old(new) = eta(old) + E_{tau~old}[ sum_h gamma^(h-1) g_h ], g averaged under `new`.
double surrogate_L(const TrajectoryAtlas& atlas, const PolicyParams& policy_old, const PolicyParams& policy_new);

/// Same, reusing tables of policy_old.
double surrogate_L(const TrajectoryAtlas& atlas, const ConditionalTables& old_tables, double eta_old,
                   const std::vector<double>& old_probs, const PolicyParams& policy_new);

/// E_{tau~policy_eval}[ sum_h gamma^(h-1) A_base(y_{h+1}, a_h, y_h, h, y_{h-1}, a_{h-1}) ]
/// read at the realized actions and observations.
double expected_discounted_advantage(const TrajectoryAtlas& atlas, const ConditionalTables& base_tables,
                                     const PolicyParams& policy_eval);

/// epsilon: max_tau G - min_tau G with G = sum_h gamma^(h-1) g_h.
/// epsilon_prime: max - min over single g values, 0 included (ended prefixes contribute 0).
struct EpsilonSpans {
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
};

EpsilonSpans epsilon_spans(const TrajectoryAtlas& atlas, const PolicyParams& policy_old,
                           const PolicyParams& avg_policy);

/// Second pass for epsilon: recomputes G per entry from the tables directly.
double epsilon_recomputed(const TrajectoryAtlas& atlas, const PolicyParams& policy_old,
                          const PolicyParams& avg_policy);

/// Backward induction on the (x, y) pair chain:
///   W_h(x,y) = sum_a pi(a|y) sum_x' T sum_y' O [Rbar(y,a,y') + gamma W_{h+1}(x',y')].
/// eta = sum_x P1(x) sum_y O(y|x) W_1(x,y). Independent of the atlas.
double eta_backward_induction(const PomdpSpec& spec, const PolicyParams& policy);

/// Latent-state advantage Atilde_h(x, a) = Qtilde_h(x,a) - Vtilde_h(x) of an
/// identity-observation spec, h 0-based, indexed [h][x][a].
std::vector<double> latent_advantage(const PomdpSpec& spec, const PolicyParams& policy);

/// Values pooled over h, the limit of an h-independent sample mean: for each
/// context (y, y_prev, a_prev), E[sum_h 1{ctx_h} G_h] / E[sum_h 1{ctx_h}].
/// Indexed [y][y_prev][a_prev] with the START markers of ConditionalTables.
struct PooledValues {
  std::vector<double> value;
  std::vector<double> expected_visits;  ///< per episode
  std::vector<double> advantage;        ///< [y][y_prev][a_prev][a]: pooled E[G|ctx,a] - value
  std::vector<double> action_visits;    ///< [y][y_prev][a_prev][a]
};

PooledValues pooled_values(const TrajectoryAtlas& atlas, const PolicyParams& policy);

}  // namespace gtrpo

#endif  // GTRPO_ORACLE_HPP_
