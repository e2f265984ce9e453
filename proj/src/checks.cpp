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

#include "gtrpo/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gtrpo/clipping.hpp"
#include "gtrpo/env_suite.hpp"
#include "gtrpo/error.hpp"
#include "gtrpo/estimation.hpp"
#include "gtrpo/oracle.hpp"
#include "gtrpo/random_spec.hpp"
#include "gtrpo/trust_region.hpp"
#include "gtrpo/update_rules.hpp"

namespace gtrpo {
namespace {

class Recorder {
 public:
  Recorder(std::vector<CheckResult>& out, std::string suite) : out_(out), suite_(std::move(suite)) {}

  /// Passes when measured <= tolerance.
  void at_most(const std::string& name, double measured, double tolerance, std::string detail = {},
               bool required = true) {
    push(name, std::isfinite(measured) && measured <= tolerance, measured, tolerance, std::move(detail), required);
  }

  /// Passes when measured >= threshold.
  void at_least(const std::string& name, double measured, double threshold, std::string detail = {}) {
    push(name, std::isfinite(measured) && measured >= threshold, measured, threshold, std::move(detail), true);
  }

  void count_zero(const std::string& name, std::size_t violations, std::size_t cases) {
    push(name, violations == 0, static_cast<double>(violations), 0.0,
         std::to_string(violations) + " violations in " + std::to_string(cases) + " cases", true);
  }

 private:
  void push(const std::string& name, bool passed, double measured, double tolerance, std::string detail,
            bool required) {
    out_.push_back({suite_, name, passed, measured, tolerance, std::move(detail), required});
  }

  std::vector<CheckResult>& out_;
  std::string suite_;
};

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, down = x;
    up[i] += step;
    down[i] -= step;
    g[i] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

/// Same spec with every transition into x_T removed: all episodes run to max_steps.
PomdpSpec fixed_length_spec(const PomdpSpec& spec) {
  PomdpTables t = spec.tables();
  const std::size_t nx = t.num_latent, na = t.num_actions, term = nx - 1;
  for (std::size_t x = 0; x + 1 < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      double* row = &t.transition[(x * na + a) * nx];
      row[term] = 0.0;
      double s = 0.0;
      for (std::size_t k = 0; k < term; ++k) s += row[k];
      for (std::size_t k = 0; k < term; ++k) row[k] /= s;
    }
  return PomdpSpec(std::move(t));
}

// ---------------------------------------------------------------- lemmas

void lemma_checks(std::vector<CheckResult>& out) {
  Recorder rec(out, "lemmas");

  {
    Rng rng(101);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec spec = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const Eigen::VectorXd theta = p.flat();
      auto klf = [&](const Eigen::VectorXd& v) { return kl(atlas, p, p.with_flat(v), KlVariant::kTrajectory); };
      const Eigen::MatrixXd f = fisher(atlas, p, false);
      const double h = 1e-4;
      const Eigen::Index d = theta.size();
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) {
          auto at = [&](double si, double sj) {
            Eigen::VectorXd v = theta;
            v[i] += si * h;
            v[j] += sj * h;
            return klf(v);
          };
          const double hess = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
          worst = std::max({worst, std::abs(hess - f(i, j)), std::abs(hess - f(j, i))});
        }
    }
    rec.at_most("fisher_equals_kl_hessian", worst, 1e-4, "10 random specs, central differences at 1e-4");
  }

  {
    Rng rng(202);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const PomdpSpec spec = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const PolicyParams q = perturbed_policy(rng, p, 1.0);
      const ConditionalTables tables(atlas, p);
      const double lhs = eta(atlas, q) - eta(atlas, p);
      worst = std::max(worst, std::abs(lhs - expected_discounted_advantage(atlas, tables, q)));
    }
    rec.at_most("performance_difference_identity", worst, 1e-9, "20 random (spec, old, new) triples");
  }

  {
    Rng rng(303);
    std::size_t tv_v = 0, kl_new_old = 0, kl_old_new = 0, dg_new_old = 0, dg_old_new = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    const double scales[] = {0.25, 0.5, 1.0, 2.0};
    for (int k = 0; k < 100; ++k) {
      const PomdpSpec spec = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const PolicyParams q = perturbed_policy(rng, p, scales[k % 4]);
      const double gain = eta(atlas, q) - surrogate_L(atlas, p, q);
      const EpsilonSpans eps = epsilon_spans(atlas, p, q);
      const double slack = 1e-9;
      // kl(from, to, kTrajectory) = KL(f_from || f_to); kl(from, to, kGamma) weighs KL(to || from) prefixes.
      const double bounds[] = {
          -eps.epsilon * total_variation(atlas, q, p),
          -eps.epsilon * std::sqrt(0.5 * kl(atlas, q, p, KlVariant::kTrajectory)),
          -eps.epsilon * std::sqrt(0.5 * kl(atlas, p, q, KlVariant::kTrajectory)),
          -eps.epsilon_prime * std::sqrt(kl(atlas, p, q, KlVariant::kGamma)),
          -eps.epsilon_prime * std::sqrt(kl(atlas, q, p, KlVariant::kGamma)),
      };
      std::size_t* counters[] = {&tv_v, &kl_new_old, &kl_old_new, &dg_new_old, &dg_old_new};
      for (int b = 0; b < 5; ++b) {
        *counters[b] += gain < bounds[b] - slack;
        worst_margin = std::min(worst_margin, gain - bounds[b]);
      }
    }
    rec.count_zero("lower_bound_total_variation", tv_v, 100);
    rec.count_zero("lower_bound_trajectory_kl_new_old", kl_new_old, 100);
    rec.count_zero("lower_bound_trajectory_kl_old_new", kl_old_new, 100);
    rec.count_zero("lower_bound_discounted_divergence_new_old", dg_new_old, 100);
    rec.count_zero("lower_bound_discounted_divergence_old_new", dg_old_new, 100);
    rec.at_least("lower_bound_smallest_margin", worst_margin, -1e-9, "min over all bounds of eta - bound");
  }

  {
    Rng rng(404);
    double fd_rel = 0.0, routes = 0.0, contact_value = 0.0, contact_grad = 0.0, eps_two_pass = 0.0;
    for (int k = 0; k < 20; ++k) {
      const PomdpSpec spec = random_small_spec(rng);
      const auto atlas = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const Eigen::VectorXd g = flatten(grad_eta(atlas, p));
      const Eigen::VectorXd fd =
          fd_gradient([&](const Eigen::VectorXd& v) { return eta(atlas, p.with_flat(v)); }, p.flat(), 1e-5);
      fd_rel = std::max(fd_rel, max_abs(g - fd) / std::max(max_abs(g), 1e-300));
      routes = std::max(routes, max_abs(g - flatten(grad_eta_score_function(atlas, p))));

      const ConditionalTables tables(atlas, p);
      const double e = eta(atlas, p);
      const auto probs = trajectory_probs(atlas, p);
      contact_value = std::max(contact_value, std::abs(surrogate_L(atlas, tables, e, probs, p) - e));
      const Eigen::VectorXd lg = fd_gradient(
          [&](const Eigen::VectorXd& v) { return surrogate_L(atlas, tables, e, probs, p.with_flat(v)); }, p.flat(),
          1e-5);
      contact_grad = std::max(contact_grad, max_abs(lg - g) / std::max(max_abs(g), 1e-300));

      const PolicyParams q = perturbed_policy(rng, p, 1.0);
      eps_two_pass = std::max(eps_two_pass, std::abs(epsilon_spans(atlas, p, q).epsilon -
                                                     epsilon_recomputed(atlas, p, q)));
    }
    rec.at_most("grad_eta_matches_finite_differences", fd_rel, 1e-6, "relative, 20 random specs");
    rec.at_most("grad_eta_two_routes_agree", routes, 1e-12);
    rec.at_most("surrogate_equals_eta_at_contact", contact_value, 1e-12);
    rec.at_most("surrogate_gradient_equals_grad_eta_at_contact", contact_grad, 1e-6, "relative");
    rec.at_most("epsilon_two_pass_agree", eps_two_pass, 1e-12);
  }

  {
    Rng rng(505);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec spec = random_small_spec(rng, true);
      const auto atlas = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const ConditionalTables tables(atlas, p);
      const auto latent = latent_advantage(spec, p);
      const std::size_t nx = spec.num_latent(), na = spec.num_actions();
      const StartIndex start = tables.start();
      for (const auto& e : atlas.entries())
        for (std::size_t h = 0; h < e.length; ++h) {
          const Event& ev = atlas.event(e, h);
          const std::size_t yp = h == 0 ? start.obs : atlas.event(e, h - 1).obs;
          const std::size_t ap = h == 0 ? start.action : atlas.event(e, h - 1).action;
          for (std::size_t a = 0; a < na; ++a) {
            double marginal = 0.0;
            for (std::size_t xn = 0; xn < nx; ++xn) {
              const double t = spec.transition(ev.latent, a, xn);
              if (t > 0.0) marginal += t * tables.advantage(h, xn, a, ev.obs, yp, ap);
            }
            worst = std::max(worst, std::abs(marginal - latent[(h * nx + ev.latent) * na + a]));
          }
        }
    }
    rec.at_most("identity_observation_advantage_equals_latent", worst, 1e-10, "10 identity-observation specs");
  }

  {
    const PomdpSpec spec = build_env(EnvConfig{});
    const auto atlas = TrajectoryAtlas::enumerate(spec, 4);
    Rng rng(606);
    double mass = 0.0, induction = 0.0;
    for (int k = 0; k < 20; ++k) {
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions(), 2.0);
      mass = std::max(mass, std::abs(total_mass(atlas, p) - 1.0));
      induction = std::max(induction, std::abs(eta(atlas, p) - eta_backward_induction(spec, p)));
    }
    rec.at_most("twodoor_total_mass", mass, 1e-9, "20 random policies");
    rec.at_most("twodoor_eta_matches_backward_induction", induction, 1e-10);
  }
}

// ------------------------------------------------------------- estimators

void estimator_checks(std::vector<CheckResult>& out) {
  Recorder rec(out, "estimators");

  {
    const PomdpSpec bandit = one_step_bandit(1.0, 0.0);
    const auto atlas = TrajectoryAtlas::enumerate(bandit);
    const PolicyParams uniform(bandit.num_obs(), bandit.num_actions());
    const Table exact = grad_eta(atlas, uniform);
    rec.at_most("bandit_exact_gradient",
                std::max(std::abs(exact(0, 0) - 0.25), std::abs(exact(0, 1) + 0.25)), 1e-15);
    const std::size_t m = 200000;
    const Batch batch = sample_batch(bandit, uniform, m, 11);
    const Table est = mc_policy_gradient(batch, bandit.gamma());
    double worst_z = 0.0;
    for (Eigen::Index a = 0; a < 2; ++a) {
      double sum = 0.0, sum2 = 0.0;
      for (const auto& t : batch.trajectories) {
        const double v = trajectory_score(uniform, t)(0, a) * discounted_return(t, bandit.gamma());
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / m;
      const double se = std::sqrt((sum2 / m - mean * mean) / (m - 1.0));
      worst_z = std::max(worst_z, std::abs(est(0, a) - exact(0, a)) / se);
    }
    rec.at_most("bandit_mc_gradient_within_3se", worst_z, 3.0, "m = 200000, |z| of each logit");
  }

  {
    Rng rng(707);
    const PomdpSpec spec = random_small_spec(rng);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const Eigen::VectorXd exact = flatten(grad_eta(atlas, p));
    const int reps = 30;
    Eigen::MatrixXd draws(exact.size(), reps);
    for (int r = 0; r < reps; ++r)
      draws.col(r) = flatten(mc_policy_gradient(sample_batch(spec, p, 10000, derive_seed(77, r)), spec.gamma()));
    const Eigen::VectorXd mean = draws.rowwise().mean();
    double worst_z = 0.0;
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
      const double var = (draws.row(i).array() - mean[i]).square().sum() / (reps - 1);
      const double se = std::sqrt(var / reps);
      if (se == 0.0) {
        worst_z = std::max(worst_z, mean[i] == exact[i] ? 0.0 : std::numeric_limits<double>::infinity());
        continue;
      }
      worst_z = std::max(worst_z, std::abs(mean[i] - exact[i]) / se);
    }
    rec.at_most("mc_gradient_unbiased_within_4se", worst_z, 4.0, "30 batches of 10000");
  }

  const PomdpSpec twodoor = build_env(EnvConfig{});
  const auto td_atlas = TrajectoryAtlas::enumerate(twodoor);
  {
    Rng rng(808);
    const PolicyParams old_p = random_policy(rng, twodoor.num_obs(), twodoor.num_actions(), 0.5);
    const PolicyParams new_p = perturbed_policy(rng, old_p, 0.5);
    const double truth = kl(td_atlas, old_p, new_p, KlVariant::kTrajectory);
    const Batch batch = sample_batch(twodoor, old_p, 100000, 21);
    const double episodic = empirical_kl(batch, new_p, EmpiricalKlVariant::kEpisodic);
    const double trpo = empirical_kl(batch, new_p, EmpiricalKlVariant::kTrpo);
    const double rel = std::abs(episodic - truth) / truth;
    rec.at_most("episodic_kl_consistent", rel, 0.05, "relative error at m = 100000");
    const double ratio = std::abs(trpo - truth) / std::max(std::abs(episodic - truth), 1e-300);
    rec.at_least("per_step_kl_biased_on_mixed_lengths", ratio, 10.0, "|trpo - kl| / |episodic - kl|");

    const PomdpSpec fixed = fixed_length_spec(random_small_spec(rng));
    const PolicyParams a = random_policy(rng, fixed.num_obs(), fixed.num_actions());
    const PolicyParams b = perturbed_policy(rng, a, 0.5);
    const Batch fb = sample_batch(fixed, a, 2000, 22);
    const double e = empirical_kl(fb, b, EmpiricalKlVariant::kEpisodic);
    const double t = empirical_kl(fb, b, EmpiricalKlVariant::kTrpo);
    const double length = static_cast<double>(fixed.max_steps());
    rec.at_most("equal_length_kl_identity", std::abs(e - length * t) / std::abs(e), 1e-12,
                "episodic = L * per-step on fixed-length episodes");
  }

  {
    const PolicyParams uniform(twodoor.num_obs(), twodoor.num_actions());
    const PooledValues pooled = pooled_values(td_atlas, uniform);
    const Batch batch = sample_batch(twodoor, uniform, 50000, 33);
    const double gamma = twodoor.gamma();
    const VTable v = fit_v_table(batch, gamma, ValueContext::kHistory);
    double worst_v = 0.0;
    std::size_t cells = 0;
    for (std::size_t c = 0; c < v.num_cells(); ++c) {
      if (v.count(c) < 30 || !(pooled.expected_visits[c] > 0.0)) continue;
      ++cells;
      worst_v = std::max(worst_v, std::abs(v.value(c) - pooled.value[c]) / v.std_error(c));
    }
    rec.at_most("value_table_within_3se", worst_v, 3.0, std::to_string(cells) + " cells, m = 50000");

    // Calibration of the clustered standard error over independent batches:
    // z-scores of every visited cell should have unit variance.
    double z2 = 0.0;
    std::size_t zs = 0, beyond = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
      const Batch b = sample_batch(twodoor, uniform, 50000, derive_seed(131, r));
      const VTable fit = fit_v_table(b, gamma, ValueContext::kHistory);
      for (std::size_t c = 0; c < fit.num_cells(); ++c) {
        if (fit.count(c) < 30 || !(pooled.expected_visits[c] > 0.0)) continue;
        const double z = (fit.value(c) - pooled.value[c]) / fit.std_error(c);
        z2 += z * z;
        beyond += std::abs(z) > 3.0;
        ++zs;
      }
    }
    rec.at_most("value_table_z_variance", std::abs(z2 / static_cast<double>(zs) - 1.0), 0.3,
                "mean z^2 over " + std::to_string(zs) + " cell estimates in 20 batches");
    rec.at_most("value_table_z_tail_fraction", static_cast<double>(beyond) / static_cast<double>(zs), 0.01,
                "fraction of |z| > 3");

    // Position-averaged advantage per (context, action); the standard error
    // is the episode-clustered delta-method error of mean(G | c, a) - mean(G | c).
    const PositionAdvantages adv = empirical_advantage(batch, v, gamma);
    const std::size_t na = twodoor.num_actions();
    const std::size_t n_cells = v.num_cells();
    std::vector<double> sum_a(n_cells * na, 0.0), n_a(n_cells * na, 0.0), sum_c(n_cells, 0.0), n_c(n_cells, 0.0);
    std::vector<double> adv_sum(n_cells * na, 0.0);
    std::vector<std::vector<double>> g_of(batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t) {
      const auto& traj = batch.trajectories[t];
      g_of[t] = tail_returns(traj, gamma);
      for (std::size_t h = 0; h < traj.length(); ++h) {
        const std::size_t c = v.cell_of(traj, h), a = traj.events[h].action;
        sum_a[c * na + a] += g_of[t][h];
        n_a[c * na + a] += 1.0;
        sum_c[c] += g_of[t][h];
        n_c[c] += 1.0;
        adv_sum[c * na + a] += adv.values[t][h];
      }
    }
    std::vector<double> var(n_cells * na, 0.0);
    std::vector<double> es_a(n_cells * na), en_a(n_cells * na), es_c(n_cells), en_c(n_cells);
    for (std::size_t t = 0; t < batch.size(); ++t) {
      std::fill(es_a.begin(), es_a.end(), 0.0);
      std::fill(en_a.begin(), en_a.end(), 0.0);
      std::fill(es_c.begin(), es_c.end(), 0.0);
      std::fill(en_c.begin(), en_c.end(), 0.0);
      const auto& traj = batch.trajectories[t];
      std::vector<std::size_t> touched;
      for (std::size_t h = 0; h < traj.length(); ++h) {
        const std::size_t c = v.cell_of(traj, h), a = traj.events[h].action;
        es_a[c * na + a] += g_of[t][h];
        en_a[c * na + a] += 1.0;
        es_c[c] += g_of[t][h];
        en_c[c] += 1.0;
        touched.push_back(c);
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (std::size_t c : touched)
        for (std::size_t a = 0; a < na; ++a) {
          const std::size_t k = c * na + a;
          if (n_a[k] == 0.0) continue;
          const double ra = sum_a[k] / n_a[k], rc = sum_c[c] / n_c[c];
          const double e = (es_a[k] - ra * en_a[k]) / n_a[k] - (es_c[c] - rc * en_c[c]) / n_c[c];
          var[k] += e * e;
        }
    }
    double worst_a = 0.0;
    std::size_t pairs = 0;
    for (std::size_t c = 0; c < n_cells; ++c)
      for (std::size_t a = 0; a < na; ++a) {
        const std::size_t k = c * na + a;
        if (n_a[k] < 30 || !(pooled.action_visits[k] > 0.0)) continue;
        ++pairs;
        const double estimate = adv_sum[k] / n_a[k];
        worst_a = std::max(worst_a, std::abs(estimate - pooled.advantage[k]) / std::sqrt(var[k]));
      }
    rec.at_most("advantage_within_3se", worst_a, 3.0, std::to_string(pairs) + " (context, action) pairs");
  }

  {
    const PolicyParams uniform(twodoor.num_obs(), twodoor.num_actions());
    const std::size_t sizes[] = {1000, 10000, 100000};
    std::vector<VTable> fits;
    for (std::size_t k = 0; k < 3; ++k)
      fits.push_back(fit_v_table(sample_batch(twodoor, uniform, sizes[k], 41 + k), twodoor.gamma()));
    std::size_t best = 0;
    for (std::size_t c = 0; c < fits.back().num_cells(); ++c)
      if (fits.back().count(c) > fits.back().count(best)) best = c;
    Eigen::Vector3d lx, ly;
    for (int k = 0; k < 3; ++k) {
      lx[k] = std::log(static_cast<double>(fits[k].count(best)));
      ly[k] = std::log(fits[k].std_error(best));
    }
    const double mx = lx.mean(), my = ly.mean();
    const double slope = ((lx.array() - mx) * (ly.array() - my)).sum() / (lx.array() - mx).square().sum();
    rec.at_most("value_std_error_slope", std::abs(slope + 0.5), 0.1,
                "log-log slope " + std::to_string(slope) + ", expected -0.5");
  }

  {
    const PomdpSpec bandit = one_step_bandit(1.0, 0.0);
    const auto atlas = TrajectoryAtlas::enumerate(bandit);
    const PolicyParams uniform(bandit.num_obs(), bandit.num_actions());
    const CompatibleResult cw = compatible_weights(atlas, uniform);
    const Eigen::VectorXd fo = fisher(atlas, uniform, false) * cw.omega;
    rec.at_most("bandit_compatible_weights_solve_fisher",
                std::max(std::abs(fo[0] - 0.25), std::abs(fo[1] + 0.25)), 1e-8);

    Rng rng(909);
    double residual = 0.0, agreement = 0.0;
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec spec = random_small_spec(rng);
      const auto a = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const Eigen::VectorXd g = flatten(grad_eta(a, p));
      const CompatibleResult c = compatible_weights(a, p);
      const FisherOperator op = FisherOperator::from_atlas(a, p, false, 0.0);
      const CgResult cg = conjugate_gradient(op, g, 0, 1e-12);
      residual = std::max(residual, max_abs(op.apply(c.omega) - g));
      agreement = std::max(agreement, max_abs(c.omega - cg.x) / std::max(max_abs(c.omega), 1.0));
    }
    rec.at_most("compatible_weights_residual", residual, 1e-8, "F omega = grad eta, 10 random specs");
    rec.at_most("compatible_weights_match_cg", agreement, 1e-6, "minimum-norm solutions");

    double worst5 = 0.0, worst05 = 0.0;
    for (int k = 0; k < 10; ++k) {
      const PomdpSpec spec = random_small_spec(rng);
      const auto a = TrajectoryAtlas::enumerate(spec);
      const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
      const FisherOperator op = FisherOperator::from_atlas(a, p, false, 0.0);
      Eigen::VectorXd dir(p.dim());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal(0.0, 1.0);
      dir.normalize();
      for (double norm : {1e-2, 1e-3}) {
        const Eigen::VectorXd d = norm * dir;
        const double ratio = kl(a, p, p.with_flat(p.flat() + d), KlVariant::kTrajectory) / quadratic_constraint(d, op);
        (norm == 1e-2 ? worst5 : worst05) = std::max(norm == 1e-2 ? worst5 : worst05, std::abs(ratio - 1.0));
      }
    }
    rec.at_most("kl_quadratic_ratio_at_1e-2", worst5, 0.05);
    rec.at_most("kl_quadratic_ratio_at_1e-3", worst05, 0.005);

    double cg_err = 0.0;
    for (int k = 0; k < 20; ++k) {
      const int d = 2 + k % 9;
      Eigen::MatrixXd b(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = rng.normal(0.0, 1.0);
      const Eigen::MatrixXd m = b * b.transpose() + 1e-2 * Eigen::MatrixXd::Identity(d, d);
      Eigen::VectorXd g(d);
      for (int i = 0; i < d; ++i) g[i] = rng.normal(0.0, 1.0);
      const Eigen::VectorXd direct = m.ldlt().solve(g);
      const CgResult cg = conjugate_gradient([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return m * v; }, g,
                                             0, 1e-13);
      cg_err = std::max(cg_err, (cg.x - direct).norm() / direct.norm());
    }
    rec.at_most("cg_matches_dense_solve", cg_err, 1e-8, "20 random SPD systems, relative");
  }
}

// --------------------------------------------------------------- clipping

void clipping_checks(std::vector<CheckResult>& out) {
  Recorder rec(out, "clipping");

  {
    const ClipBounds c = clip_bounds(ClipSchedule::constant(0.1), 7, 3);
    rec.at_most("constant_bounds", std::max(std::abs(c.lower - 0.9), std::abs(c.upper - 1.1)), 0.0,
                "delta = 0.1 gives (0.9, 1.1)");
    const ClipBounds l = clip_bounds(ClipSchedule::length_dep(1.2), 4, 2);
    rec.at_most("length_dep_bounds",
                std::max(std::abs(l.lower - std::pow(1.2, -0.25)), std::abs(l.upper - std::pow(1.2, 0.25))), 1e-15,
                "alpha = 1.2, |tau| = 4");
    const ClipBounds one = clip_bounds(ClipSchedule::length_dep(1.2), 1, 1);
    rec.at_most("length_dep_single_step", std::max(std::abs(one.lower - 1.0 / 1.2), std::abs(one.upper - 1.2)),
                1e-15, "|tau| = 1 gives (1/alpha, alpha)");
    // e = 1 / (2 * 0.5^2) = 2: alpha^2 = 1.44 > 1.3 and alpha^-2 < 0.7, both caps bind.
    const ClipBounds g = clip_bounds(ClipSchedule::gamma_dep(1.2, 0.3, 0.5), 2, 2);
    rec.at_most("gamma_dep_cap_binds", std::max(std::abs(g.lower - 0.7), std::abs(g.upper - 1.3)), 1e-15,
                "alpha = 1.2, beta = 0.3, gamma = 0.5, |tau| = 2, h = 2");
    const ClipBounds g1 = clip_bounds(ClipSchedule::gamma_dep(1.2, 0.3, 0.5), 4, 1);
    rec.at_most("gamma_dep_uncapped",
                std::max(std::abs(g1.lower - std::pow(1.2, -0.5)), std::abs(g1.upper - std::pow(1.2, 0.5))), 1e-15,
                "|tau| = 4, h = 1 gives exponent 1/2");
  }

  {
    std::size_t violations = 0, cases = 0;
    const ClipSchedule length = ClipSchedule::length_dep(1.2);
    const ClipSchedule gamma = ClipSchedule::gamma_dep(1.2, 0.3, 0.9);
    for (std::size_t len = 1; len <= 100; ++len) {
      const ClipBounds cur = clip_bounds(length, len, 1);
      ++cases;
      violations += !(cur.lower < 1.0 && cur.upper > 1.0);
      if (len > 1) {
        const ClipBounds prev = clip_bounds(length, len - 1, 1);
        violations += cur.lower < prev.lower || cur.upper > prev.upper;
      }
      for (std::size_t h = 1; h <= std::min<std::size_t>(20, len); ++h) {
        const ClipBounds b = clip_bounds(gamma, len, h);
        ++cases;
        violations += !(b.lower <= 1.0 && b.upper >= 1.0 && b.lower >= 0.7 && b.upper <= 1.3);
        if (h > 1) {
          const ClipBounds prev = clip_bounds(gamma, len, h - 1);
          violations += b.lower > prev.lower || b.upper < prev.upper;
        }
        if (len > h) {
          const ClipBounds shorter = clip_bounds(gamma, len - 1, h);
          violations += b.lower < shorter.lower || b.upper > shorter.upper;
        }
      }
    }
    rec.count_zero("schedule_monotonicity", violations, cases);
  }

  {
    std::size_t violations = 0;
    for (double progress : {0.0, 0.25, 0.49})
      violations += dynamic_clip_schedule(progress).delta != 0.1;
    for (double progress : {0.5, 0.75, 1.0})
      violations += dynamic_clip_schedule(progress).delta != 0.05;
    rec.count_zero("dynamic_schedule_phases", violations, 6);
  }

  {
    Rng rng(1001);
    const PomdpSpec spec = random_small_spec(rng, true);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const Batch batch = sample_batch(spec, p, 500, 51);
    const VTable v = fit_v_table(batch, spec.gamma());
    const PositionAdvantages adv = empirical_advantage(batch, v, spec.gamma());
    const ClipSchedule sched = ClipSchedule::constant(0.2);
    double mode_gap = 0.0;
    for (int k = 0; k < 5; ++k) {
      const PolicyParams q = perturbed_policy(rng, p, 0.3);
      mode_gap = std::max(mode_gap, std::abs(ppo_objective(batch, q, adv, sched, PpoMode::kPomdp) -
                                             ppo_objective(batch, q, adv, sched, PpoMode::kMdp)));
    }
    rec.at_most("identity_observation_modes_agree", mode_gap, 1e-12);

    const PolicyParams q = perturbed_policy(rng, p, 0.1);
    Table shifted = q.logits();
    shifted.row(0).array() += 3.0;
    rec.at_most("objective_invariant_to_logit_shift",
                std::abs(ppo_objective(batch, q, adv, sched, PpoMode::kPomdp) -
                         ppo_objective(batch, PolicyParams(shifted), adv, sched, PpoMode::kPomdp)),
                1e-12);

    const PpoEvaluation ev = ppo_evaluate(batch, q, adv, sched, PpoMode::kPomdp);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& x) { return ppo_objective(batch, q.with_flat(x), adv, sched, PpoMode::kPomdp); },
        q.flat(), 1e-7);
    rec.at_most("objective_gradient_matches_finite_differences",
                max_abs(flatten(ev.gradient) - fd) / std::max(max_abs(fd), 1e-300), 1e-5,
                "clipped fraction " + std::to_string(ev.clipped_fraction));
  }

  {
    // Every position saturated: advantages favor action 0 while the new
    // policy already exceeds the upper ratio bound on it, and vice versa.
    const PomdpSpec bandit = one_step_bandit(1.0, 0.0);
    const PolicyParams uniform(bandit.num_obs(), bandit.num_actions());
    const Batch batch = sample_batch(bandit, uniform, 200, 61);
    PositionAdvantages adv;
    for (const auto& t : batch.trajectories) {
      adv.values.push_back({t.events[0].action == 0 ? 1.0 : -1.0});
      adv.valid.push_back({1});
    }
    Table logits = uniform.logits();
    logits(0, 0) = 2.0;
    const PpoEvaluation ev = ppo_evaluate(batch, PolicyParams(logits), adv, ClipSchedule::constant(0.1), PpoMode::kPomdp);
    rec.at_most("saturated_positions_have_zero_gradient", max_abs(ev.gradient), 0.0,
                "clipped fraction " + std::to_string(ev.clipped_fraction));
  }

  {
    Rng rng(1101);
    std::size_t violations = 0, coords = 0;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x(6), g(6);
      for (int i = 0; i < 6; ++i) {
        x[i] = rng.normal(0.0, 3.0);
        g[i] = i == k % 6 ? 0.0 : rng.normal(0.0, 1.0);
      }
      const double lr = 0.01 * (1 + k % 7);
      const Eigen::VectorXd y = sign_sgd_step(x, g, lr);
      for (int i = 0; i < 6; ++i, ++coords) {
        const double expected = g[i] > 0.0 ? x[i] + lr : g[i] < 0.0 ? x[i] - lr : x[i];
        violations += y[i] != expected;
      }
    }
    rec.count_zero("sign_step_moves_by_lr", violations, coords);
  }
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"lemmas", "estimators", "clipping"};
  return names;
}

std::vector<CheckResult> run_suite(std::string_view suite) {
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  if (!all && std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw ConfigError("unknown suite '" + std::string(suite) + "'", 0, "suite");
  if (all || suite == "lemmas") lemma_checks(out);
  if (all || suite == "estimators") estimator_checks(out);
  if (all || suite == "clipping") clipping_checks(out);
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed || !r.required; });
}

void write_report_text(std::ostream& out, const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    out << (r.passed ? "[PASS] " : r.required ? "[FAIL] " : "[INFO] ") << r.suite << '/' << r.name
        << " measured=" << std::setprecision(6) << r.measured << " tol=" << r.tolerance;
    if (!r.detail.empty()) out << "  (" << r.detail << ')';
    out << '\n';
  }
}

void write_report_json(std::ostream& out, const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j;
    j["suite"] = r.suite;
    j["name"] = r.name;
    j["passed"] = r.passed;
    j["required"] = r.required;
    j["measured"] = std::isfinite(r.measured) ? nlohmann::json(r.measured) : nlohmann::json(nullptr);
    j["tolerance"] = r.tolerance;
    j["detail"] = r.detail;
    checks.push_back(std::move(j));
  }
  nlohmann::json report;
  report["passed"] = all_passed(results);
  report["checks"] = std::move(checks);
  out << report.dump(2) << '\n';
}

}  // namespace gtrpo
