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

// Acceptance criteria 1-11. Prints one [PASS]/[FAIL] line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gtrpo/clipping.hpp"
#include "gtrpo/env_suite.hpp"
#include "gtrpo/estimation.hpp"
#include "gtrpo/experiment.hpp"
#include "gtrpo/oracle.hpp"
#include "gtrpo/random_spec.hpp"
#include "gtrpo/update_rules.hpp"

using namespace gtrpo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
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

struct Outcome {
  bool passed = false;
  std::string detail;
};

Outcome criterion_1() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const PomdpSpec spec = random_small_spec(rng);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const Eigen::VectorXd theta = p.flat();
    const Eigen::MatrixXd f = fisher(atlas, p, false);
    const double h = 1e-4;
    auto k_at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
      Eigen::VectorXd v = theta;
      v[i] += si * h;
      v[j] += sj * h;
      return kl(atlas, p, p.with_flat(v), KlVariant::kTrajectory);
    };
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double hess = (k_at(i, 1, j, 1) - k_at(i, 1, j, -1) - k_at(i, -1, j, 1) + k_at(i, -1, j, -1)) / (4 * h * h);
        worst = std::max(worst, std::abs(hess - f(i, j)));
      }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max |FD Hessian - F| = " << worst << " (tol 1e-4), " << secs << " s (limit 120 s)";
  return {worst <= 1e-4 && secs < 120.0, d.str()};
}

Outcome criterion_2() {
  const auto t0 = Clock::now();
  Rng rng(2);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const PomdpSpec spec = random_small_spec(rng);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const PolicyParams q = perturbed_policy(rng, p, 1.0);
    const ConditionalTables tables(atlas, p);
    worst = std::max(worst, std::abs((eta(atlas, q) - eta(atlas, p)) - expected_discounted_advantage(atlas, tables, q)));
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max identity error = " << worst << " (tol 1e-9), " << secs << " s (limit 60 s)";
  return {worst <= 1e-9 && secs < 60.0, d.str()};
}

Outcome criterion_3() {
  Rng rng(3);
  int tv = 0, kl_no = 0, kl_on = 0, dg_no = 0, dg_on = 0;
  const double slack = 1e-9;
  for (int k = 0; k < 100; ++k) {
    const PomdpSpec spec = random_small_spec(rng);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const PolicyParams q = perturbed_policy(rng, p, 0.25 * (1 + k % 8));
    const double gain = eta(atlas, q) - surrogate_L(atlas, p, q);
    const EpsilonSpans e = epsilon_spans(atlas, p, q);
    tv += gain < -e.epsilon * total_variation(atlas, p, q) - slack;
    kl_no += gain < -e.epsilon * std::sqrt(0.5 * kl(atlas, q, p, KlVariant::kTrajectory)) - slack;
    kl_on += gain < -e.epsilon * std::sqrt(0.5 * kl(atlas, p, q, KlVariant::kTrajectory)) - slack;
    dg_no += gain < -e.epsilon_prime * std::sqrt(kl(atlas, p, q, KlVariant::kGamma)) - slack;
    dg_on += gain < -e.epsilon_prime * std::sqrt(kl(atlas, q, p, KlVariant::kGamma)) - slack;
  }
  std::ostringstream d;
  d << "violations in 100 pairs: TV " << tv << ", KL(new||old) " << kl_no << ", KL(old||new) " << kl_on
    << ", D_gamma(new||old) " << dg_no << ", D_gamma(old||new) " << dg_on;
  return {tv + kl_no + kl_on + dg_no + dg_on == 0, d.str()};
}

Outcome criterion_4() {
  Rng rng(4);
  double rel = 0.0;
  for (int k = 0; k < 20; ++k) {
    const PomdpSpec spec = random_small_spec(rng);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const Eigen::VectorXd g = flatten(grad_eta(atlas, p));
    const Eigen::VectorXd fd =
        central_difference([&](const Eigen::VectorXd& v) { return eta(atlas, p.with_flat(v)); }, p.flat(), 1e-5);
    rel = std::max(rel, max_abs(g - fd) / max_abs(g));
  }
  const PomdpSpec bandit = one_step_bandit(1.0, 0.0);
  const PolicyParams uniform(2, 2);
  const std::size_t m = 200000;
  const Batch batch = sample_batch(bandit, uniform, m, 404);
  const Table est = mc_policy_gradient(batch, 1.0);
  const double exact[2] = {0.25, -0.25};
  double z = 0.0;
  for (int a = 0; a < 2; ++a) {
    double s = 0.0, s2 = 0.0;
    for (const auto& t : batch.trajectories) {
      const double v = trajectory_score(uniform, t)(0, a) * discounted_return(t, 1.0);
      s += v;
      s2 += v * v;
    }
    const double mean = s / m, se = std::sqrt((s2 / m - mean * mean) / (m - 1.0));
    z = std::max(z, std::abs(est(0, a) - exact[a]) / se);
  }
  std::ostringstream d;
  d << "FD relative error " << rel << " (tol 1e-6); bandit MC |z| = " << z << " (tol 3)";
  return {rel <= 1e-6 && z <= 3.0, d.str()};
}

Outcome criterion_5() {
  Rng rng(5);
  double value = 0.0, grad = 0.0;
  for (int k = 0; k < 20; ++k) {
    const PomdpSpec spec = random_small_spec(rng);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const double e = eta(atlas, p);
    value = std::max(value, std::abs(surrogate_L(atlas, p, p) - e));
    const Eigen::VectorXd g = flatten(grad_eta(atlas, p));
    const Eigen::VectorXd fd = central_difference(
        [&](const Eigen::VectorXd& v) { return surrogate_L(atlas, p, p.with_flat(v)); }, p.flat(), 1e-5);
    grad = std::max(grad, max_abs(g - fd) / max_abs(g));
  }
  std::ostringstream d;
  d << "|L(pi) - eta| = " << value << " (tol 1e-12); relative |grad L - grad eta| = " << grad << " (tol 1e-6)";
  return {value <= 1e-12 && grad <= 1e-6, d.str()};
}

Outcome criterion_6() {
  Rng rng(6);
  double adv = 0.0, obj = 0.0;
  for (int k = 0; k < 10; ++k) {
    const PomdpSpec spec = random_small_spec(rng, true);
    const auto atlas = TrajectoryAtlas::enumerate(spec);
    const PolicyParams p = random_policy(rng, spec.num_obs(), spec.num_actions());
    const ConditionalTables tab(atlas, p);
    const auto latent = latent_advantage(spec, p);
    const std::size_t nx = spec.num_latent(), na = spec.num_actions();
    for (const auto& e : atlas.entries())
      for (std::size_t h = 0; h < e.length; ++h) {
        const Event& ev = atlas.event(e, h);
        const std::size_t yp = h ? atlas.event(e, h - 1).obs : tab.start().obs;
        const std::size_t ap = h ? atlas.event(e, h - 1).action : tab.start().action;
        for (std::size_t a = 0; a < na; ++a) {
          double marginal = 0.0;
          for (std::size_t xn = 0; xn < nx; ++xn)
            if (spec.transition(ev.latent, a, xn) > 0.0)
              marginal += spec.transition(ev.latent, a, xn) * tab.advantage(h, xn, a, ev.obs, yp, ap);
          adv = std::max(adv, std::abs(marginal - latent[(h * nx + ev.latent) * na + a]));
        }
      }
    const Batch batch = sample_batch(spec, p, 500, 600 + k);
    const PositionAdvantages pa = empirical_advantage(batch, fit_v_table(batch, spec.gamma()), spec.gamma());
    const PolicyParams q = perturbed_policy(rng, p, 0.5);
    for (ClipSchedule s : {ClipSchedule::constant(0.1), ClipSchedule::length_dep(1.2),
                           ClipSchedule::gamma_dep(1.2, 0.3, spec.gamma())})
      obj = std::max(obj, std::abs(ppo_objective(batch, q, pa, s, PpoMode::kPomdp) -
                                   ppo_objective(batch, q, pa, s, PpoMode::kMdp)));
  }
  std::ostringstream d;
  d << "advantage marginal vs latent " << adv << " (tol 1e-10); objective gap " << obj << " (tol 1e-12)";
  return {adv <= 1e-10 && obj <= 1e-12, d.str()};
}

Outcome criterion_7() {
  int bad = 0;
  const ClipBounds c = clip_bounds(ClipSchedule::constant(0.1), 3, 1);
  bad += c.lower != 0.9 || c.upper != 1.1;
  const ClipBounds l = clip_bounds(ClipSchedule::length_dep(1.2), 4, 1);
  bad += std::abs(l.lower - 0.95544279220436677) > 1e-15 || std::abs(l.upper - 1.0466351393921056) > 1e-15;
  const ClipSchedule g = ClipSchedule::gamma_dep(1.2, 0.3, 0.5);
  const ClipBounds g1 = clip_bounds(g, 2, 1), g2 = clip_bounds(g, 2, 2);
  bad += std::abs(g1.lower - 1.0 / 1.2) > 1e-15 || std::abs(g1.upper - 1.2) > 1e-15;
  bad += std::abs(g2.lower - 0.7) > 1e-15 || std::abs(g2.upper - 1.3) > 1e-15;
  const int table_errors = bad;

  int mono = 0;
  const ClipSchedule len = ClipSchedule::length_dep(1.2);
  const ClipSchedule gd = ClipSchedule::gamma_dep(1.2, 0.3, 0.9);
  for (std::size_t t = 1; t <= 100; ++t) {
    if (t > 1) {
      mono += clip_bounds(len, t, 1).upper > clip_bounds(len, t - 1, 1).upper;
      mono += clip_bounds(len, t, 1).lower < clip_bounds(len, t - 1, 1).lower;
    }
    for (std::size_t h = 1; h <= std::min<std::size_t>(t, 20); ++h) {
      const ClipBounds b = clip_bounds(gd, t, h);
      mono += b.lower > 1.0 || b.upper < 1.0;
      if (h > 1) mono += b.upper < clip_bounds(gd, t, h - 1).upper || b.lower > clip_bounds(gd, t, h - 1).lower;
      if (t > h) mono += b.upper > clip_bounds(gd, t - 1, h).upper || b.lower < clip_bounds(gd, t - 1, h).lower;
    }
  }
  std::ostringstream d;
  d << "closed-form mismatches " << table_errors << ", monotonicity violations " << mono;
  return {table_errors == 0 && mono == 0, d.str()};
}

Outcome criterion_8() {
  const PomdpSpec spec = build_env(EnvConfig{});
  const auto atlas = TrajectoryAtlas::enumerate(spec);
  Rng rng(8);
  const PolicyParams old_p = random_policy(rng, spec.num_obs(), spec.num_actions(), 0.5);
  const PolicyParams new_p = perturbed_policy(rng, old_p, 0.5);
  const double truth = kl(atlas, old_p, new_p, KlVariant::kTrajectory);
  const Batch batch = sample_batch(spec, old_p, 100000, 808);
  const double episodic = empirical_kl(batch, new_p, EmpiricalKlVariant::kEpisodic);
  const double trpo = empirical_kl(batch, new_p, EmpiricalKlVariant::kTrpo);
  const double rel = std::abs(episodic - truth) / truth;
  const double trpo_rel = std::abs(trpo - truth) / truth;

  // Equal-length episodes: no transition reaches x_T before max_steps.
  PomdpTables t = random_small_spec(rng).tables();
  const std::size_t nx = t.num_latent, na = t.num_actions;
  for (std::size_t x = 0; x + 1 < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      double* row = &t.transition[(x * na + a) * nx];
      row[nx - 1] = 0.0;
      double s = 0.0;
      for (std::size_t k = 0; k + 1 < nx; ++k) s += row[k];
      for (std::size_t k = 0; k + 1 < nx; ++k) row[k] /= s;
    }
  const PomdpSpec fixed(t);
  const PolicyParams a = random_policy(rng, fixed.num_obs(), fixed.num_actions());
  const PolicyParams b = perturbed_policy(rng, a, 0.5);
  const Batch fb = sample_batch(fixed, a, 5000, 809);
  const double e = empirical_kl(fb, b, EmpiricalKlVariant::kEpisodic);
  const double r = empirical_kl(fb, b, EmpiricalKlVariant::kTrpo);
  const double identity = std::abs(e - static_cast<double>(fixed.max_steps()) * r) / std::abs(e);

  std::ostringstream d;
  d << "episodic rel err " << rel << " (tol 0.05); per-step rel err on mixed lengths " << trpo_rel
    << " (must stay > 10x episodic); equal-length identity error " << identity;
  return {rel < 0.05 && trpo_rel > 10.0 * rel && identity <= 1e-12, d.str()};
}

Outcome criterion_9() {
  const auto t0 = Clock::now();
  const PomdpSpec spec = build_env(EnvConfig{});
  const auto atlas = TrajectoryAtlas::enumerate(spec);
  PolicyParams p(spec.num_obs(), spec.num_actions());
  double prev = eta(atlas, p), worst_drop = 0.0;
  int accepted = 0;
  for (int k = 0; k < 50; ++k) {
    const ExactSurrogate model(atlas, p, KlVariant::kTrajectory);
    const UpdateResult r = gtrpo_step(model, 1e-3);
    if (r.report.accepted) {
      ++accepted;
      const double now = eta(atlas, r.policy);
      worst_drop = std::max(worst_drop, prev - now);
      prev = now;
      p = r.policy;
    }
  }
  const bool monotone = worst_drop <= 1e-9 && accepted > 0;

  ExperimentConfig c;
  c.algorithm = Algorithm::kGtrpoTraj;
  c.batch_episodes = 2048;
  c.total_steps = 200 * 2048;
  c.delta_prime = 0.01;
  const double uniform_return =
      eta(TrajectoryAtlas::enumerate(spec.with_gamma(1.0)), PolicyParams(spec.num_obs(), spec.num_actions()));
  int improved = 0;
  std::ostringstream finals;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rows = run_seed(spec, c, seed);
    double s = 0.0;
    for (std::size_t i = rows.size() - 10; i < rows.size(); ++i) s += rows[i].mean_return;
    const double final_return = s / 10.0;
    finals << ' ' << final_return;
    improved += final_return > uniform_return;
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "oracle: " << accepted << " accepted steps, worst eta drop " << worst_drop << "; sampled: " << improved
    << "/5 seeds beat uniform " << uniform_return << " (final returns" << finals.str() << "), " << secs
    << " s (limit 600 s)";
  return {monotone && improved >= 4 && secs < 600.0, d.str()};
}

Outcome criterion_10() {
  const PomdpSpec bandit = one_step_bandit(1.0, 0.0);
  const double lr = 0.02;
  OptimizerConfig opt;
  opt.kind = OptimizerKind::kSignSgd;
  opt.lr = lr;
  opt.epochs = 1;
  std::size_t bad_steps = 0, steps = 0;
  int reached = 0;
  std::ostringstream when;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PolicyParams p(2, 2);
    int hit = -1;
    for (int u = 0; u < 500; ++u) {
      const Batch batch = sample_batch(bandit, p, 64, derive_seed(1000 + seed, u));
      const PositionAdvantages adv = empirical_advantage(batch, fit_v_table(batch, 1.0), 1.0);
      const UpdateResult r = ppo_update(batch, p, adv, ClipSchedule::constant(0.2), opt);
      if (r.report.accepted) {
        const Eigen::VectorXd before = p.flat(), after = r.policy.flat();
        for (Eigen::Index i = 0; i < before.size(); ++i) {
          const double moved = std::abs(after[i] - before[i]);
          const double ulp = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(before[i]) + lr);
          bad_steps += !(moved == 0.0 || std::abs(moved - lr) <= ulp);
        }
        ++steps;
      }
      p = r.policy;
      if (action_probs(p, 0)[0] > 0.9) {
        hit = u;
        break;
      }
    }
    reached += hit >= 0;
    when << ' ' << hit;
  }
  std::ostringstream d;
  d << steps << " accepted steps, " << bad_steps << " coordinates off +-lr/0; pi(a0) > 0.9 on " << reached
    << "/5 seeds (update index:" << when.str() << ")";
  return {bad_steps == 0 && steps > 0 && reached >= 4, d.str()};
}

Outcome criterion_11() {
  bool identical = true;
  for (Algorithm a : {Algorithm::kPpoMdp, Algorithm::kPpoPomdp, Algorithm::kGtrpoTraj, Algorithm::kGtrpoGamma,
                      Algorithm::kPpoSignSgd}) {
    ExperimentConfig c;
    c.algorithm = a;
    c.total_steps = 20 * 64;
    const PomdpSpec spec = experiment_spec(c);
    std::ostringstream first, second;
    run_seed(spec, c, 7, &first);
    run_seed(spec, c, 7, &second);
    identical = identical && first.str() == second.str() && !first.str().empty();
  }
  const auto t0 = Clock::now();
  const int status = std::system(GTRPO_CLI " verify all > /dev/null");
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "reruns byte-identical: " << (identical ? "yes" : "no") << "; verify all exit status " << status << " in "
    << secs << " s (limit 900 s)";
  return {identical && status == 0 && secs < 900.0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                          criterion_5, criterion_6, criterion_7, criterion_8,
                                                          criterion_9, criterion_10, criterion_11};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::cout << (o.passed ? "[PASS]" : "[FAIL]") << " criterion " << (i + 1) << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
