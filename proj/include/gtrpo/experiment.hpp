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

#ifndef GTRPO_EXPERIMENT_HPP_
#define GTRPO_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gtrpo/clipping.hpp"
#include "gtrpo/env_suite.hpp"
#include "gtrpo/update_rules.hpp"

namespace gtrpo {

enum class Algorithm { kPpoMdp, kPpoPomdp, kGtrpoTraj, kGtrpoGamma, kPpoSignSgd };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm algorithm);

/// X-axis accounting: total_steps counts episodes or environment steps.
enum class Equalize { kEpisodes, kEnvSteps };

Equalize parse_equalize(std::string_view name);
std::string_view equalize_name(Equalize equalize);

/// Parsed from an INI file with sections [env], [algorithm], [schedule], [run]:
///
///   [env]        base, obs_noise, alive_bonus_scale_pos, alive_bonus_scale_neg,
///                max_steps, spec_file (optional, overrides base)
///   [algorithm]  name, optimizer, lr, epochs, minibatch, delta_prime, damping
///   [schedule]   kind (constant | length_dep | gamma_dep | dynamic), alpha, beta, delta
///   [run]        gamma (optional), total_steps, batch_episodes, seeds,
///                equalize_by (episodes | env_steps), output_dir
struct ExperimentConfig {
  EnvConfig env;
  std::string spec_file;
  Algorithm algorithm = Algorithm::kPpoPomdp;
  OptimizerConfig optimizer;
  double delta_prime = 0.01;
  double damping = 1e-3;
  ClipSchedule schedule = ClipSchedule::constant(0.1);
  bool dynamic_schedule = false;
  std::optional<double> gamma;
  std::size_t total_steps = 0;
  std::size_t batch_episodes = 64;
  std::vector<std::uint64_t> seeds{0};
  Equalize equalize_by = Equalize::kEpisodes;
  std::string output_dir = "out";

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Throws ConfigError with line and field when the text is malformed.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

/// Environment of a config, with the run gamma applied.
PomdpSpec experiment_spec(const ExperimentConfig& config);

/// One CSV row per update. Returns are computed on the batch sampled before
/// the update, under the policy being updated.
struct RunRow {
  std::size_t update = 0;
  std::size_t env_steps = 0;
  std::size_t episodes = 0;
  double mean_return = 0.0;             ///< undiscounted
  double mean_discounted_return = 0.0;
  double mean_episode_length = 0.0;
  double divergence = 0.0;
  double clipped_fraction = 0.0;
  bool accepted = false;
};

inline constexpr std::string_view kCsvHeader =
    "update,env_steps,episodes,mean_return,mean_discounted_return,mean_episode_length,divergence,"
    "clipped_fraction,accepted";

void write_csv_row(std::ostream& out, const RunRow& row);

/// Runs one seed to completion. Rows are appended to `csv` (header first) and
/// flushed after each update when csv is non-null. `final_policy` receives the
/// last policy when non-null.
std::vector<RunRow> run_seed(const PomdpSpec& spec, const ExperimentConfig& config, std::uint64_t seed,
                             std::ostream* csv = nullptr, PolicyParams* final_policy = nullptr);

/// File name of a seed's CSV inside output_dir.
std::string seed_csv_name(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every seed concurrently, one CSV per seed plus manifest.ini.
void run_experiment(const ExperimentConfig& config);

/// A per-seed record set read back from an output directory.
struct RecordSet {
  std::string label;
  Equalize equalize_by = Equalize::kEpisodes;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<RunRow>> runs;
};

RecordSet load_record_set(const std::string& dir);
std::vector<RunRow> read_run_csv(std::istream& in);

struct CurvePoint {
  std::size_t update = 0;
  double x = 0.0;  ///< seed mean of episodes or env_steps
  double mean = 0.0;
  double std = 0.0;  ///< population std over seeds
};

struct Curve {
  std::string label;
  std::vector<CurvePoint> points;
  double final_mean = 0.0;  ///< seed mean of each seed's last-window mean return
  double final_std = 0.0;
};

/// Mean and std of mean_return across seeds, aligned by update index.
Curve summarize(const RecordSet& set, std::size_t window);

/// Writes curves.csv, summary.csv and plot.svg into out_dir. Throws
/// ConfigError when the record sets use different x-axis accounting.
std::vector<Curve> compare(const std::vector<RecordSet>& sets, const std::string& out_dir, std::size_t window = 10);

/// Trailing moving average of width `window`.
std::vector<double> smooth(const std::vector<double>& values, std::size_t window);

}  // namespace gtrpo

#endif  // GTRPO_EXPERIMENT_HPP_
