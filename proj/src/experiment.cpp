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

#include "gtrpo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gtrpo/error.hpp"
#include "gtrpo/estimation.hpp"
#include "gtrpo/spec_io.hpp"
#include "gtrpo/svg_plot.hpp"

namespace gtrpo {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Line (1-based) where `key` is assigned inside [section]; any section when
// section is empty. 0 when absent.
std::size_t line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    if (trim(t.substr(0, eq)) == key && (section.empty() || current == section)) return n;
  }
  return 0;
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string text) : text_(std::move(text)) {
    std::istringstream in(text_);
    try {
      pt::read_ini(in, root_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(e.message(), e.line());
    }
    static const std::map<std::string, std::set<std::string>> known = {
        {"env", {"base", "obs_noise", "alive_bonus_scale_pos", "alive_bonus_scale_neg", "max_steps", "spec_file"}},
        {"algorithm", {"name", "optimizer", "lr", "epochs", "minibatch", "delta_prime", "damping"}},
        {"schedule", {"kind", "alpha", "beta", "delta", "gamma"}},
        {"run", {"gamma", "total_steps", "batch_episodes", "seeds", "equalize_by", "output_dir"}},
    };
    for (const auto& [section, tree] : root_) {
      auto it = known.find(section);
      if (it == known.end()) throw ConfigError("unknown section [" + section + "]", line_of_section(section), section);
      for (const auto& [key, value] : tree)
        if (!it->second.count(key))
          throw ConfigError("unknown key", line_of(text_, section, key), section + "." + key);
    }
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    auto value = root_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
    if (!value) return std::nullopt;
    return trim(*value);
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw ConfigError(what, line_of(text_, section, key), section + "." + key);
  }

  std::string string(const std::string& section, const std::string& key, const std::string& fallback) const {
    return raw(section, key).value_or(fallback);
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    const auto value = raw(section, key);
    if (!value) return fallback;
    std::istringstream in(*value);
    double out = 0.0;
    if (!(in >> out) || !(in >> std::ws).eof() || !std::isfinite(out))
      fail(section, key, "expected a finite number, got '" + *value + "'");
    return out;
  }

  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const {
    const auto value = raw(section, key);
    if (!value) return fallback;
    if (value->empty() || value->find_first_not_of("0123456789") != std::string::npos)
      fail(section, key, "expected a nonnegative integer, got '" + *value + "'");
    try {
      return std::stoull(*value);
    } catch (const std::exception&) {
      fail(section, key, "integer out of range: '" + *value + "'");
    }
  }

  std::size_t locate(const std::string& key) const { return line_of(text_, "", key); }

 private:
  std::size_t line_of_section(const std::string& section) const {
    std::istringstream in(text_);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n)
      if (trim(line) == "[" + section + "]") return n;
    return 0;
  }

  std::string text_;
  pt::ptree root_;
};

template <typename Parse>
auto parse_field(const ConfigReader& r, const std::string& section, const std::string& key,
                 const std::string& fallback, Parse parse) {
  const std::string value = r.string(section, key, fallback);
  try {
    return parse(value);
  } catch (const ConfigError& e) {
    r.fail(section, key, "invalid value '" + value + "'");
  } catch (const SpecError& e) {
    r.fail(section, key, e.what());
  }
}

std::vector<std::uint64_t> parse_seeds(const ConfigReader& r) {
  std::string text = r.string("run", "seeds", "0");
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<std::uint64_t> seeds;
  std::string token;
  while (in >> token) {
    if (token.find_first_not_of("0123456789") != std::string::npos) r.fail("run", "seeds", "bad seed '" + token + "'");
    seeds.push_back(std::stoull(token));
  }
  return seeds;
}

void format_double(std::ostream& out, double v) { out << std::setprecision(17) << v; }

std::mutex log_mutex;

void log_line(const std::string& text) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::clog << text << '\n';
}

double population_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ppo_mdp") return Algorithm::kPpoMdp;
  if (name == "ppo_pomdp") return Algorithm::kPpoPomdp;
  if (name == "gtrpo_traj") return Algorithm::kGtrpoTraj;
  if (name == "gtrpo_gamma") return Algorithm::kGtrpoGamma;
  if (name == "ppo_signsgd") return Algorithm::kPpoSignSgd;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'", 0, "name");
}

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kPpoMdp: return "ppo_mdp";
    case Algorithm::kPpoPomdp: return "ppo_pomdp";
    case Algorithm::kGtrpoTraj: return "gtrpo_traj";
    case Algorithm::kGtrpoGamma: return "gtrpo_gamma";
    case Algorithm::kPpoSignSgd: return "ppo_signsgd";
  }
  return "ppo_pomdp";
}

Equalize parse_equalize(std::string_view name) {
  if (name == "episodes") return Equalize::kEpisodes;
  if (name == "env_steps" || name == "steps") return Equalize::kEnvSteps;
  throw ConfigError("unknown equalize_by '" + std::string(name) + "'", 0, "equalize_by");
}

std::string_view equalize_name(Equalize equalize) {
  return equalize == Equalize::kEpisodes ? "episodes" : "env_steps";
}

void ExperimentConfig::validate() const {
  if (total_steps == 0) throw ConfigError("total_steps must be positive", 0, "total_steps");
  if (batch_episodes == 0) throw ConfigError("batch_episodes must be positive", 0, "batch_episodes");
  if (seeds.empty()) throw ConfigError("at least one seed is required", 0, "seeds");
  if (!(delta_prime > 0.0)) throw ConfigError("delta_prime must be positive", 0, "delta_prime");
  if (!(damping >= 0.0)) throw ConfigError("damping must be nonnegative", 0, "damping");
  if (gamma && !(*gamma >= 0.0 && *gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]", 0, "gamma");
  if (output_dir.empty()) throw ConfigError("output_dir must be set", 0, "output_dir");
  optimizer.validate();
  if (!dynamic_schedule) schedule.validate();
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const ConfigReader r(buffer.str());
  ExperimentConfig c;

  c.env.base = parse_field(r, "env", "base", "TwoDoor", [](const std::string& v) { return parse_benchmark(v); });
  c.env.obs_noise = r.number("env", "obs_noise", 0.0);
  c.env.alive_bonus_scale_pos = r.number("env", "alive_bonus_scale_pos", 1.0);
  c.env.alive_bonus_scale_neg = r.number("env", "alive_bonus_scale_neg", 1.0);
  c.env.max_steps = r.count("env", "max_steps", 0);
  c.spec_file = r.string("env", "spec_file", "");

  c.algorithm = parse_field(r, "algorithm", "name", "ppo_pomdp", [](const std::string& v) { return parse_algorithm(v); });
  c.optimizer.kind =
      parse_field(r, "algorithm", "optimizer", "sgd", [](const std::string& v) { return parse_optimizer_kind(v); });
  c.optimizer.lr = r.number("algorithm", "lr", c.optimizer.lr);
  c.optimizer.epochs = r.count("algorithm", "epochs", c.optimizer.epochs);
  c.optimizer.minibatch = r.count("algorithm", "minibatch", c.optimizer.minibatch);
  c.delta_prime = r.number("algorithm", "delta_prime", c.delta_prime);
  c.damping = r.number("algorithm", "damping", c.damping);

  if (auto g = r.raw("run", "gamma")) c.gamma = r.number("run", "gamma", 0.0);
  const std::string kind = r.string("schedule", "kind", "constant");
  c.dynamic_schedule = kind == "dynamic";
  if (!c.dynamic_schedule) {
    c.schedule.kind = parse_field(r, "schedule", "kind", "constant", [](const std::string& v) { return parse_clip_kind(v); });
  }
  c.schedule.alpha = r.number("schedule", "alpha", c.schedule.alpha);
  c.schedule.beta = r.number("schedule", "beta", c.schedule.beta);
  c.schedule.delta = r.number("schedule", "delta", c.schedule.delta);
  c.schedule.gamma = r.number("schedule", "gamma", -1.0);

  c.total_steps = r.count("run", "total_steps", 0);
  c.batch_episodes = r.count("run", "batch_episodes", c.batch_episodes);
  c.seeds = parse_seeds(r);
  c.equalize_by =
      parse_field(r, "run", "equalize_by", "episodes", [](const std::string& v) { return parse_equalize(v); });
  c.output_dir = r.string("run", "output_dir", c.output_dir);

  // Unset schedule gamma follows the environment discount.
  if (c.schedule.gamma < 0.0) {
    c.schedule.gamma = 1.0;
    try {
      c.schedule.gamma = experiment_spec(c).gamma();
    } catch (const SpecError& e) {
      throw ConfigError(e.what(), r.locate("base"), "env");
    } catch (const Error& e) {
      throw ConfigError(e.what(), r.locate("spec_file"), "env.spec_file");
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), r.locate(e.field()));
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_experiment_config(in);
}

PomdpSpec experiment_spec(const ExperimentConfig& config) {
  PomdpSpec spec = config.spec_file.empty() ? build_env(config.env) : load_spec(config.spec_file);
  if (!config.spec_file.empty() && config.env.max_steps > 0) spec = spec.with_max_steps(config.env.max_steps);
  if (config.gamma) spec = spec.with_gamma(*config.gamma);
  return spec;
}

void write_csv_row(std::ostream& out, const RunRow& row) {
  out << row.update << ',' << row.env_steps << ',' << row.episodes << ',';
  format_double(out, row.mean_return);
  out << ',';
  format_double(out, row.mean_discounted_return);
  out << ',';
  format_double(out, row.mean_episode_length);
  out << ',';
  format_double(out, row.divergence);
  out << ',';
  format_double(out, row.clipped_fraction);
  out << ',' << (row.accepted ? 1 : 0) << '\n';
}

std::vector<RunRow> run_seed(const PomdpSpec& spec, const ExperimentConfig& config, std::uint64_t seed,
                             std::ostream* csv, PolicyParams* final_policy) {
  config.validate();
  PolicyParams policy(spec.num_obs(), spec.num_actions());
  const double gamma = spec.gamma();
  if (csv) *csv << kCsvHeader << '\n' << std::flush;
  std::vector<RunRow> rows;
  std::size_t episodes = 0, steps = 0;
  const auto total = config.total_steps;
  for (std::size_t update = 0;; ++update) {
    const std::size_t consumed = config.equalize_by == Equalize::kEpisodes ? episodes : steps;
    if (consumed >= total) break;
    const std::size_t m =
        config.equalize_by == Equalize::kEpisodes ? std::min(config.batch_episodes, total - episodes) : config.batch_episodes;
    const Batch batch = sample_batch(spec, policy, m, derive_seed(seed, update));
    const ValueContext context =
        config.algorithm == Algorithm::kPpoMdp ? ValueContext::kObservation : ValueContext::kHistory;
    const VTable v = fit_v_table(batch, gamma, context);
    const PositionAdvantages adv = empirical_advantage(batch, v, gamma);

    UpdateResult result{policy, {}};
    try {
      switch (config.algorithm) {
        case Algorithm::kPpoMdp:
        case Algorithm::kPpoPomdp:
        case Algorithm::kPpoSignSgd: {
          const double progress = static_cast<double>(consumed) / static_cast<double>(total);
          const ClipSchedule sched = config.dynamic_schedule ? dynamic_clip_schedule(progress) : config.schedule;
          OptimizerConfig opt = config.optimizer;
          if (config.algorithm == Algorithm::kPpoSignSgd) opt.kind = OptimizerKind::kSignSgd;
          result = ppo_update(batch, policy, adv, sched, opt, PpoMode::kPomdp);
          break;
        }
        case Algorithm::kGtrpoTraj:
        case Algorithm::kGtrpoGamma: {
          const KlVariant variant = config.algorithm == Algorithm::kGtrpoTraj ? KlVariant::kTrajectory : KlVariant::kGamma;
          result = gtrpo_update(batch, adv, variant, config.delta_prime, gamma, spec.max_steps(), config.damping);
          break;
        }
      }
    } catch (const ConvergenceError& e) {
      result = UpdateResult{policy, {}};
      result.report.diverged = true;
      log_line("seed " + std::to_string(seed) + " update " + std::to_string(update) + ": " + e.what());
    }
    if (result.report.diverged)
      log_line("seed " + std::to_string(seed) + " update " + std::to_string(update) +
               ": update aborted, policy kept");

    episodes += batch.size();
    steps += batch.total_steps();
    RunRow row;
    row.update = update;
    row.env_steps = steps;
    row.episodes = episodes;
    double ret = 0.0, dret = 0.0;
    for (const auto& t : batch.trajectories) {
      ret += undiscounted_return(t);
      dret += discounted_return(t, gamma);
    }
    const double n = static_cast<double>(batch.size());
    row.mean_return = ret / n;
    row.mean_discounted_return = dret / n;
    row.mean_episode_length = static_cast<double>(batch.total_steps()) / n;
    row.divergence = result.report.constraint_value;
    row.clipped_fraction = result.report.clipped_fraction;
    row.accepted = result.report.accepted;
    rows.push_back(row);
    if (csv) {
      write_csv_row(*csv, row);
      csv->flush();
    }
    policy = result.policy;
  }
  if (final_policy) *final_policy = policy;
  return rows;
}

std::string seed_csv_name(const ExperimentConfig& config, std::uint64_t seed) {
  return std::string(algorithm_name(config.algorithm)) + "_seed" + std::to_string(seed) + ".csv";
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  const PomdpSpec spec = experiment_spec(config);
  fs::create_directories(config.output_dir);
  {
    std::ofstream manifest(fs::path(config.output_dir) / "manifest.ini");
    manifest << "[run]\n"
             << "label = " << algorithm_name(config.algorithm) << '\n'
             << "algorithm = " << algorithm_name(config.algorithm) << '\n'
             << "equalize_by = " << equalize_name(config.equalize_by) << '\n'
             << "total_steps = " << config.total_steps << '\n'
             << "seeds =";
    for (auto s : config.seeds) manifest << ' ' << s;
    manifest << '\n';
    if (!manifest) throw Error("cannot write manifest in " + config.output_dir);
  }
  std::vector<std::exception_ptr> errors(config.seeds.size());
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        const auto seed = config.seeds[i];
        std::ofstream csv(fs::path(config.output_dir) / seed_csv_name(config, seed));
        if (!csv) throw Error("cannot write " + seed_csv_name(config, seed));
        run_seed(spec, config, seed, &csv);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<RunRow> read_run_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw ConfigError("CSV header does not match", 1, "header");
  std::vector<RunRow> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    RunRow r;
    int accepted = 0;
    if (!(fields >> r.update >> r.env_steps >> r.episodes >> r.mean_return >> r.mean_discounted_return >>
          r.mean_episode_length >> r.divergence >> r.clipped_fraction >> accepted))
      throw ConfigError("malformed CSV row", n);
    r.accepted = accepted != 0;
    rows.push_back(r);
  }
  return rows;
}

RecordSet load_record_set(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.ini";
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("missing manifest.ini in " + dir);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), e.line(), "manifest");
  }
  RecordSet set;
  set.label = tree.get<std::string>("run.label", fs::path(dir).filename().string());
  const auto algorithm = tree.get<std::string>("run.algorithm", set.label);
  set.equalize_by = parse_equalize(tree.get<std::string>("run.equalize_by", "episodes"));
  std::istringstream seeds(tree.get<std::string>("run.seeds", ""));
  std::uint64_t s = 0;
  while (seeds >> s) set.seeds.push_back(s);
  if (set.seeds.empty()) throw ConfigError("manifest lists no seeds", 0, "seeds");
  for (auto seed : set.seeds) {
    const fs::path csv_path = fs::path(dir) / (algorithm + "_seed" + std::to_string(seed) + ".csv");
    std::ifstream csv(csv_path);
    if (!csv) throw ConfigError("missing " + csv_path.string());
    set.runs.push_back(read_run_csv(csv));
  }
  return set;
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
  if (window <= 1) return values;
  std::vector<double> out(values.size());
  double running = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    running += values[i];
    if (i >= window) running -= values[i - window];
    out[i] = running / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

Curve summarize(const RecordSet& set, std::size_t window) {
  Curve curve;
  curve.label = set.label;
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& run : set.runs) n = std::min(n, run.size());
  if (set.runs.empty()) n = 0;
  std::vector<double> values(set.runs.size()), xs(set.runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < set.runs.size(); ++s) {
      const auto& row = set.runs[s][i];
      values[s] = row.mean_return;
      xs[s] = static_cast<double>(set.equalize_by == Equalize::kEpisodes ? row.episodes : row.env_steps);
    }
    CurvePoint p;
    p.update = i;
    p.x = mean_of(xs);
    p.mean = mean_of(values);
    p.std = population_std(values, p.mean);
    curve.points.push_back(p);
  }
  std::vector<double> finals;
  const std::size_t w = std::min(std::max<std::size_t>(window, 1), n);
  for (const auto& run : set.runs) {
    if (w == 0) break;
    double sum = 0.0;
    for (std::size_t i = n - w; i < n; ++i) sum += run[i].mean_return;
    finals.push_back(sum / static_cast<double>(w));
  }
  curve.final_mean = mean_of(finals);
  curve.final_std = population_std(finals, curve.final_mean);
  return curve;
}

std::vector<Curve> compare(const std::vector<RecordSet>& sets, const std::string& out_dir, std::size_t window) {
  if (sets.empty()) throw ConfigError("compare needs at least one record set");
  for (const auto& s : sets)
    if (s.equalize_by != sets.front().equalize_by)
      throw ConfigError("record sets use different x-axis accounting", 0, "equalize_by");
  std::vector<Curve> curves;
  std::map<std::string, int> seen;
  for (const auto& s : sets) {
    curves.push_back(summarize(s, window));
    if (int k = ++seen[s.label]; k > 1) curves.back().label += "#" + std::to_string(k);
  }
  fs::create_directories(out_dir);
  std::ofstream curves_csv(fs::path(out_dir) / "curves.csv");
  curves_csv << "label,update,x,mean_return,std_return\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      curves_csv << c.label << ',' << p.update << ',';
      format_double(curves_csv, p.x);
      curves_csv << ',';
      format_double(curves_csv, p.mean);
      curves_csv << ',';
      format_double(curves_csv, p.std);
      curves_csv << '\n';
    }
  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  summary << "label,seeds,updates,final_mean,final_std,diff_vs_first\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    summary << c.label << ',' << sets[i].runs.size() << ',' << c.points.size() << ',';
    format_double(summary, c.final_mean);
    summary << ',';
    format_double(summary, c.final_std);
    summary << ',';
    format_double(summary, c.final_mean - curves.front().final_mean);
    summary << '\n';
  }
  std::vector<PlotSeries> series;
  for (const auto& c : curves) {
    PlotSeries s;
    s.label = c.label;
    std::vector<double> means, stds;
    for (const auto& p : c.points) {
      s.x.push_back(p.x);
      means.push_back(p.mean);
      stds.push_back(p.std);
    }
    s.y = smooth(means, window);
    s.band = smooth(stds, window);
    series.push_back(std::move(s));
  }
  std::ofstream svg(fs::path(out_dir) / "plot.svg");
  svg << render_svg(series, "mean return (window " + std::to_string(window) + ")",
                    std::string(equalize_name(sets.front().equalize_by)), "mean return");
  if (!curves_csv || !summary || !svg) throw Error("cannot write compare outputs in " + out_dir);
  return curves;
}

}  // namespace gtrpo
