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

// gtrpo: run experiments, compare record sets, run the property suites.
//
// Exit codes: 0 success, 1 check or runtime failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gtrpo/checks.hpp"
#include "gtrpo/error.hpp"
#include "gtrpo/experiment.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

int run_command(const std::string& config_path, const std::vector<std::uint64_t>& seeds, const std::string& out,
                const std::string& equalize) {
  gtrpo::ExperimentConfig config = gtrpo::load_experiment_config(config_path);
  if (!seeds.empty()) config.seeds = seeds;
  if (!out.empty()) config.output_dir = out;
  if (!equalize.empty()) config.equalize_by = gtrpo::parse_equalize(equalize);
  config.validate();
  gtrpo::run_experiment(config);
  std::cout << "wrote " << config.seeds.size() << " run(s) to " << config.output_dir << '\n';
  return 0;
}

int compare_command(const std::vector<std::string>& dirs, const std::string& out, std::size_t window) {
  std::vector<gtrpo::RecordSet> sets;
  for (const auto& d : dirs) sets.push_back(gtrpo::load_record_set(d));
  const auto curves = gtrpo::compare(sets, out.empty() ? "compare" : out, window);
  for (const auto& c : curves)
    std::cout << c.label << ": final mean return " << c.final_mean << " +/- " << c.final_std << '\n';
  return 0;
}

int verify_command(const std::string& suite, const std::string& out) {
  const auto results = gtrpo::run_suite(suite);
  gtrpo::write_report_text(std::cout, results);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream json(std::filesystem::path(out) / "verify_report.json");
    gtrpo::write_report_json(json, results);
    if (!json) throw gtrpo::Error("cannot write verify report in " + out);
  }
  const bool ok = gtrpo::all_passed(results);
  std::cout << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-gradient lab for finite episodic POMDPs"};
  app.require_subcommand(1);

  std::string config_path, out, equalize, suite = "all";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> dirs;
  std::size_t window = 10;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seeds, "Seed (repeatable), overrides [run] seeds")->take_all();
  run->add_option("--out", out, "Output directory, overrides [run] output_dir");
  run->add_option("--equalize", equalize, "x-axis accounting")->check(CLI::IsMember({"episodes", "steps"}));

  auto* cmp = app.add_subcommand("compare", "Summarize and plot record sets");
  cmp->add_option("dirs", dirs, "Run output directories")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--out", out, "Output directory (default: compare)");
  cmp->add_option("--window", window, "Smoothing and final-window width in updates")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Run the oracle-backed property suites");
  verify->add_option("suite", suite, "lemmas | estimators | clipping | all")
      ->check(CLI::IsMember({"lemmas", "estimators", "clipping", "all"}));
  verify->add_option("--out", out, "Directory for verify_report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, seeds, out, equalize);
    if (*cmp) return compare_command(dirs, out, window);
    if (*verify) return verify_command(suite, out);
  } catch (const gtrpo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
