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

#include "gtrpo/spec_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gtrpo/error.hpp"

namespace gtrpo {
namespace {

namespace pt = boost::property_tree;

void write_row(std::ostream& out, const std::string& key, std::span<const double> values) {
  out << key << " =";
  for (double v : values) out << ' ' << v;
  out << '\n';
}

const pt::ptree& section(const pt::ptree& root, const std::string& name) {
  auto it = root.find(name);
  if (it == root.not_found()) throw ConfigError("missing section [" + name + "]", 0, name);
  return it->second;
}

std::vector<double> read_row(const pt::ptree& sec, const std::string& sec_name, const std::string& key,
                             std::size_t expected) {
  auto it = sec.find(key);
  if (it == sec.not_found()) throw ConfigError("missing key in [" + sec_name + "]", 0, key);
  std::istringstream in(it->second.data());
  std::vector<double> row;
  double v = 0.0;
  while (in >> v) row.push_back(v);
  if (!in.eof()) throw ConfigError("non-numeric value", 0, sec_name + "." + key);
  if (row.size() != expected)
    throw ConfigError("expected " + std::to_string(expected) + " values, got " + std::to_string(row.size()), 0,
                      sec_name + "." + key);
  return row;
}

template <typename T>
T read_scalar(const pt::ptree& sec, const std::string& key) {
  auto value = sec.get_optional<std::string>(key);
  if (!value) throw ConfigError("missing key in [spaces]", 0, key);
  std::istringstream in(*value);
  T out{};
  if (!(in >> out) || !(in >> std::ws).eof()) throw ConfigError("malformed value '" + *value + "'", 0, key);
  return out;
}

}  // namespace

void write_spec(std::ostream& out, const PomdpSpec& spec) {
  const auto& t = spec.tables();
  const auto nx = t.num_latent, ny = t.num_obs, na = t.num_actions;
  out << std::setprecision(17);
  out << "[spaces]\n"
      << "num_latent = " << nx << '\n'
      << "num_obs = " << ny << '\n'
      << "num_actions = " << na << '\n'
      << "gamma = " << t.gamma << '\n'
      << "max_steps = " << t.max_steps << '\n'
      << "reward_noise_std = " << t.reward_noise_std << '\n';
  out << "\n[init]\n";
  write_row(out, "p1", t.init);
  out << "\n[transition]\n";
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t a = 0; a < na; ++a)
      write_row(out, "x" + std::to_string(x) + "_a" + std::to_string(a), spec.transition_row(x, a));
  out << "\n[observation]\n";
  for (std::size_t x = 0; x < nx; ++x) write_row(out, "x" + std::to_string(x), spec.observation_row(x));
  out << "\n[reward]\n";
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t a = 0; a < na; ++a)
      write_row(out, "y" + std::to_string(y) + "_a" + std::to_string(a),
                std::span<const double>(t.reward_mean).subspan((y * na + a) * ny, ny));
}

PomdpSpec read_spec(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), e.line());
  }
  const auto& spaces = section(root, "spaces");
  PomdpTables t;
  t.num_latent = read_scalar<std::size_t>(spaces, "num_latent");
  t.num_obs = read_scalar<std::size_t>(spaces, "num_obs");
  t.num_actions = read_scalar<std::size_t>(spaces, "num_actions");
  t.gamma = read_scalar<double>(spaces, "gamma");
  t.max_steps = read_scalar<std::size_t>(spaces, "max_steps");
  t.reward_noise_std = read_scalar<double>(spaces, "reward_noise_std");
  if (t.num_latent < 2 || t.num_obs < 2 || t.num_actions < 1)
    throw ConfigError("space sizes too small", 0, "spaces");
  const auto nx = t.num_latent, ny = t.num_obs, na = t.num_actions;

  t.init = read_row(section(root, "init"), "init", "p1", nx - 1);
  const auto& trans = section(root, "transition");
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      auto row = read_row(trans, "transition", "x" + std::to_string(x) + "_a" + std::to_string(a), nx);
      t.transition.insert(t.transition.end(), row.begin(), row.end());
    }
  const auto& obs = section(root, "observation");
  for (std::size_t x = 0; x < nx; ++x) {
    auto row = read_row(obs, "observation", "x" + std::to_string(x), ny);
    t.observation.insert(t.observation.end(), row.begin(), row.end());
  }
  const auto& rew = section(root, "reward");
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t a = 0; a < na; ++a) {
      auto row = read_row(rew, "reward", "y" + std::to_string(y) + "_a" + std::to_string(a), ny);
      t.reward_mean.insert(t.reward_mean.end(), row.begin(), row.end());
    }
  return PomdpSpec(std::move(t));
}

void save_spec(const std::string& path, const PomdpSpec& spec) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_spec(out, spec);
}

PomdpSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_spec(in);
}

}  // namespace gtrpo
