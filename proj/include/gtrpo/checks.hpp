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

#ifndef GTRPO_CHECKS_HPP_
#define GTRPO_CHECKS_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gtrpo {

/// One property check with fixed seeds.
struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  bool required = true;  ///< informational checks never fail a suite
};

/// "lemmas", "estimators", "clipping".
const std::vector<std::string>& suite_names();

/// Runs one registered suite, or every suite for "all". Throws ConfigError
/// on an unknown name.
std::vector<CheckResult> run_suite(std::string_view suite);

/// True when every required check passed.
bool all_passed(const std::vector<CheckResult>& results);

/// One "[PASS]/[FAIL] suite/name measured=.. tol=.." line per check.
void write_report_text(std::ostream& out, const std::vector<CheckResult>& results);

/// {"passed": bool, "checks": [{suite, name, passed, required, measured, tolerance, detail}]}
void write_report_json(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace gtrpo

#endif  // GTRPO_CHECKS_HPP_
