// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fdnas::selftest {

/// Exit status of a suite run with at least one failing criterion.
inline constexpr int kExitAcceptanceFailed = 4;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string summary;              // one line, printed after PASS/FAIL
  std::vector<std::string> detail;  // indented lines printed below
  double seconds = 0.0;
};

/// Parses "1,3,5" into criterion numbers; empty means all nine. Throws
/// ArgumentError on anything else.
std::vector<int> parse_selection(std::string_view only);

/// Runs the selected criteria, printing one PASS/FAIL line per criterion.
/// Returns 0 when all pass and kExitAcceptanceFailed otherwise.
int run_acceptance(std::string_view only, std::size_t threads, std::ostream& out);

}  // namespace fdnas::selftest
