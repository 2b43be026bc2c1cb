// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Programmatic invariant suites behind `afdc selftest`: quick versions of
// the library's core correctness properties, runnable in a few seconds.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afdc {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs every suite; `inject_fault` flips a hidden known-bad check to verify
// the failure path end to end.
std::vector<SuiteResult> run_selftest(std::uint64_t seed,
                                      bool inject_fault = false);

}  // namespace afdc
