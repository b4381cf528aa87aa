// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>

#include "selftest/acceptance.hpp"

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  return fdnas::selftest::run_acceptance(only, 1, std::cout);
}
