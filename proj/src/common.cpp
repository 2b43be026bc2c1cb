// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include "afdc/common.hpp"

#include <iostream>

namespace afdc {

WarnHandler& warn_handler() {
  static WarnHandler handler = [](const std::string& message) {
    std::cerr << "[afdc] warning: " << message << "\n";
  };
  return handler;
}

void warn(const std::string& message) {
  if (warn_handler()) warn_handler()(message);
}

}  // namespace afdc
