// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace afdc {

using Index = std::int64_t;

// Library-wide error type. Every documented failure path throws this with a
// message that names the offending quantity (axis, layer index, file, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  throw Error(detail::concat(std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool cond, Args&&... args) {
  if (!cond) fail(std::forward<Args>(args)...);
}

// Warning sink, replaceable so tests can capture or silence it.
using WarnHandler = std::function<void(const std::string&)>;
WarnHandler& warn_handler();
void warn(const std::string& message);

}  // namespace afdc
