// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-finite-difference gradient checking against analytic gradients.
// Double precision only; single-precision finite differences are too noisy
// to be a trustworthy oracle.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "afdc/common.hpp"
#include "afdc/rng.hpp"

namespace afdc {

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  Index worst_index = -1;
  Index checked = 0;

  bool within(double tolerance) const { return max_rel_err < tolerance; }
  std::string to_string() const {
    return detail::concat("max_rel_err=", max_rel_err,
                          " max_abs_err=", max_abs_err, " at index ",
                          worst_index, " over ", checked, " coords");
  }
};

// `loss` re-evaluates the scalar objective from the buffer `x` (which it must
// read through the same storage). `analytic` is dL/dx. When max_coords >= 0,
// a random subset of coordinates is probed (rng required), else all of them.
inline GradCheckReport grad_check(const std::function<double()>& loss,
                                  std::span<double> x,
                                  std::span<const double> analytic,
                                  double step, Index max_coords = -1,
                                  RngStream* rng = nullptr) {
  require(x.size() == analytic.size(),
          "grad_check: analytic gradient size mismatch");
  GradCheckReport report;
  const Index n = static_cast<Index>(x.size());
  std::vector<Index> coords;
  if (max_coords >= 0 && max_coords < n) {
    require(rng != nullptr, "grad_check: sampling requires an rng");
    coords.reserve(max_coords);
    for (Index i = 0; i < max_coords; ++i)
      coords.push_back(rng->uniform_int(0, n - 1));
  } else {
    coords.resize(n);
    for (Index i = 0; i < n; ++i) coords[i] = i;
  }

  for (Index i : coords) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = loss();
    x[i] = saved - step;
    const double down = loss();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double abs_err = std::abs(numeric - analytic[i]);
    const double denom =
        std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    const double rel_err = abs_err / denom;
    if (rel_err > report.max_rel_err) {
      report.max_rel_err = rel_err;
      report.worst_index = i;
    }
    report.max_abs_err = std::max(report.max_abs_err, abs_err);
    ++report.checked;
  }
  return report;
}

}  // namespace afdc
