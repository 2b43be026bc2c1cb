// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metric suite over predicted and ground-truth score
// distributions: binary accuracy, MSE/LCC on mean scores, mean EMD (r=1),
// SRCC on average ranks. Correlations on zero-variance inputs are reported
// as absent rather than as numbers.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "afdc/score.hpp"

namespace afdc {

struct MetricReport {
  double cls_acc = 0;
  double mse = 0;
  double emd = 0;
  std::optional<double> srcc;
  std::optional<double> lcc;
};

namespace detail {

inline std::optional<double> pearson(std::span<const double> a,
                                     std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;  // undefined, flag it
  return sab / std::sqrt(saa * sbb);
}

// Average ranks (1-based); ties share the mean of their rank range.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) {
                     return values[i] < values[j];
                   });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

inline MetricReport compute_metrics(std::span<const ScoreDistribution> preds,
                                    std::span<const ScoreDistribution>
                                        targets) {
  require(preds.size() == targets.size(), "metrics: length mismatch, ",
          preds.size(), " predictions vs ", targets.size(), " targets");
  require(!preds.empty(), "metrics: empty input");
  const std::size_t n = preds.size();

  std::vector<double> pm(n), tm(n);
  MetricReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    pm[i] = preds[i].mean();
    tm[i] = targets[i].mean();
    rep.cls_acc += binarize(pm[i]) == binarize(tm[i]) ? 1.0 : 0.0;
    rep.mse += (pm[i] - tm[i]) * (pm[i] - tm[i]);
    rep.emd += emd_loss(preds[i], targets[i], 1.0);
  }
  rep.cls_acc /= n;
  rep.mse /= n;
  rep.emd /= n;

  if (n >= 2) {
    rep.lcc = detail::pearson(pm, tm);
    const auto pr = detail::average_ranks(pm);
    const auto tr = detail::average_ranks(tm);
    rep.srcc = detail::pearson(pr, tr);
  }
  return rep;
}

// The constant predictor minimizing mean EMD (r=1): its CDF is the
// coordinate-wise median of the target CDFs. Used as the marginal baseline.
inline ScoreDistribution best_constant_predictor(
    std::span<const ScoreDistribution> targets) {
  require(!targets.empty(), "best_constant_predictor: empty input");
  std::array<double, kScoreBins> med_cdf{};
  std::vector<double> column(targets.size());
  for (int k = 1; k <= kScoreBins; ++k) {
    for (std::size_t i = 0; i < targets.size(); ++i)
      column[i] = targets[i].cdf(k);
    std::nth_element(column.begin(), column.begin() + column.size() / 2,
                     column.end());
    double med = column[column.size() / 2];
    if (column.size() % 2 == 0) {
      const double hi = med;
      std::nth_element(column.begin(), column.begin() + column.size() / 2 - 1,
                       column.end());
      med = (column[column.size() / 2 - 1] + hi) / 2.0;
    }
    med_cdf[k - 1] = med;
  }
  med_cdf[kScoreBins - 1] = 1.0;  // CDFs all end at 1
  ScoreDistribution q;
  double prev = 0;
  for (int k = 0; k < kScoreBins; ++k) {
    // Medians of monotone CDFs are monotone; the clamp only absorbs
    // floating-point slack.
    q.p[k] = std::max(0.0, med_cdf[k] - prev);
    prev = med_cdf[k];
  }
  return q;
}

}  // namespace afdc
