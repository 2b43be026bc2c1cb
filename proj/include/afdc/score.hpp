// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// 10-bin score distributions (bins are the ratings 1..10), their EMD distance
// and the loss gradient through softmax.

#pragma once

#include <array>
#include <cmath>
#include <span>

#include "afdc/common.hpp"
#include "afdc/tensor.hpp"

namespace afdc {

inline constexpr int kScoreBins = 10;

struct ScoreDistribution {
  std::array<double, kScoreBins> p{};

  static ScoreDistribution uniform() {
    ScoreDistribution d;
    d.p.fill(1.0 / kScoreBins);
    return d;
  }
  static ScoreDistribution point_mass(int bin) {
    require(bin >= 1 && bin <= kScoreBins, "bin must be in [1,10], got ", bin);
    ScoreDistribution d;
    d.p[bin - 1] = 1.0;
    return d;
  }
  // Gaussian density over bin centers 1..10, renormalized.
  static ScoreDistribution discretized_gaussian(double mean, double sigma) {
    ScoreDistribution d;
    double sum = 0;
    for (int i = 0; i < kScoreBins; ++i) {
      const double z = (static_cast<double>(i + 1) - mean) / sigma;
      d.p[i] = std::exp(-0.5 * z * z);
      sum += d.p[i];
    }
    for (double& v : d.p) v /= sum;
    return d;
  }

  double cdf(int k) const {  // sum of p_1..p_k, k in [1, 10]
    double s = 0;
    for (int i = 0; i < k; ++i) s += p[i];
    return s;
  }

  double mean() const {  // weighted sum of bin indices 1..10
    double m = 0;
    for (int i = 0; i < kScoreBins; ++i) m += (i + 1) * p[i];
    return m;
  }

  bool is_simplex(double tol = 1e-6) const {
    double s = 0;
    for (double v : p) {
      if (v < -tol) return false;
      s += v;
    }
    return std::abs(s - 1.0) <= tol;
  }
};

inline void require_simplex(const ScoreDistribution& d, const char* who) {
  require(d.is_simplex(), who, ": input is not a probability simplex");
}

// High/low label: high iff the mean score exceeds the threshold.
inline bool binarize(double mean_score, double threshold = 5.0) {
  return mean_score > threshold;
}

// EMD(p, q) = ((1/N) sum_k |CDF_p(k) - CDF_q(k)|^r)^(1/r)
inline double emd_loss(const ScoreDistribution& p_hat,
                       const ScoreDistribution& p, double r) {
  require(r >= 1.0, "emd r must be >= 1, got ", r);
  require_simplex(p_hat, "emd_loss");
  require_simplex(p, "emd_loss");
  double acc = 0, cdf_hat = 0, cdf_p = 0;
  for (int k = 0; k < kScoreBins; ++k) {
    cdf_hat += p_hat.p[k];
    cdf_p += p.p[k];
    acc += std::pow(std::abs(cdf_hat - cdf_p), r);
  }
  return std::pow(acc / kScoreBins, 1.0 / r);
}

// Templated variant over raw probability spans, used inside training where
// predictions live in the model's scalar type.
template <typename Scalar>
double emd_value(std::span<const Scalar> p_hat, std::span<const Scalar> p,
                 double r) {
  double acc = 0, cdf_hat = 0, cdf_p = 0;
  for (int k = 0; k < kScoreBins; ++k) {
    cdf_hat += static_cast<double>(p_hat[k]);
    cdf_p += static_cast<double>(p[k]);
    acc += std::pow(std::abs(cdf_hat - cdf_p), r);
  }
  return std::pow(acc / kScoreBins, 1.0 / r);
}

// dEMD/dp_hat. For r > 1 the terms are differentiable; at r == 1 this is the
// sign subgradient with sign(0) = 0 (r = 1 is evaluation-only).
template <typename Scalar>
void emd_grad_wrt_probs(std::span<const Scalar> p_hat,
                        std::span<const Scalar> p, double r,
                        std::span<double> grad) {
  const double value = emd_value(p_hat, p, r);
  std::array<double, kScoreBins> d_cdf{};
  double cdf_hat = 0, cdf_p = 0;
  for (int k = 0; k < kScoreBins; ++k) {
    cdf_hat += static_cast<double>(p_hat[k]);
    cdf_p += static_cast<double>(p[k]);
    const double diff = cdf_hat - cdf_p;
    if (r == 1.0) {
      d_cdf[k] = (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) / kScoreBins;
    } else if (value > 0.0) {
      d_cdf[k] = std::pow(value, 1.0 - r) *
                 std::pow(std::abs(diff), r - 1.0) *
                 (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) / kScoreBins;
    } else {
      d_cdf[k] = 0.0;  // equal distributions: gradient defined as zero
    }
  }
  // dCDF(k)/dp_j = [j <= k], so dL/dp_j is the suffix sum of d_cdf.
  double suffix = 0;
  for (int j = kScoreBins - 1; j >= 0; --j) {
    suffix += d_cdf[j];
    grad[j] = suffix;
  }
}

// Gradient of EMD(softmax(z), p) with respect to the logits z.
template <typename Scalar>
void softmax_emd_grad_wrt_logits(std::span<const Scalar> probs,
                                 std::span<const Scalar> target, double r,
                                 std::span<Scalar> grad_logits) {
  std::array<double, kScoreBins> g{};
  emd_grad_wrt_probs<Scalar>(probs, target, r, g);
  double mean_g = 0;
  for (int i = 0; i < kScoreBins; ++i)
    mean_g += g[i] * static_cast<double>(probs[i]);
  for (int i = 0; i < kScoreBins; ++i)
    grad_logits[i] =
        static_cast<Scalar>(static_cast<double>(probs[i]) * (g[i] - mean_g));
}

// Row n of a (N, 10, 1, 1) probability tensor as a ScoreDistribution.
template <typename Scalar>
ScoreDistribution to_distribution(const Tensor<Scalar>& probs, Index n) {
  require(probs.channels() == kScoreBins && probs.height() == 1 &&
              probs.width() == 1,
          "expected (N,10,1,1) probabilities, got ", probs.dims().to_string());
  ScoreDistribution d;
  for (int i = 0; i < kScoreBins; ++i)
    d.p[i] = static_cast<double>(probs.at(n, i, 0, 0));
  return d;
}

}  // namespace afdc
