// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include "afdc/selftest.hpp"

#include <cmath>

#include "afdc/afdc_conv.hpp"
#include "afdc/cost.hpp"
#include "afdc/dataset.hpp"
#include "afdc/gradcheck.hpp"
#include "afdc/metrics.hpp"
#include "afdc/net.hpp"
#include "afdc/score.hpp"

namespace afdc {
namespace {

template <typename S>
void randomize(Tensor<S>& t, RngStream& rng, double scale = 1.0) {
  for (Index i = 0; i < t.size(); ++i)
    t.array()[i] = static_cast<S>(rng.normal() * scale);
}

template <typename S>
void randomize_kernel(ConvKernel<S>& k, RngStream& rng, double scale = 1.0) {
  for (Index i = 0; i < k.weights.size(); ++i)
    k.weights[i] = static_cast<S>(rng.normal() * scale);
  for (Index i = 0; i < k.bias.size(); ++i)
    k.bias[i] = static_cast<S>(rng.normal() * scale);
}

// Dense zero-stuffed embedding of a dilated kernel, centered on a common
// canvas; blending kernels then convolving once must equal blending the two
// branch outputs (the distributive identity).
template <typename S>
SuiteResult distributivity_suite(RngStream& rng, int trials) {
  SuiteResult res{"distributivity", true, ""};
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const Index in_c = rng.uniform_int(1, 2);
    const Index out_c = rng.uniform_int(1, 2);
    const Index k = 3;
    const Index hw = rng.uniform_int(9, 14);
    const int d1 = static_cast<int>(rng.uniform_int(1, 3));
    const int d2 = d1 + 1;
    const double r = rng.uniform(static_cast<double>(d1),
                                 static_cast<double>(d2));
    const double w_hi = r - d1, w_lo = d2 - r;
    const bool horizontal = rng.uniform() < 0.5;

    Tensor<S> x(1, in_c, hw, hw);
    randomize(x, rng);
    ConvKernel<S> base(out_c, in_c, k, k);
    randomize_kernel(base, rng);
    base.bias.setZero();

    auto dilated = [&](int d) {
      ConvKernel<S> b = base;
      b.dilation = horizontal ? Dilation{1, d} : Dilation{d, 1};
      b.padding = horizontal ? Padding{(k - 1) / 2, (k - 1) * d / 2}
                             : Padding{(k - 1) * d / 2, (k - 1) / 2};
      return conv2d_forward(x, b, false);
    };
    const auto f1 = dilated(d1);
    const auto f2 = dilated(d2);
    auto blend_then = (static_cast<S>(w_lo) * f1.array() +
                       static_cast<S>(w_hi) * f2.array())
                          .eval();

    // single conv with the blended dense kernel on the common extent
    const Index ext = (k - 1) * d2 + 1;
    ConvKernel<S> dense(out_c, in_c, horizontal ? k : ext,
                        horizontal ? ext : k);
    dense.padding = horizontal ? Padding{(k - 1) / 2, (ext - 1) / 2}
                               : Padding{(ext - 1) / 2, (k - 1) / 2};
    auto embed = [&](int d, double weight) {
      const Index shift = (Index(k) - 1) * (d2 - d) / 2;
      for (Index oc = 0; oc < out_c; ++oc)
        for (Index ic = 0; ic < in_c; ++ic)
          for (Index ky = 0; ky < k; ++ky)
            for (Index kx = 0; kx < k; ++kx) {
              const Index dy = horizontal ? ky : shift + ky * d;
              const Index dx = horizontal ? shift + kx * d : kx;
              dense.weight_at(oc, ic, dy, dx) +=
                  static_cast<S>(weight) * base.weight_at(oc, ic, ky, kx);
            }
    };
    embed(d1, w_lo);
    embed(d2, w_hi);
    const auto conv_then_blend = conv2d_forward(x, dense, false);

    const double scale =
        std::max(1e-9, static_cast<double>(blend_then.abs().maxCoeff()));
    const double err = static_cast<double>(
                           (conv_then_blend.array() - blend_then).abs()
                               .maxCoeff()) /
                       scale;
    worst = std::max(worst, err);
  }
  const double tol = std::is_same_v<S, double> ? 1e-12 : 1e-5;
  res.passed = worst <= tol;
  res.detail = detail::concat("max rel err ", worst, " (tol ", tol, ", ",
                              trials, " trials, ",
                              std::is_same_v<S, double> ? "f64" : "f32", ")");
  res.name = std::is_same_v<S, double> ? "distributivity_f64"
                                       : "distributivity_f32";
  return res;
}

SuiteResult weight_contract_suite() {
  SuiteResult res{"weight_contract", true, ""};
  const DilationRateSet seven = DilationRateSet::seven_kernel();
  int checked = 0;
  for (int orient = 0; orient < 2; ++orient) {
    for (int cent = 100; cent <= 400; ++cent) {
      const double r = cent / 100.0;
      const AspectRatio ratio =
          orient == 0 ? compute_ratio(static_cast<Index>(std::lround(r * 1000)),
                                      1000)
                      : compute_ratio(1000,
                                      static_cast<Index>(std::lround(r * 1000)));
      const InterpolationWeights w = interpolation_weights(ratio, seven);
      ++checked;
      double sum = 0;
      int nonzeros = 0;
      for (std::size_t i = 0; i < w.w.size(); ++i) {
        if (w.w[i] < 0) {
          res.passed = false;
          res.detail = detail::concat("negative weight at r=", r);
        }
        sum += w.w[i];
        if (w.w[i] != 0) {
          ++nonzeros;
          const RatePair& p = seven[i];
          const bool orientation_ok =
              (p == RatePair{1, 1}) ||
              (ratio.orientation == Orientation::tall ? p.v == 1 : p.h == 1);
          if (!orientation_ok) {
            res.passed = false;
            res.detail = detail::concat("support off orientation at r=", r);
          }
        }
      }
      if (std::abs(sum - 1.0) > 1e-12 || nonzeros > 2) {
        res.passed = false;
        res.detail = detail::concat("sum/nonzeros broken at r=", r);
      }
      const bool integer = std::abs(r - std::round(r)) < 1e-12;
      if (integer && nonzeros != 1) {
        res.passed = false;
        res.detail = detail::concat("integer r=", r, " not one-hot");
      }
    }
  }
  if (res.passed)
    res.detail = detail::concat(checked, " ratios, both orientations");
  return res;
}

SuiteResult gradient_suite(RngStream& rng) {
  SuiteResult res{"gradient_checks", true, ""};
  // conv
  {
    Tensor<double> in(1, 2, 5, 5);
    randomize(in, rng);
    ConvKernel<double> k(2, 2, 3, 3, Dilation{1, 2}, Stride{1, 1},
                         Padding{1, 2});
    randomize_kernel(k, rng);
    Tensor<double> cot(conv_output_dims(in.dims(), k));
    randomize(cot, rng);
    auto loss = [&] {
      return (conv2d_forward(in, k).array() * cot.array()).sum();
    };
    const auto grads = conv2d_backward(in, k, cot);
    const auto rep = grad_check(
        loss, {k.weights.data(), static_cast<std::size_t>(k.weights.size())},
        {grads.weights.data(), static_cast<std::size_t>(grads.weights.size())},
        1e-5);
    if (rep.max_rel_err >= 1e-4) {
      res.passed = false;
      res.detail = detail::concat("conv weights: ", rep.to_string());
    }
  }
  // softmax + EMD r=2
  if (res.passed) {
    std::array<double, kScoreBins> logits{};
    for (auto& v : logits) v = rng.normal();
    const ScoreDistribution target =
        ScoreDistribution::discretized_gaussian(6.1, 1.2);
    std::array<double, kScoreBins> target_arr;
    for (int i = 0; i < kScoreBins; ++i) target_arr[i] = target.p[i];
    auto probs_of = [&](const std::array<double, kScoreBins>& z) {
      std::array<double, kScoreBins> p;
      double mx = z[0];
      for (double v : z) mx = std::max(mx, v);
      double sum = 0;
      for (int i = 0; i < kScoreBins; ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
      }
      for (auto& v : p) v /= sum;
      return p;
    };
    auto loss = [&] {
      const auto p = probs_of(logits);
      return emd_value<double>(p, target_arr, 2.0);
    };
    const auto p = probs_of(logits);
    std::array<double, kScoreBins> g;
    softmax_emd_grad_wrt_logits<double>(p, target_arr, 2.0, g);
    const auto rep =
        grad_check(loss, {logits.data(), logits.size()}, {g.data(), g.size()},
                   1e-6);
    if (rep.max_rel_err >= 1e-4) {
      res.passed = false;
      res.detail = detail::concat("softmax+emd: ", rep.to_string());
    }
  }
  if (res.passed) res.detail = "conv and softmax+emd match finite differences";
  return res;
}

SuiteResult emd_oracle_suite() {
  SuiteResult res{"emd_oracle", true, ""};
  for (int i = 1; i <= kScoreBins && res.passed; ++i)
    for (int j = i + 1; j <= kScoreBins && res.passed; ++j) {
      const double expect = static_cast<double>(j - i) / kScoreBins;
      const double got = emd_loss(ScoreDistribution::point_mass(i),
                                  ScoreDistribution::point_mass(j), 1.0);
      if (std::abs(got - expect) > 1e-12) {
        res.passed = false;
        res.detail = detail::concat("point masses (", i, ",", j, "): got ",
                                    got, " want ", expect);
      }
    }
  if (res.passed) res.detail = "all 45 point-mass pairs equal |i-j|/10";
  return res;
}

SuiteResult grouping_equivalence_suite(RngStream& rng) {
  SuiteResult res{"grouping_equivalence", true, ""};
  const DilationRateSet seven = DilationRateSet::seven_kernel();
  ConvKernel<float> base(3, 2, 3, 3, Dilation{1, 1}, Stride{1, 1},
                         Padding{1, 1});
  randomize_kernel(base, rng, 0.3);
  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 6;
    Tensor<float> batch(n, 2, 12, 12);
    randomize(batch, rng, 0.5);
    std::vector<AspectRatio> ratios;
    for (Index i = 0; i < n; ++i) {
      const double r = rng.uniform(1.0, 4.0);
      const bool tall = rng.uniform() < 0.5;
      const Index unit = 600;
      ratios.push_back(
          tall ? compute_ratio(static_cast<Index>(r * unit), unit)
               : compute_ratio(unit, static_cast<Index>(r * unit)));
    }
    std::vector<InterpolationWeights> weights;
    for (const auto& r : ratios)
      weights.push_back(interpolation_weights(r, seven));
    const Tensor<float> batched =
        afdc_batch_forward<float>(batch, weights, base, seven);
    for (Index i = 0; i < n; ++i) {
      const Tensor<float> one = afdc_direct(batch.slice(i), base, ratios[i]);
      const Index stride = one.size();
      const auto diff = (batched.array().segment(i * stride, stride) -
                         one.array())
                            .abs()
                            .maxCoeff();
      const auto scale = std::max(1e-6f, one.array().abs().maxCoeff());
      worst = std::max(worst, static_cast<double>(diff / scale));
    }
  }
  res.passed = worst <= 1e-6;
  res.detail = detail::concat("max rel err ", worst, " (tol 1e-6, f32)");
  return res;
}

SuiteResult restoration_suite(RngStream& rng) {
  SuiteResult res{"receptive_field_restoration", true, ""};
  for (int s = 2; s <= 4 && res.passed; ++s) {
    Tensor<double> orig(1, 1, 8, 8);
    randomize(orig, rng);
    const Tensor<double> stretched =
        resize_nearest(orig, 8, 8 * static_cast<Index>(s));
    ConvKernel<double> k(1, 1, 3, 3);
    randomize_kernel(k, rng);
    const Tensor<double> vanilla = conv2d_forward(orig, k);
    ConvKernel<double> dil = k;
    dil.dilation = Dilation{1, s};
    dil.stride = Stride{1, s};
    const Tensor<double> restored = conv2d_forward(stretched, dil);
    if (restored.dims() != vanilla.dims()) {
      res.passed = false;
      res.detail = detail::concat("dims mismatch at s=", s);
      break;
    }
    if (!(restored.array() == vanilla.array()).all()) {
      res.passed = false;
      res.detail = detail::concat("values differ at s=", s);
    }
  }
  if (res.passed) res.detail = "exact equality for stretch factors 2,3,4";
  return res;
}

SuiteResult shape_law_suite() {
  SuiteResult res{"dilation_shape_law", true, ""};
  int checked = 0;
  for (Index in : {6, 9, 13})
    for (Index k : {1, 2, 3, 5})
      for (Index d : {1, 2, 3})
        for (Index s : {1, 2, 3})
          for (Index p : {0, 1, 3}) {
            if ((k - 1) * d + 1 > in + 2 * p) continue;
            Tensor<float> x(1, 1, in, in);
            ConvKernel<float> kk(1, 1, k, k, Dilation{d, d}, Stride{s, s},
                                 Padding{p, p});
            const Dims out = conv_output_dims(x.dims(), kk);
            const Index expect = (in + 2 * p - ((k - 1) * d + 1)) / s + 1;
            ++checked;
            if (out.h != expect || out.w != expect) {
              res.passed = false;
              res.detail = detail::concat("mismatch at in=", in, " k=", k,
                                          " d=", d, " s=", s, " p=", p);
              return res;
            }
          }
  res.detail = detail::concat(checked, " (k,d,s,p) combinations");
  return res;
}

SuiteResult pool_mean_suite(RngStream& rng) {
  SuiteResult res{"pool_global_mean", true, ""};
  Tensor<double> x(2, 3, 7, 9);
  randomize(x, rng);
  const Tensor<double> pooled = adaptive_avg_pool(x, PoolSpec{1});
  for (Index n = 0; n < 2 && res.passed; ++n)
    for (Index c = 0; c < 3 && res.passed; ++c) {
      double mean = 0;
      for (Index y = 0; y < 7; ++y)
        for (Index xx = 0; xx < 9; ++xx) mean += x.at(n, c, y, xx);
      mean /= 63.0;
      if (std::abs(pooled.at(n, c, 0, 0) - mean) > 1e-12) {
        res.passed = false;
        res.detail = "global average pool deviates from the mean";
      }
    }
  if (res.passed) res.detail = "g=1 equals global mean to 1e-12";
  return res;
}

SuiteResult param_freeness_suite() {
  SuiteResult res{"parameter_freeness", true, ""};
  NetworkConfig cfg;
  cfg.name = "selftest";
  cfg.input_channels = 1;
  auto conv = [](Index out, Index k, Index stride, bool afdc) {
    LayerDesc d;
    d.kind = LayerKind::conv;
    d.out_channels = out;
    d.kernel = k;
    d.stride = stride;
    d.afdc = afdc;
    return d;
  };
  LayerDesc relu_d;
  relu_d.kind = LayerKind::relu;
  cfg.blocks = {conv(8, 3, 1, true), relu_d, conv(12, 3, 2, true), relu_d};
  cfg.head = SppHead{{1, 2}, 24};
  NetworkConfig vanilla = cfg;
  for (auto& b : vanilla.blocks) b.afdc = false;
  const auto afdc_model = Model<float>::build(cfg, 7);
  const auto vanilla_model = Model<float>::build(vanilla, 7);
  res.passed =
      afdc_model.parameter_count() == vanilla_model.parameter_count() &&
      count_params(cfg) == count_params(vanilla);
  res.detail = detail::concat("afdc=", afdc_model.parameter_count(),
                              " vanilla=", vanilla_model.parameter_count());
  return res;
}

}  // namespace

std::vector<SuiteResult> run_selftest(std::uint64_t seed, bool inject_fault) {
  RngStream rng = RngStream::derive(seed, rng_purpose::kSelfTest);
  std::vector<SuiteResult> results;
  results.push_back(shape_law_suite());
  results.push_back(distributivity_suite<double>(rng, 40));
  results.push_back(distributivity_suite<float>(rng, 40));
  results.push_back(weight_contract_suite());
  results.push_back(gradient_suite(rng));
  results.push_back(emd_oracle_suite());
  results.push_back(grouping_equivalence_suite(rng));
  results.push_back(restoration_suite(rng));
  results.push_back(pool_mean_suite(rng));
  results.push_back(param_freeness_suite());
  if (inject_fault)
    results.push_back({"fault_injection", false,
                       "deliberately failing suite (hidden test hook)"});
  return results;
}

}  // namespace afdc
