// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include "afdc/cost.hpp"

#include <cmath>

namespace afdc {

namespace {

struct ChainState {
  Index c, h, w;
  bool flattened = false;
};

}  // namespace

std::int64_t count_params(const NetworkConfig& config) {
  // Conv params are resolution-independent; the nominal 224 input only
  // pins the flatten width ahead of dense layers.
  return count_mult_adds(config, 224, 224, 1).params;
}

CostReport count_mult_adds(const NetworkConfig& config, Index in_h, Index in_w,
                           int k_dilations) {
  require(k_dilations >= 1, "k_dilations must be >= 1");
  CostReport report;
  report.k_dilations = k_dilations;
  report.in_h = in_h;
  report.in_w = in_w;

  ChainState chain{config.input_channels, in_h, in_w, false};
  for (std::size_t i = 0; i < config.blocks.size(); ++i) {
    const LayerDesc& d = config.blocks[i];
    LayerCost cost;
    cost.name = d.name.empty() ? detail::concat("block", i) : d.name;
    ChainState in = chain;  // shortcut rows read the running chain state too

    switch (d.kind) {
      case LayerKind::conv: {
        require(!in.flattened, "block ", i, " (", cost.name,
                "): conv after flatten");
        const Index in_c = d.in_channels ? d.in_channels : in.c;
        const Index p = (d.kernel - 1) / 2;
        require(in.h + 2 * p >= d.kernel && in.w + 2 * p >= d.kernel,
                "block ", i, " (", cost.name, "): resolution ", in.h, "x",
                in.w, " incompatible with kernel ", d.kernel);
        const Index oh = (in.h + 2 * p - d.kernel) / d.stride + 1;
        const Index ow = (in.w + 2 * p - d.kernel) / d.stride + 1;
        cost.params = d.out_channels * in_c * d.kernel * d.kernel +
                      d.out_channels;
        const std::int64_t one_branch = static_cast<std::int64_t>(oh) * ow *
                                        d.out_channels * in_c * d.kernel *
                                        d.kernel;
        const bool dilated = d.afdc && d.kernel > 1 && k_dilations > 1;
        cost.dilation_multiplier = dilated ? k_dilations : 1;
        cost.mult_adds = one_branch * cost.dilation_multiplier;
        if (dilated) {
          // blend: K multiplies + (K-1) adds per output element
          cost.mult_adds += static_cast<std::int64_t>(oh) * ow *
                            d.out_channels * (2 * k_dilations - 1);
        }
        if (!d.shortcut) chain = ChainState{d.out_channels, oh, ow, false};
        break;
      }
      case LayerKind::relu:
        break;
      case LayerKind::avg_pool:
      case LayerKind::max_pool: {
        require(!in.flattened, "block ", i, " (", cost.name,
                "): pool after flatten");
        require(in.h + 2 * d.pool_pad >= d.pool_k &&
                    in.w + 2 * d.pool_pad >= d.pool_k,
                "block ", i, " (", cost.name, "): resolution ", in.h, "x",
                in.w, " incompatible with pool window ", d.pool_k);
        chain.h = (in.h + 2 * d.pool_pad - d.pool_k) / d.pool_stride + 1;
        chain.w = (in.w + 2 * d.pool_pad - d.pool_k) / d.pool_stride + 1;
        break;
      }
      case LayerKind::global_pool:
        require(!in.flattened, "block ", i, " (", cost.name,
                "): pool after flatten");
        chain.h = 1;
        chain.w = 1;
        break;
      case LayerKind::dense: {
        const Index in_dim = in.flattened ? in.c : in.c * in.h * in.w;
        cost.params = d.dense_out * in_dim + d.dense_out;
        cost.mult_adds = static_cast<std::int64_t>(d.dense_out) * in_dim;
        chain = ChainState{d.dense_out, 1, 1, true};
        break;
      }
    }
    report.params += cost.params;
    if (d.macs_counted) report.mult_adds += cost.mult_adds;
    report.layers.push_back(std::move(cost));
  }

  if (config.head) {
    const SppHead& head = *config.head;
    const Index per_scale =
        head.feature_dim / static_cast<Index>(head.scales.size());
    for (Index g : head.scales) {
      LayerCost cost;
      cost.name = detail::concat("spp", g);
      const Index in_dim = chain.c * g * g;
      cost.params = per_scale * in_dim + per_scale;
      cost.mult_adds = per_scale * in_dim;
      report.params += cost.params;
      report.mult_adds += cost.mult_adds;
      report.layers.push_back(std::move(cost));
    }
    LayerCost out_cost;
    out_cost.name = "out";
    out_cost.params = config.score_bins * head.feature_dim + config.score_bins;
    out_cost.mult_adds = config.score_bins * head.feature_dim;
    report.params += out_cost.params;
    report.mult_adds += out_cost.mult_adds;
    report.layers.push_back(std::move(out_cost));
  }
  return report;
}

namespace {

void add_conv(NetworkConfig& cfg, std::string name, Index in_c, Index out_c,
              Index k, Index stride, bool afdc, bool shortcut = false,
              bool macs_counted = true) {
  LayerDesc d;
  d.kind = LayerKind::conv;
  d.name = std::move(name);
  d.in_channels = in_c;
  d.out_channels = out_c;
  d.kernel = k;
  d.stride = stride;
  d.afdc = afdc;
  d.shortcut = shortcut;
  d.macs_counted = macs_counted;
  cfg.blocks.push_back(d);
}

void add_pool(NetworkConfig& cfg, std::string name, Index k, Index stride,
              Index pad = 0) {
  LayerDesc d;
  d.kind = LayerKind::max_pool;
  d.name = std::move(name);
  d.pool_k = k;
  d.pool_stride = stride;
  d.pool_pad = pad;
  cfg.blocks.push_back(d);
}

void add_dense(NetworkConfig& cfg, std::string name, Index out) {
  LayerDesc d;
  d.kind = LayerKind::dense;
  d.name = std::move(name);
  d.dense_out = out;
  cfg.blocks.push_back(d);
}

}  // namespace

NetworkConfig resnet50_config(bool first_conv_dilated,
                              bool count_shortcut_macs) {
  NetworkConfig cfg;
  cfg.name = first_conv_dilated ? "resnet50*" : "resnet50";
  cfg.input_channels = 3;

  add_conv(cfg, "stem", 3, 64, 7, 2, first_conv_dilated);
  add_pool(cfg, "maxpool", 3, 2, 1);

  struct Stage {
    int blocks;
    Index width, out_c, stride;
  };
  const Stage stages[] = {
      {3, 64, 256, 1}, {4, 128, 512, 2}, {6, 256, 1024, 2}, {3, 512, 2048, 2}};
  Index in_c = 64;
  int stage_no = 1;
  for (const Stage& s : stages) {
    for (int b = 0; b < s.blocks; ++b) {
      const std::string prefix =
          detail::concat("layer", stage_no, ".", b, ".");
      const Index stride = b == 0 ? s.stride : 1;
      // original bottleneck: stride on the first 1x1
      add_conv(cfg, prefix + "conv1", in_c, s.width, 1, stride, false);
      add_conv(cfg, prefix + "conv2", s.width, s.width, 3, 1, true);
      add_conv(cfg, prefix + "conv3", s.width, s.out_c, 1, 1, false);
      if (b == 0)
        add_conv(cfg, prefix + "proj", in_c, s.out_c, 1, stride, false,
                 /*shortcut=*/true, /*macs_counted=*/count_shortcut_macs);
      in_c = s.out_c;
    }
    ++stage_no;
  }
  LayerDesc gap;
  gap.kind = LayerKind::global_pool;
  gap.name = "gap";
  cfg.blocks.push_back(gap);
  add_dense(cfg, "fc", 1000);
  return cfg;
}

NetworkConfig vgg16_config() {
  NetworkConfig cfg;
  cfg.name = "vgg16";
  cfg.input_channels = 3;
  const Index widths[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0,
                          512, 512, 512, 0, 512, 512, 512, 0};
  Index in_c = 3;
  int conv_no = 1, pool_no = 1;
  for (Index w : widths) {
    if (w == 0) {
      add_pool(cfg, detail::concat("pool", pool_no++), 2, 2);
      continue;
    }
    add_conv(cfg, detail::concat("conv", conv_no++), in_c, w, 3, 1, true);
    in_c = w;
  }
  add_dense(cfg, "fc6", 4096);
  add_dense(cfg, "fc7", 4096);
  add_dense(cfg, "fc8", 1000);
  return cfg;
}

GroupingReport grouping_report(const std::vector<RatioBand>& histogram,
                               const std::vector<double>& boundaries,
                               const NetworkConfig& config, Index in_h,
                               Index in_w, int max_rate) {
  double mass = 0;
  for (const RatioBand& b : histogram) {
    require(b.mass >= 0 && b.hi >= b.lo && b.lo >= 1.0,
            "invalid histogram band");
    mass += b.mass;
  }
  require(std::abs(mass - 1.0) < 1e-9, "histogram mass must sum to 1, got ",
          mass);
  require(boundaries.size() >= 2 && boundaries.front() == 1.0,
          "boundaries must start at 1.0");

  GroupingReport report;
  const DilationRateSet full =
      DilationRateSet::covering(1.0, boundaries.back(), max_rate);
  report.full_k = static_cast<int>(full.size());
  report.always_full = static_cast<double>(
      count_mult_adds(config, in_h, in_w, report.full_k).mult_adds);

  for (std::size_t g = 0; g + 1 < boundaries.size(); ++g) {
    GroupRow row;
    row.band_lo = boundaries[g];
    row.band_hi = boundaries[g + 1];
    const DilationRateSet rates =
        DilationRateSet::covering(row.band_lo, row.band_hi, max_rate);
    row.k_rates = static_cast<int>(rates.size());
    row.mult_adds =
        count_mult_adds(config, in_h, in_w, row.k_rates).mult_adds;
    report.rows.push_back(row);
  }
  // Each histogram bin lands in exactly one band (by its midpoint, clamped).
  for (const RatioBand& b : histogram) {
    const double mid = std::min((b.lo + b.hi) / 2.0, boundaries.back());
    std::size_t g = report.rows.size() - 1;
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
      if (mid <= boundaries[i + 1] + 1e-12) {
        g = i;
        break;
      }
    report.rows[g].mass += b.mass;
  }
  for (const GroupRow& row : report.rows)
    report.expected_grouped +=
        row.mass * static_cast<double>(row.mult_adds);
  return report;
}

}  // namespace afdc
