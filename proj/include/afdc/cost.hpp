// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Static parameter and Mult-Adds accounting for vanilla vs K-dilation
// networks. One multiply-accumulate counts as one unit; the per-sample blend
// of K dilation branches adds out_elems*(K multiplies + K-1 adds) on AFDC
// layers. Only spatially-extended convs (k > 1) flagged afdc multiply their
// conv term by K; 1x1 convs and non-conv layers never do.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afdc/net.hpp"

namespace afdc {

struct LayerCost {
  std::string name;
  std::int64_t params = 0;
  std::int64_t mult_adds = 0;  // at the stated input resolution, batch of 1
  int dilation_multiplier = 1;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::int64_t params = 0;
  std::int64_t mult_adds = 0;
  int k_dilations = 1;
  Index in_h = 0, in_w = 0;
};

// Parameter counts are independent of K: AFDC branches share one kernel.
std::int64_t count_params(const NetworkConfig& config);

CostReport count_mult_adds(const NetworkConfig& config, Index in_h, Index in_w,
                           int k_dilations);

// Built-in inventories reproducing the reference architectures.
// resnet50: the original bottleneck topology (stride on the first 1x1),
// AFDC on every bottleneck 3x3; `first_conv_dilated` additionally flags the
// 7x7 stem. The four downsample projection shortcuts are counted in #Params
// but excluded from #Mult-Adds totals unless `count_shortcut_macs`; reverse
// arithmetic on the reference Mult-Adds figures shows that is the accounting
// they use (3.86G total - 0.36G projections = 3.50G).
NetworkConfig resnet50_config(bool first_conv_dilated = false,
                              bool count_shortcut_macs = false);
// vgg16: thirteen 3x3 convs (all AFDC-flagged) plus the three dense layers.
NetworkConfig vgg16_config();

// Expected Mult-Adds when batches are grouped by aspect-ratio band, vs
// running every batch with the full rate set.
struct GroupRow {
  double band_lo = 0, band_hi = 0;
  double mass = 0;
  int k_rates = 0;
  std::int64_t mult_adds = 0;
};

struct GroupingReport {
  std::vector<GroupRow> rows;
  double expected_grouped = 0;   // mass-weighted Mult-Adds
  double always_full = 0;        // Mult-Adds with the full set everywhere
  int full_k = 0;
};

struct RatioBand {
  double lo = 1.0, hi = 1.0;
  double mass = 0.0;
};

GroupingReport grouping_report(const std::vector<RatioBand>& histogram,
                               const std::vector<double>& boundaries,
                               const NetworkConfig& config, Index in_h,
                               Index in_w, int max_rate = 4);

}  // namespace afdc
