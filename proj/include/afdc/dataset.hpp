// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Data pipeline: image records carrying their ORIGINAL aspect ratio through
// square warping, ratio-based grouping with per-group rate sets, the
// synthetic ratio-labelled dataset, and the CSV manifest format
//   path,orig_h,orig_w,p1..p10

#pragma once

#include <string>
#include <vector>

#include "afdc/ops.hpp"
#include "afdc/rates.hpp"
#include "afdc/rng.hpp"
#include "afdc/score.hpp"
#include "afdc/tensor.hpp"

namespace afdc {

struct ImageRecord {
  Tensor<float> pixels;  // (1, C, H, W) in [0,1]
  AspectRatio ratio;     // always the pre-warp ratio
  ScoreDistribution label;
  std::string source;
};

// Bilinear warp to size x size. The stored ratio is untouched: it encodes the
// original geometry, which is exactly what the dilation must see.
ImageRecord warp_to_square(const ImageRecord& record, Index size);

// Draws the shared warp size for one batch, uniform on [min, max].
inline Index draw_warp_size(RngStream& rng, Index min_size, Index max_size) {
  require(min_size >= 1 && min_size <= max_size, "invalid warp range [",
          min_size, ",", max_size, "]");
  return rng.uniform_int(min_size, max_size);
}

ImageRecord random_square_warp(const ImageRecord& record, Index min_size,
                               Index max_size, RngStream& rng);

// Records grouped by aspect-ratio band; all members can be evaluated with the
// group's (minimal) rate set.
struct BatchGroup {
  std::vector<ImageRecord> records;
  DilationRateSet active_rates;
  double band_lo = 1.0;
  double band_hi = 1.0;
};

// Default bands mirror the training curriculum: ratios in [1,2] (97.8% of
// natural images, both orientations) form a 3-rate group, the rest the
// 7-rate group.
std::vector<double> default_group_boundaries();

// `boundaries` partitions [1, r_max] as {1, b_1, ..., r_max}. Records beyond
// r_max go to the widest group with a warning. Empty-band groups are dropped;
// record order inside a group follows the input order.
std::vector<BatchGroup> group_by_ratio(const std::vector<ImageRecord>& records,
                                       const std::vector<double>& boundaries,
                                       int max_rate = 4);

// --- synthetic ratio-labelled dataset --------------------------------------
// Content is defined in normalized coordinates (a soft centered ellipse plus
// band-limited cosine noise), so after square warping, images of different
// original ratios are indistinguishable in distribution; the label mean is a
// smooth function of the signed log-ratio only. Only a ratio-aware model can
// fit these labels.
struct SynthSpec {
  int count = 0;
  Index base_side = 40;     // original images have area ~ base_side^2
  double r_min = 1.0;       // ratio range, both orientations drawn from it
  double r_max = 2.0;
  double score_amp = 2.5;   // label mean = 5.5 + score_amp * log2(w/h)
  double sigma = 0.8;       // label distribution width
  double noise_amp = 0.06;  // cosine-field amplitude
  int noise_modes = 4;
  Index channels = 1;
};

// Label mean for a record with the given original dims.
double synth_label_mean(const SynthSpec& spec, Index orig_h, Index orig_w);

std::vector<ImageRecord> synth_dataset(const SynthSpec& spec,
                                       std::uint64_t seed);

// --- manifest I/O -----------------------------------------------------------
// write_dataset stores pixels as AFDT files under <dir>/data plus
// <dir>/manifest.csv; load_manifest reads any manifest whose paths point at
// AFDT or netpbm files (paths are relative to the manifest's directory).
std::string write_dataset(const std::vector<ImageRecord>& records,
                          const std::string& dir);
std::vector<ImageRecord> load_manifest(const std::string& manifest_path);

// FNV-1a over the little-endian value bytes plus labels; the golden-hash
// anchor for dataset reproducibility.
std::uint64_t dataset_fingerprint(const std::vector<ImageRecord>& records);

}  // namespace afdc
