// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Training and evaluation loops. EMD (r=2) loss on 10-bin score
// distributions, heavy-ball SGD, step learning-rate schedule, a rate-set
// curriculum (3-kernel grouping early, 3+7 grouping late), per-epoch metric
// logging and best-checkpoint selection by validation EMD (r=1).
// Everything is a deterministic function of the seed.

#pragma once

#include <algorithm>
#include <iosfwd>
#include <string>
#include <vector>

#include "afdc/dataset.hpp"
#include "afdc/metrics.hpp"
#include "afdc/net.hpp"
#include "afdc/optim.hpp"

namespace afdc {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double lr_initial = 0.01;
  LrDrop lr_drop{/*epoch=*/7, /*factor=*/0.1};
  double momentum = 0.9;
  double emd_r_train = 2.0;
  double emd_r_eval = 1.0;
  double val_fraction = 0.2;
  Index warp_min = 32;
  Index warp_max = 48;
  int curriculum_switch_epoch = 14;  // 3-kernel grouping before, 3+7 after
  std::uint64_t seed = 1;

  void validate() const {
    require(epochs >= 1 && batch_size >= 1, "train config: epochs/batch_size");
    require(lr_initial > 0, "train config: lr must be > 0");
    require(momentum >= 0 && momentum < 1,
            "train config: momentum must be in [0,1)");
    require(emd_r_train >= 1 && emd_r_eval >= 1,
            "train config: emd r must be >= 1");
    require(val_fraction > 0 && val_fraction < 1,
            "train config: val_fraction in (0,1)");
    require(warp_min >= 8 && warp_min <= warp_max,
            "train config: warp range");
  }
};

TrainConfig parse_train_config_json(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& config);

struct EpochRow {
  int epoch = 0;
  std::string split;  // "train" or "val"
  MetricReport metrics;
  double lr = 0;
  std::string rate_set;
};

std::string epoch_csv_header();
std::string epoch_csv_row(const EpochRow& row);

struct TrainResult {
  Model<float> model;  // best checkpoint by validation EMD
  int best_epoch = -1;
  double best_val_emd = 0;
  std::vector<EpochRow> log;
  bool diverged = false;
  std::string divergence_note;
};

// Deterministic shuffle via the coordinator stream.
template <typename T>
void seeded_shuffle(std::vector<T>& items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i)
    std::swap(items[i - 1],
              items[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
}

// Evaluates the model over records: warps everything to a fixed square size,
// batches within ratio groups, and computes the metric suite.
MetricReport evaluate(const Model<float>& model,
                      const std::vector<ImageRecord>& records,
                      const DilationRateSet& rates, WeightMode mode,
                      Index warp_size, int batch_size,
                      std::vector<ScoreDistribution>* out_preds = nullptr);

TrainResult train_loop(const NetworkConfig& net_config,
                       const std::vector<ImageRecord>& records,
                       const TrainConfig& config,
                       std::ostream* progress = nullptr);

}  // namespace afdc
