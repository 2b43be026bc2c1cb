// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include "afdc/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace afdc {

using nlohmann::json;

TrainConfig parse_train_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail("train config is not valid JSON: ", e.what());
  }
  require(j.value("format", "") == "afdc-train/1",
          "train config must declare \"format\": \"afdc-train/1\"");
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr_initial = j.value("lr_initial", c.lr_initial);
  if (j.contains("lr_drop")) {
    c.lr_drop.epoch = j["lr_drop"].value("epoch", c.lr_drop.epoch);
    c.lr_drop.factor = j["lr_drop"].value("factor", c.lr_drop.factor);
  }
  c.momentum = j.value("momentum", c.momentum);
  c.emd_r_train = j.value("emd_r_train", c.emd_r_train);
  c.emd_r_eval = j.value("emd_r_eval", c.emd_r_eval);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  if (j.contains("warp")) {
    c.warp_min = j["warp"].value("min", c.warp_min);
    c.warp_max = j["warp"].value("max", c.warp_max);
  }
  c.curriculum_switch_epoch =
      j.value("curriculum_switch_epoch", c.curriculum_switch_epoch);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open train config '", path, "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_train_config_json(text);
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["format"] = "afdc-train/1";
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr_initial"] = c.lr_initial;
  j["lr_drop"] = {{"epoch", c.lr_drop.epoch}, {"factor", c.lr_drop.factor}};
  j["momentum"] = c.momentum;
  j["emd_r_train"] = c.emd_r_train;
  j["emd_r_eval"] = c.emd_r_eval;
  j["val_fraction"] = c.val_fraction;
  j["warp"] = {{"min", c.warp_min}, {"max", c.warp_max}};
  j["curriculum_switch_epoch"] = c.curriculum_switch_epoch;
  j["seed"] = c.seed;
  return j.dump(2);
}

std::string epoch_csv_header() {
  return "epoch,split,cls_acc,mse,emd,srcc,lcc,lr,active_rate_set";
}

namespace {

std::string format_metric(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_metric(*v) : "NA";  // undefined correlations are flagged
}

}  // namespace

std::string epoch_csv_row(const EpochRow& row) {
  std::ostringstream os;
  os << row.epoch << "," << row.split << ","
     << format_metric(row.metrics.cls_acc) << ","
     << format_metric(row.metrics.mse) << "," << format_metric(row.metrics.emd)
     << "," << format_optional(row.metrics.srcc) << ","
     << format_optional(row.metrics.lcc) << "," << format_metric(row.lr) << ","
     << row.rate_set;
  return os.str();
}

namespace {

struct Batch {
  Tensor<float> pixels;
  std::vector<AspectRatio> ratios;
  std::vector<ScoreDistribution> labels;
  std::vector<std::size_t> indices;  // positions in the originating list
};

Batch materialize_batch(const std::vector<ImageRecord>& records,
                        const std::vector<std::size_t>& member_idx,
                        Index warp_size) {
  Batch batch;
  const ImageRecord& first = records[member_idx.front()];
  const Index channels = first.pixels.channels();
  batch.pixels = Tensor<float>(
      Dims{static_cast<Index>(member_idx.size()), channels, warp_size,
           warp_size});
  for (std::size_t i = 0; i < member_idx.size(); ++i) {
    const ImageRecord& rec = records[member_idx[i]];
    const Tensor<float> warped = resize_bilinear(rec.pixels, warp_size,
                                                 warp_size);
    batch.pixels.array().segment(
        static_cast<Index>(i) * channels * warp_size * warp_size,
        channels * warp_size * warp_size) = warped.array();
    batch.ratios.push_back(rec.ratio);
    batch.labels.push_back(rec.label);
    batch.indices.push_back(member_idx[i]);
  }
  return batch;
}

// Groups shuffled indices by ratio band and chunks them into batches.
// Returns (member indices, rate set label handled by caller).
std::vector<std::pair<std::vector<std::size_t>, DilationRateSet>>
plan_batches(const std::vector<ImageRecord>& records,
             const std::vector<std::size_t>& order,
             const std::vector<double>& boundaries, int batch_size,
             int max_rate) {
  const std::size_t bands = boundaries.size() - 1;
  std::vector<std::vector<std::size_t>> buckets(bands);
  for (std::size_t idx : order) {
    double r = std::min(records[idx].ratio.r, boundaries.back());
    std::size_t b = bands - 1;
    for (std::size_t i = 0; i < bands; ++i)
      if (r <= boundaries[i + 1]) {
        b = i;
        break;
      }
    buckets[b].push_back(idx);
  }
  std::vector<std::pair<std::vector<std::size_t>, DilationRateSet>> batches;
  for (std::size_t b = 0; b < bands; ++b) {
    const DilationRateSet rates =
        DilationRateSet::covering(boundaries[b], boundaries[b + 1], max_rate);
    for (std::size_t start = 0; start < buckets[b].size();
         start += batch_size) {
      const std::size_t stop =
          std::min(buckets[b].size(), start + batch_size);
      batches.emplace_back(
          std::vector<std::size_t>(buckets[b].begin() + start,
                                   buckets[b].begin() + stop),
          rates);
    }
  }
  return batches;
}

double batch_loss_and_grad(Model<float>& model, const Batch& batch,
                           const DilationRateSet& rates, double emd_r,
                           typename Model<float>::Cache& cache) {
  const Tensor<float> probs = model.forward(
      batch.pixels, batch.ratios, rates, WeightMode::fractional, &cache);
  const Index n = probs.batch();
  Tensor<float> grad_logits(probs.dims());
  double loss = 0;
  for (Index i = 0; i < n; ++i) {
    std::array<float, kScoreBins> target;
    for (int k = 0; k < kScoreBins; ++k)
      target[k] = static_cast<float>(batch.labels[i].p[k]);
    std::span<const float> prob_row{probs.data() + i * kScoreBins,
                                    kScoreBins};
    loss += emd_value<float>(prob_row, target, emd_r);
    std::array<float, kScoreBins> g;
    softmax_emd_grad_wrt_logits<float>(prob_row, target, emd_r, g);
    for (int k = 0; k < kScoreBins; ++k)
      grad_logits.at(i, k, 0, 0) = g[k] / static_cast<float>(n);
  }
  model.backward(cache, grad_logits);
  return loss / static_cast<double>(n);
}

}  // namespace

MetricReport evaluate(const Model<float>& model,
                      const std::vector<ImageRecord>& records,
                      const DilationRateSet& rates, WeightMode mode,
                      Index warp_size, int batch_size,
                      std::vector<ScoreDistribution>* out_preds) {
  require(!records.empty(), "evaluate: empty record list");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<ScoreDistribution> preds(records.size());
  std::vector<ScoreDistribution> targets(records.size());
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    const std::vector<std::size_t> members(order.begin() + start,
                                           order.begin() + stop);
    const Batch batch = materialize_batch(records, members, warp_size);
    const Tensor<float> probs =
        model.forward(batch.pixels, batch.ratios, rates, mode);
    for (std::size_t i = 0; i < members.size(); ++i) {
      preds[members[i]] = to_distribution(probs, static_cast<Index>(i));
      targets[members[i]] = batch.labels[i];
    }
  }
  if (out_preds) *out_preds = preds;
  return compute_metrics(preds, targets);
}

TrainResult train_loop(const NetworkConfig& net_config,
                       const std::vector<ImageRecord>& records,
                       const TrainConfig& config, std::ostream* progress) {
  config.validate();
  require(!records.empty(), "train_loop: empty dataset");

  // Deterministic split.
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream split_rng = RngStream::derive(config.seed, rng_purpose::kSplit);
  seeded_shuffle(order, split_rng);
  const std::size_t val_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.val_fraction *
                                  static_cast<double>(records.size())));
  require(val_count < records.size(), "train_loop: dataset too small to split");
  std::vector<ImageRecord> train_set, val_set;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < val_count ? val_set : train_set).push_back(records[order[i]]);

  TrainResult result;
  result.model = Model<float>::build(net_config, config.seed);
  Model<float>& model = result.model;
  model.zero_grads();

  std::vector<typename Tensor<float>::Array> velocity;
  for (auto& p : model.params())
    velocity.push_back(Tensor<float>::Array::Zero(p.value.size()));

  // Snapshot of the best parameters by validation EMD.
  std::vector<Tensor<float>> best_params;
  auto snapshot = [&]() {
    best_params.clear();
    for (const auto& p : model.params()) best_params.push_back(p.value);
  };
  auto restore = [&]() {
    for (std::size_t i = 0; i < best_params.size(); ++i)
      model.params()[i].value = best_params[i];
  };
  snapshot();

  const DilationRateSet seven = DilationRateSet::seven_kernel();
  const Index val_warp = (config.warp_min + config.warp_max) / 2;
  RngStream shuffle_rng = RngStream::derive(config.seed, rng_purpose::kShuffle);
  RngStream warp_rng = RngStream::derive(config.seed, rng_purpose::kWarpSize);

  double best_emd = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, config.lr_initial, config.lr_drop);
    const bool full_phase = epoch >= config.curriculum_switch_epoch;
    // Curriculum: early epochs run the 3-kernel band only (everything
    // clamps into [1,2]); later epochs use the 3+7 grouped bands.
    const std::vector<double> boundaries =
        full_phase ? default_group_boundaries() : std::vector<double>{1.0, 2.0};
    const std::string rate_label = full_phase ? "7k" : "3k";
    const int max_rate = full_phase ? 4 : 2;

    std::vector<std::size_t> train_order(train_set.size());
    for (std::size_t i = 0; i < train_order.size(); ++i) train_order[i] = i;
    seeded_shuffle(train_order, shuffle_rng);

    WarnHandler saved_warn = warn_handler();
    if (!full_phase) warn_handler() = {};  // ratio clamping is expected here
    const auto batches = plan_batches(train_set, train_order, boundaries,
                                      config.batch_size, max_rate);
    warn_handler() = saved_warn;

    std::vector<ScoreDistribution> train_preds(train_set.size());
    std::vector<ScoreDistribution> train_targets(train_set.size());
    double epoch_loss = 0;
    bool halted = false;
    typename Model<float>::Cache cache;
    for (const auto& [members, rates] : batches) {
      const Index warp =
          draw_warp_size(warp_rng, config.warp_min, config.warp_max);
      const Batch batch = materialize_batch(train_set, members, warp);
      model.zero_grads();
      WarnHandler saved = warn_handler();
      if (!full_phase) warn_handler() = {};
      const double loss =
          batch_loss_and_grad(model, batch, rates, config.emd_r_train, cache);
      warn_handler() = saved;
      if (!std::isfinite(loss)) {
        result.diverged = true;
        result.divergence_note = detail::concat(
            "loss became non-finite at epoch ", epoch, "; halting");
        halted = true;
        break;
      }
      epoch_loss += loss * static_cast<double>(members.size());
      try {
        auto& params = model.params();
        for (std::size_t p = 0; p < params.size(); ++p)
          sgd_momentum_step<float>(params[p].value.array(),
                                   params[p].value.grad(), velocity[p], lr,
                                   config.momentum, params[p].name);
      } catch (const Error& e) {
        result.diverged = true;
        result.divergence_note = e.what();
        halted = true;
        break;
      }
      for (std::size_t i = 0; i < members.size(); ++i) {
        train_preds[members[i]] =
            to_distribution(cache.probs, static_cast<Index>(i));
        train_targets[members[i]] = batch.labels[i];
      }
    }
    if (halted) {
      restore();  // last good checkpoint
      break;
    }

    EpochRow train_row;
    train_row.epoch = epoch;
    train_row.split = "train";
    train_row.metrics = compute_metrics(train_preds, train_targets);
    train_row.lr = lr;
    train_row.rate_set = rate_label;
    result.log.push_back(train_row);

    WarnHandler saved = warn_handler();
    if (!full_phase) warn_handler() = {};
    const DilationRateSet eval_rates =
        full_phase ? seven : DilationRateSet::three_kernel();
    EpochRow val_row;
    val_row.epoch = epoch;
    val_row.split = "val";
    val_row.metrics = evaluate(model, val_set, eval_rates,
                               WeightMode::fractional, val_warp,
                               config.batch_size);
    warn_handler() = saved;
    val_row.lr = lr;
    val_row.rate_set = rate_label;
    result.log.push_back(val_row);

    if (val_row.metrics.emd < best_emd) {
      best_emd = val_row.metrics.emd;
      result.best_epoch = epoch;
      snapshot();
    }
    if (progress)
      (*progress) << "epoch " << epoch << " loss " << epoch_loss
                  << " val_emd " << val_row.metrics.emd << "\n";
  }
  result.best_val_emd = best_emd;
  restore();
  return result;
}

}  // namespace afdc
