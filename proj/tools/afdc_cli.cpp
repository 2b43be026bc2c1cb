// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// The afdc command-line tool. Subcommands: selftest, synth, train, eval,
// sweep, cost. All randomness flows from --seed; identical inputs and seed
// reproduce byte-identical outputs. Exit codes: 0 success, 1 invariant/test
// failure, 2 usage error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "afdc/cost.hpp"
#include "afdc/dataset.hpp"
#include "afdc/image_io.hpp"
#include "afdc/metrics.hpp"
#include "afdc/selftest.hpp"
#include "afdc/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace afdc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Every run records what it was asked to do and which format versions it
// wrote; reruns with an identical manifest reproduce identical outputs.
void write_run_manifest(const std::string& out_dir,
                        const std::string& subcommand, std::uint64_t seed,
                        const json& inputs, const json& outputs) {
  fs::create_directories(out_dir);
  json manifest;
  manifest["format"] = "afdc-run/1";
  manifest["subcommand"] = subcommand;
  manifest["seed"] = seed;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  manifest["file_formats"] = {{"tensor", "AFDT/1"},
                              {"dataset_manifest", "csv/1"},
                              {"epoch_log", "csv/1"},
                              {"checkpoint", "afdc-checkpoint/1"},
                              {"net_config", "afdc-net/1"},
                              {"train_config", "afdc-train/1"}};
  std::ofstream out(fs::path(out_dir) / "run_manifest.json");
  require(out.good(), "cannot write run manifest in '", out_dir, "'");
  out << manifest.dump(2) << "\n";
}

std::string format_g(double value) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << value / 1e9 << "G";
  return os.str();
}

std::string metric_or_na(const std::optional<double>& v, int precision = 10) {
  if (!v) return "NA";
  std::ostringstream os;
  os << std::setprecision(precision) << *v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_selftest(std::uint64_t seed, bool json_mode, bool inject_fault,
                 const std::string& out_dir) {
  const auto results = run_selftest(seed, inject_fault);
  bool all_passed = true;
  for (const auto& r : results) all_passed &= r.passed;

  if (json_mode) {
    json j;
    j["suites"] = json::array();
    for (const auto& r : results)
      j["suites"].push_back(
          {{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    j["all_passed"] = all_passed;
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& r : results)
      std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " - "
                << r.detail << "\n";
    std::cout << results.size() << " suites, "
              << (all_passed ? "all passed" : "FAILURES PRESENT") << "\n";
  }
  write_run_manifest(out_dir, "selftest", seed,
                     {{"inject_fault", inject_fault}},
                     {{"all_passed", all_passed}});
  return all_passed ? kExitOk : kExitFailure;
}

int cmd_synth(const std::string& out_dir, std::uint64_t seed, int count,
              Index base_side) {
  SynthSpec spec;
  spec.count = count;
  spec.base_side = base_side;
  const auto records = synth_dataset(spec, seed);
  const std::string manifest = write_dataset(records, out_dir);
  const std::uint64_t fingerprint = dataset_fingerprint(records);
  std::cout << "wrote " << records.size() << " records to " << manifest
            << "\nfingerprint " << std::hex << fingerprint << std::dec << "\n";
  write_run_manifest(out_dir, "synth", seed,
                     {{"count", count}, {"base_side", base_side}},
                     {{"manifest", "manifest.csv"},
                      {"fingerprint", fingerprint}});
  return kExitOk;
}

int cmd_train(const std::string& train_config_path,
              const std::string& model_config_path,
              const std::string& data_manifest, const std::string& out_dir,
              std::int64_t seed_override) {
  TrainConfig config = load_train_config(train_config_path);
  if (seed_override >= 0)
    config.seed = static_cast<std::uint64_t>(seed_override);
  const NetworkConfig net = load_network_config(model_config_path);
  const auto records = load_manifest(data_manifest);

  fs::create_directories(out_dir);
  const TrainResult result = train_loop(net, records, config, &std::cerr);

  const std::string log_path = (fs::path(out_dir) / "epochs.csv").string();
  {
    std::ofstream log(log_path);
    require(log.good(), "cannot write '", log_path, "'");
    log << epoch_csv_header() << "\n";
    for (const EpochRow& row : result.log) log << epoch_csv_row(row) << "\n";
  }
  const std::string ckpt_dir = (fs::path(out_dir) / "checkpoint").string();
  result.model.save_checkpoint(ckpt_dir);

  std::cout << "best epoch " << result.best_epoch << " val_emd "
            << std::setprecision(10) << result.best_val_emd << "\n"
            << "log " << log_path << "\ncheckpoint " << ckpt_dir << "\n";
  if (result.diverged)
    std::cerr << "training halted: " << result.divergence_note << "\n";

  write_run_manifest(out_dir, "train", config.seed,
                     {{"train_config", train_config_path},
                      {"model_config", model_config_path},
                      {"data", data_manifest}},
                     {{"epochs_csv", "epochs.csv"},
                      {"checkpoint", "checkpoint"},
                      {"best_epoch", result.best_epoch},
                      {"best_val_emd", result.best_val_emd},
                      {"diverged", result.diverged}});
  return result.diverged ? kExitFailure : kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_manifest,
             const std::string& mode_arg, const std::string& out_dir,
             Index warp_size, int batch_size, std::uint64_t seed) {
  const Model<float> model = Model<float>::load_checkpoint(checkpoint);
  const auto records = load_manifest(data_manifest);
  const DilationRateSet rates = DilationRateSet::seven_kernel();

  std::vector<WeightMode> modes;
  if (mode_arg == "all")
    modes.assign(all_weight_modes().begin(), all_weight_modes().end());
  else
    modes.push_back(parse_weight_mode(mode_arg));

  fs::create_directories(out_dir);
  const std::string csv_path = (fs::path(out_dir) / "eval.csv").string();
  std::ofstream csv(csv_path);
  require(csv.good(), "cannot write '", csv_path, "'");
  csv << "mode,cls_acc,mse,emd,srcc,lcc\n";
  csv << std::setprecision(10);
  std::cout << std::left << std::setw(16) << "mode" << std::setw(10)
            << "cls_acc" << std::setw(12) << "mse" << std::setw(12) << "emd"
            << std::setw(10) << "srcc" << std::setw(10) << "lcc" << "\n";
  for (WeightMode mode : modes) {
    const MetricReport rep =
        evaluate(model, records, rates, mode, warp_size, batch_size);
    csv << to_string(mode) << "," << rep.cls_acc << "," << rep.mse << ","
        << rep.emd << "," << metric_or_na(rep.srcc) << ","
        << metric_or_na(rep.lcc) << "\n";
    std::cout << std::left << std::setw(16) << to_string(mode)
              << std::setprecision(4) << std::setw(10) << rep.cls_acc
              << std::setw(12) << rep.mse << std::setw(12) << rep.emd
              << std::setw(10) << metric_or_na(rep.srcc, 4) << std::setw(10)
              << metric_or_na(rep.lcc, 4) << "\n";
  }
  write_run_manifest(out_dir, "eval", seed,
                     {{"checkpoint", checkpoint},
                      {"data", data_manifest},
                      {"weight_mode", mode_arg},
                      {"warp_size", warp_size}},
                     {{"eval_csv", "eval.csv"}});
  return kExitOk;
}

int cmd_sweep(const std::string& checkpoint, const std::string& image_path,
              const std::string& grid_arg, const std::string& mode_arg,
              const std::string& out_dir, Index warp_size,
              std::uint64_t seed) {
  const Model<float> model = Model<float>::load_checkpoint(checkpoint);
  const WeightMode mode = parse_weight_mode(mode_arg);
  Tensor<float> source = is_netpbm(image_path)
                             ? load_netpbm(image_path)
                             : tensor_io::load_as<float>(image_path);
  require(source.channels() == model.config().input_channels,
          "image has ", source.channels(), " channels, model expects ",
          model.config().input_channels);

  // grid "a:b:step" over the signed ratio w/h ( <1 tall, >1 wide )
  double lo = 0, hi = 0, step = 0;
  {
    std::stringstream ss(grid_arg);
    std::string tok;
    std::vector<double> parts;
    while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
    require(parts.size() == 3, "--ratio-grid must be a:b:step, got '",
            grid_arg, "'");
    lo = parts[0];
    hi = parts[1];
    step = parts[2];
    require(step > 0 && hi >= lo && lo > 0, "invalid ratio grid '", grid_arg,
            "'");
  }

  const DilationRateSet rates = DilationRateSet::seven_kernel();
  const double max_rate = rates.max_rate();
  const double area = static_cast<double>(source.height() * source.width());

  fs::create_directories(out_dir);
  const std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
  std::ofstream csv(csv_path);
  require(csv.good(), "cannot write '", csv_path, "'");
  csv << "ratio,mean_score\n" << std::setprecision(10);
  const int steps = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= steps; ++i) {
    const double rho = lo + i * step;
    double clamped = rho;
    if (rho > max_rate || rho < 1.0 / max_rate) {
      clamped = std::clamp(rho, 1.0 / max_rate, max_rate);
      warn(detail::concat("sweep ratio ", rho, " outside [", 1.0 / max_rate,
                          ",", max_rate, "]; clamped to ", clamped));
    }
    const Index target_w = std::max<Index>(
        8, static_cast<Index>(std::lround(std::sqrt(area * clamped))));
    const Index target_h = std::max<Index>(
        8, static_cast<Index>(std::lround(std::sqrt(area / clamped))));
    const Tensor<float> shaped = resize_bilinear(source, target_h, target_w);
    const Tensor<float> warped = resize_bilinear(shaped, warp_size, warp_size);
    const AspectRatio ratio = compute_ratio(target_h, target_w);
    const Tensor<float> probs =
        model.forward(warped, std::span(&ratio, 1), rates, mode);
    csv << rho << "," << to_distribution(probs, 0).mean() << "\n";
  }
  write_run_manifest(out_dir, "sweep", seed,
                     {{"checkpoint", checkpoint},
                      {"image", image_path},
                      {"ratio_grid", grid_arg},
                      {"weight_mode", mode_arg},
                      {"warp_size", warp_size}},
                     {{"sweep_csv", "sweep.csv"}});
  return kExitOk;
}

int cmd_cost(const std::string& arch, const std::string& custom_config,
             int k_dilations, bool first_conv_dilated, bool count_shortcuts,
             Index input_size, bool json_mode, const std::string& out_dir,
             std::uint64_t seed) {
  NetworkConfig cfg;
  if (arch == "resnet50")
    cfg = resnet50_config(first_conv_dilated, count_shortcuts);
  else if (arch == "vgg16")
    cfg = vgg16_config();
  else if (arch == "custom")
    cfg = load_network_config(custom_config);
  else
    fail("unknown arch '", arch, "' (expected resnet50|vgg16|custom)");

  std::vector<int> ks = {1, 2, 7};
  if (std::find(ks.begin(), ks.end(), k_dilations) == ks.end())
    ks.push_back(k_dilations);
  std::sort(ks.begin(), ks.end());

  const std::int64_t params = count_params(cfg);
  const std::int64_t base =
      count_mult_adds(cfg, input_size, input_size, 1).mult_adds;

  json j;
  j["arch"] = cfg.name;
  j["params"] = params;
  j["input_size"] = input_size;
  j["rows"] = json::array();

  std::ostringstream table;
  table << std::left << std::setw(14) << "network" << std::setw(12)
        << "#Params" << std::setw(14) << "#Mult-Adds" << std::setw(10)
        << "K" << "ratio_vs_K1\n";
  std::ostringstream csv;
  csv << "arch,k_dilations,params,mult_adds,ratio_vs_k1\n";
  for (int k : ks) {
    const CostReport rep = count_mult_adds(cfg, input_size, input_size, k);
    const double ratio =
        static_cast<double>(rep.mult_adds) / static_cast<double>(base);
    table << std::left << std::setw(14)
          << (k == 1 ? cfg.name : detail::concat(k, "-dilation"))
          << std::setw(12)
          << detail::concat(std::round(params / 1e5) / 10.0, "M")
          << std::setw(14) << format_g(static_cast<double>(rep.mult_adds))
          << std::setw(10) << k << std::fixed << std::setprecision(3) << ratio
          << "\n";
    table.unsetf(std::ios_base::fixed);
    csv << cfg.name << "," << k << "," << params << "," << rep.mult_adds
        << "," << std::setprecision(6) << ratio << "\n";
    j["rows"].push_back({{"k", k},
                         {"mult_adds", rep.mult_adds},
                         {"ratio_vs_k1", ratio}});
  }

  // Grouping demo: the reference corpus puts 97.8% of images in ratio [1,2].
  const std::vector<RatioBand> hist = {{1.0, 2.0, 0.978}, {2.0, 4.0, 0.022}};
  const GroupingReport grouping =
      grouping_report(hist, default_group_boundaries(), cfg, input_size,
                      input_size);
  std::ostringstream gtext;
  gtext << "grouping (97.8% of mass in ratio [1,2]):\n";
  for (const GroupRow& row : grouping.rows)
    gtext << "  band [" << row.band_lo << "," << row.band_hi << "] mass "
          << row.mass << " K=" << row.k_rates << " "
          << format_g(static_cast<double>(row.mult_adds)) << "\n";
  gtext << "  expected grouped " << format_g(grouping.expected_grouped)
        << " vs always-" << grouping.full_k << " "
        << format_g(grouping.always_full) << " (saves "
        << std::fixed << std::setprecision(1)
        << 100.0 * (1.0 - grouping.expected_grouped / grouping.always_full)
        << "%)\n";
  j["grouping"] = {{"expected_grouped", grouping.expected_grouped},
                   {"always_full", grouping.always_full},
                   {"full_k", grouping.full_k}};

  if (json_mode)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << table.str() << gtext.str();

  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "cost.csv");
  out << csv.str();
  write_run_manifest(out_dir, "cost", seed,
                     {{"arch", arch},
                      {"k_dilations", k_dilations},
                      {"first_conv_dilated", first_conv_dilated},
                      {"input_size", input_size}},
                     {{"cost_csv", "cost.csv"}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive fractional dilated convolution toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_dir = ".";

  // selftest
  auto* selftest = app.add_subcommand("selftest", "run the invariant suites");
  bool st_json = false, st_fault = false;
  selftest->add_option("--seed", seed, "rng seed");
  selftest->add_option("--out", out_dir, "output directory");
  selftest->add_flag("--json", st_json, "machine-readable report");
  auto* fault_flag = selftest->add_flag("--inject-fault", st_fault);
  fault_flag->group("");  // hidden test hook

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  int sy_count = 512;
  Index sy_side = 40;
  synth->add_option("--seed", seed, "rng seed");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--count", sy_count, "number of records");
  synth->add_option("--base-side", sy_side, "original image area ~ side^2");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string tr_config, tr_model, tr_data;
  std::int64_t tr_seed = -1;
  train->add_option("--config", tr_config, "train config JSON")->required();
  train->add_option("--model", tr_model, "network config JSON")->required();
  train->add_option("--data", tr_data, "dataset manifest CSV")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", tr_seed, "override the config seed");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_checkpoint, ev_data, ev_mode = "all";
  Index ev_warp = 40;
  int ev_batch = 32;
  eval->add_option("--checkpoint", ev_checkpoint, "checkpoint dir")
      ->required();
  eval->add_option("--data", ev_data, "dataset manifest CSV")->required();
  eval->add_option("--weight-mode", ev_mode,
                   "vanilla|constant21|nearest|second-nearest|mean2|"
                   "fractional|all");
  eval->add_option("--warp-size", ev_warp, "square eval warp size");
  eval->add_option("--batch-size", ev_batch, "eval batch size");
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--seed", seed, "rng seed (recorded)");

  // sweep
  auto* sweep = app.add_subcommand("sweep",
                                   "score one image across aspect ratios");
  std::string sw_checkpoint, sw_image, sw_grid = "0.5:2.0:0.125",
                              sw_mode = "fractional";
  Index sw_warp = 40;
  sweep->add_option("--checkpoint", sw_checkpoint, "checkpoint dir")
      ->required();
  sweep->add_option("--image", sw_image, "source image (netpbm or AFDT)")
      ->required();
  sweep->add_option("--ratio-grid", sw_grid, "a:b:step over w/h");
  sweep->add_option("--weight-mode", sw_mode, "weight mode");
  sweep->add_option("--warp-size", sw_warp, "square warp size");
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--seed", seed, "rng seed (recorded)");

  // cost
  auto* cost = app.add_subcommand("cost", "static cost report");
  std::string co_arch = "resnet50", co_config;
  int co_k = 7;
  bool co_first = false, co_shortcuts = false, co_json = false;
  Index co_input = 224;
  cost->add_option("--arch", co_arch, "resnet50|vgg16|custom");
  cost->add_option("--config", co_config, "custom network config JSON");
  cost->add_option("--k-dilations", co_k, "dilation branch count");
  cost->add_flag("--first-conv-dilated", co_first,
                 "dilate the 7x7 stem as well (resnet50)");
  cost->add_flag("--count-shortcuts", co_shortcuts,
                 "count projection shortcuts in Mult-Adds totals");
  cost->add_option("--input-size", co_input, "input resolution");
  cost->add_flag("--json", co_json, "machine-readable report");
  cost->add_option("--out", out_dir, "output directory for cost.csv");
  cost->add_option("--seed", seed, "rng seed (recorded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (selftest->parsed())
      return cmd_selftest(seed, st_json, st_fault, out_dir);
    if (synth->parsed()) return cmd_synth(out_dir, seed, sy_count, sy_side);
    if (train->parsed())
      return cmd_train(tr_config, tr_model, tr_data, out_dir, tr_seed);
    if (eval->parsed())
      return cmd_eval(ev_checkpoint, ev_data, ev_mode, out_dir, ev_warp,
                      ev_batch, seed);
    if (sweep->parsed())
      return cmd_sweep(sw_checkpoint, sw_image, sw_grid, sw_mode, out_dir,
                       sw_warp, seed);
    if (cost->parsed())
      return cmd_cost(co_arch, co_config, co_k, co_first, co_shortcuts,
                      co_input, co_json, out_dir, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
