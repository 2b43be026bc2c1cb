// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include "afdc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "afdc/image_io.hpp"

namespace fs = std::filesystem;

namespace afdc {

ImageRecord warp_to_square(const ImageRecord& record, Index size) {
  require(record.pixels.height() >= 1 && record.pixels.width() >= 1,
          "degenerate source dims");
  ImageRecord out = record;
  out.pixels = resize_bilinear(record.pixels, size, size);
  return out;
}

ImageRecord random_square_warp(const ImageRecord& record, Index min_size,
                               Index max_size, RngStream& rng) {
  return warp_to_square(record, draw_warp_size(rng, min_size, max_size));
}

std::vector<double> default_group_boundaries() { return {1.0, 2.0, 4.0}; }

std::vector<BatchGroup> group_by_ratio(const std::vector<ImageRecord>& records,
                                       const std::vector<double>& boundaries,
                                       int max_rate) {
  require(boundaries.size() >= 2 && boundaries.front() == 1.0,
          "boundaries must start at 1.0 and contain at least one band");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    require(boundaries[i] > boundaries[i - 1],
            "boundaries must be strictly increasing");

  const std::size_t bands = boundaries.size() - 1;
  std::vector<BatchGroup> groups(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    groups[b].band_lo = boundaries[b];
    groups[b].band_hi = boundaries[b + 1];
    groups[b].active_rates = DilationRateSet::covering(
        boundaries[b], boundaries[b + 1], max_rate);
  }
  const double r_max = boundaries.back();
  for (const ImageRecord& rec : records) {
    double r = rec.ratio.r;
    if (r > r_max) {
      warn(detail::concat("record '", rec.source, "' has ratio ", r,
                          " beyond ", r_max, "; assigning to widest group"));
      r = r_max;
    }
    std::size_t b = bands - 1;
    for (std::size_t i = 0; i < bands; ++i)
      if (r <= boundaries[i + 1]) {
        b = i;
        break;
      }
    groups[b].records.push_back(rec);
  }
  std::erase_if(groups, [](const BatchGroup& g) { return g.records.empty(); });
  return groups;
}

double synth_label_mean(const SynthSpec& spec, Index orig_h, Index orig_w) {
  const double lambda = std::log2(static_cast<double>(orig_w) /
                                  static_cast<double>(orig_h));
  return 5.5 + spec.score_amp * lambda / std::log2(spec.r_max);
}

namespace {

struct CosineMode {
  double fx, fy, phase, amp;
};

// Smoothstep ellipse edge in normalized coordinates; radius 0.3, edge 0.08.
double ellipse_value(double xi, double eta) {
  const double dx = xi - 0.5, dy = eta - 0.5;
  const double rho = std::sqrt(dx * dx + dy * dy) / 0.3;
  const double t = std::clamp((1.0 - rho) / 0.08 + 0.5, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

std::vector<ImageRecord> synth_dataset(const SynthSpec& spec,
                                       std::uint64_t seed) {
  require(spec.count >= 1, "synth spec: count must be >= 1");
  require(spec.r_min >= 1.0 && spec.r_max > spec.r_min,
          "synth spec: need 1 <= r_min < r_max");
  require(spec.base_side >= 8, "synth spec: base_side too small");
  require(spec.channels >= 1, "synth spec: channels must be >= 1");

  std::vector<ImageRecord> records;
  records.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    RngStream rng = RngStream::derive(seed, rng_purpose::kSynthRecord,
                                      static_cast<std::uint64_t>(i));
    const double r = rng.uniform(spec.r_min, spec.r_max);
    const bool tall = rng.uniform() < 0.5;
    const double side = static_cast<double>(spec.base_side);
    Index h = static_cast<Index>(std::lround(side * std::sqrt(r)));
    Index w = static_cast<Index>(std::lround(side / std::sqrt(r)));
    if (!tall) std::swap(h, w);

    std::vector<CosineMode> modes(spec.noise_modes);
    for (auto& m : modes) {
      // at least one nonzero integer frequency per mode
      do {
        m.fx = static_cast<double>(rng.uniform_int(0, 3));
        m.fy = static_cast<double>(rng.uniform_int(0, 3));
      } while (m.fx == 0.0 && m.fy == 0.0);
      m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      m.amp = spec.noise_amp * rng.uniform(0.5, 1.0);
    }

    ImageRecord rec;
    rec.pixels = Tensor<float>(Dims{1, spec.channels, h, w});
    for (Index c = 0; c < spec.channels; ++c) {
      const double channel_shift = 0.15 * static_cast<double>(c);
      for (Index y = 0; y < h; ++y) {
        const double eta = (static_cast<double>(y) + 0.5) / static_cast<double>(h);
        for (Index x = 0; x < w; ++x) {
          const double xi = (static_cast<double>(x) + 0.5) / static_cast<double>(w);
          double v = 0.55 + 0.25 * ellipse_value(xi, eta);
          for (const auto& m : modes)
            v += m.amp * std::cos(2.0 * std::numbers::pi *
                                      (m.fx * xi + m.fy * eta) +
                                  m.phase + channel_shift);
          rec.pixels.at(0, c, y, x) =
              static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
    rec.ratio = compute_ratio(h, w);
    rec.label = ScoreDistribution::discretized_gaussian(
        synth_label_mean(spec, h, w), spec.sigma);
    rec.source = detail::concat("synth:", i);
    records.push_back(std::move(rec));
  }
  return records;
}

std::string write_dataset(const std::vector<ImageRecord>& records,
                          const std::string& dir) {
  fs::create_directories(fs::path(dir) / "data");
  const std::string manifest_path = (fs::path(dir) / "manifest.csv").string();
  std::ofstream manifest(manifest_path);
  require(manifest.good(), "cannot open '", manifest_path, "' for writing");
  manifest << "path,orig_h,orig_w";
  for (int i = 1; i <= kScoreBins; ++i) manifest << ",p" << i;
  manifest << "\n";
  manifest.precision(17);
  for (std::size_t i = 0; i < records.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "data/rec%05zu.afdt", i);
    tensor_io::save(records[i].pixels, (fs::path(dir) / name).string());
    manifest << name << "," << records[i].ratio.orig_h << ","
             << records[i].ratio.orig_w;
    for (double p : records[i].label.p) manifest << "," << p;
    manifest << "\n";
  }
  require(manifest.good(), "write failed for '", manifest_path, "'");
  return manifest_path;
}

std::vector<ImageRecord> load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  require(in.good(), "cannot open '", manifest_path, "'");
  const fs::path base = fs::path(manifest_path).parent_path();

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "'", manifest_path,
          "' is empty");
  std::vector<ImageRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    require(fields.size() == 3 + kScoreBins, "'", manifest_path, "' line ",
            line_no, ": expected ", 3 + kScoreBins, " fields, got ",
            fields.size());
    ImageRecord rec;
    rec.source = (base / fields[0]).string();
    const Index orig_h = std::stoll(fields[1]);
    const Index orig_w = std::stoll(fields[2]);
    rec.ratio = compute_ratio(orig_h, orig_w);
    double sum = 0;
    for (int i = 0; i < kScoreBins; ++i) {
      rec.label.p[i] = std::stod(fields[3 + i]);
      sum += rec.label.p[i];
    }
    require(std::abs(sum - 1.0) < 1e-3, "'", manifest_path, "' line ",
            line_no, ": label does not sum to 1");
    rec.pixels = is_netpbm(rec.source) ? load_netpbm(rec.source)
                                       : tensor_io::load_as<float>(rec.source);
    require(rec.pixels.height() == orig_h && rec.pixels.width() == orig_w,
            "'", manifest_path, "' line ", line_no, ": stated dims ", orig_h,
            "x", orig_w, " do not match file dims ", rec.pixels.height(), "x",
            rec.pixels.width());
    records.push_back(std::move(rec));
  }
  return records;
}

std::uint64_t dataset_fingerprint(const std::vector<ImageRecord>& records) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix_bytes = [&hash](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ull;
    }
  };
  for (const ImageRecord& rec : records) {
    const Dims& d = rec.pixels.dims();
    mix_bytes(&d.c, sizeof(d.c));
    mix_bytes(&d.h, sizeof(d.h));
    mix_bytes(&d.w, sizeof(d.w));
    mix_bytes(rec.pixels.data(), sizeof(float) * rec.pixels.size());
    mix_bytes(rec.label.p.data(), sizeof(double) * rec.label.p.size());
  }
  return hash;
}

}  // namespace afdc
