// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "afdc/net.hpp"
#include "json.hpp"

namespace afdc {

using nlohmann::json;

void validate_network_config(NetworkConfig& config) {
  require(!config.blocks.empty(), "config '", config.name,
          "': empty block list");
  require(config.input_channels >= 1, "config '", config.name,
          "': input_channels must be >= 1");
  require(config.score_bins == kScoreBins, "config '", config.name,
          "': score_bins must be ", kScoreBins);

  Index channels = config.input_channels;
  for (std::size_t i = 0; i < config.blocks.size(); ++i) {
    LayerDesc& d = config.blocks[i];
    if (d.name.empty())
      d.name = detail::concat("block", i);
    switch (d.kind) {
      case LayerKind::conv:
        if (d.in_channels == 0) d.in_channels = channels;
        require(d.in_channels == channels || d.shortcut,
                "block ", i, " (", d.name, "): in_channels ", d.in_channels,
                " does not chain from previous output ", channels);
        require(d.out_channels >= 1, "block ", i, " (", d.name,
                "): out_channels must be >= 1");
        require(d.kernel >= 1 && d.stride >= 1, "block ", i, " (", d.name,
                "): kernel and stride must be >= 1");
        if (!d.shortcut) channels = d.out_channels;
        break;
      case LayerKind::relu:
        break;
      case LayerKind::avg_pool:
      case LayerKind::max_pool:
        require(d.pool_k >= 1 && d.pool_stride >= 1, "block ", i, " (",
                d.name, "): pool window/stride must be >= 1");
        break;
      case LayerKind::global_pool:
        break;
      case LayerKind::dense:
        require(d.dense_out >= 1, "block ", i, " (", d.name,
                "): dense_out must be >= 1");
        channels = d.dense_out;
        break;
    }
  }

  if (config.head) {
    const SppHead& head = *config.head;
    require(!head.scales.empty(), "config '", config.name,
            "': head needs at least one scale");
    for (Index g : head.scales)
      require(g >= 1, "config '", config.name, "': head scale must be >= 1");
    require(head.feature_dim >= 1, "config '", config.name,
            "': feature_dim must be >= 1");
    require(head.feature_dim % static_cast<Index>(head.scales.size()) == 0,
            "config '", config.name, "': feature_dim ", head.feature_dim,
            " not divisible by scale count ", head.scales.size());
  }
}

Index final_feature_channels(const NetworkConfig& config) {
  Index channels = config.input_channels;
  for (const LayerDesc& d : config.blocks) {
    if (d.shortcut) continue;
    if (d.kind == LayerKind::conv) channels = d.out_channels;
    if (d.kind == LayerKind::dense) channels = d.dense_out;
  }
  return channels;
}

namespace {

LayerDesc parse_block(const json& j, std::size_t index) {
  require(j.is_object() && j.contains("type"), "block ", index,
          ": expected an object with a 'type' field");
  const std::string type = j["type"];
  LayerDesc d;
  d.name = j.value("name", "");
  if (type == "conv") {
    d.kind = LayerKind::conv;
    require(j.contains("out"), "block ", index, ": conv needs 'out'");
    d.out_channels = j["out"];
    d.in_channels = j.value("in", 0);
    d.kernel = j.value("k", 3);
    d.stride = j.value("stride", 1);
    d.afdc = j.value("afdc", false);
  } else if (type == "relu") {
    d.kind = LayerKind::relu;
  } else if (type == "avg_pool") {
    d.kind = LayerKind::avg_pool;
    d.pool_k = j.value("k", 2);
    d.pool_stride = j.value("stride", d.pool_k);
    d.pool_pad = j.value("pad", 0);
  } else if (type == "max_pool") {
    d.kind = LayerKind::max_pool;
    d.pool_k = j.value("k", 2);
    d.pool_stride = j.value("stride", d.pool_k);
    d.pool_pad = j.value("pad", 0);
  } else if (type == "global_pool") {
    d.kind = LayerKind::global_pool;
  } else if (type == "dense") {
    d.kind = LayerKind::dense;
    require(j.contains("out"), "block ", index, ": dense needs 'out'");
    d.dense_out = j["out"];
  } else {
    fail("block ", index, ": unknown type '", type, "'");
  }
  return d;
}

}  // namespace

NetworkConfig parse_network_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail("network config is not valid JSON: ", e.what());
  }
  require(j.value("format", "") == "afdc-net/1",
          "network config must declare \"format\": \"afdc-net/1\"");
  NetworkConfig cfg;
  cfg.name = j.value("name", "net");
  cfg.input_channels = j.value("input_channels", 1);
  require(j.contains("blocks") && j["blocks"].is_array(),
          "network config needs a 'blocks' array");
  std::size_t i = 0;
  for (const auto& b : j["blocks"]) cfg.blocks.push_back(parse_block(b, i++));
  if (j.contains("head")) {
    SppHead head;
    const auto& h = j["head"];
    if (h.contains("scales"))
      for (const auto& s : h["scales"]) head.scales.push_back(s.get<Index>());
    else
      head.scales = {1};
    head.feature_dim = h.value("feature_dim", 96);
    cfg.head = head;
  }
  cfg.score_bins = j.value("score_bins", kScoreBins);
  validate_network_config(cfg);
  return cfg;
}

NetworkConfig load_network_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open network config '", path, "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_network_config_json(text);
}

std::string network_config_to_json(const NetworkConfig& config) {
  json j;
  j["format"] = "afdc-net/1";
  j["name"] = config.name;
  j["input_channels"] = config.input_channels;
  json blocks = json::array();
  for (const LayerDesc& d : config.blocks) {
    json b;
    b["name"] = d.name;
    switch (d.kind) {
      case LayerKind::conv:
        b["type"] = "conv";
        b["in"] = d.in_channels;
        b["out"] = d.out_channels;
        b["k"] = d.kernel;
        b["stride"] = d.stride;
        b["afdc"] = d.afdc;
        break;
      case LayerKind::relu:
        b["type"] = "relu";
        break;
      case LayerKind::avg_pool:
        b["type"] = "avg_pool";
        b["k"] = d.pool_k;
        b["stride"] = d.pool_stride;
        b["pad"] = d.pool_pad;
        break;
      case LayerKind::max_pool:
        b["type"] = "max_pool";
        b["k"] = d.pool_k;
        b["stride"] = d.pool_stride;
        b["pad"] = d.pool_pad;
        break;
      case LayerKind::global_pool:
        b["type"] = "global_pool";
        break;
      case LayerKind::dense:
        b["type"] = "dense";
        b["out"] = d.dense_out;
        break;
    }
    blocks.push_back(b);
  }
  j["blocks"] = blocks;
  if (config.head) {
    j["head"] = {{"scales", config.head->scales},
                 {"feature_dim", config.head->feature_dim}};
  }
  j["score_bins"] = config.score_bins;
  return j.dump(2);
}

}  // namespace afdc
