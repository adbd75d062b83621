//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <json.hpp>

#include "upaq/compressor.hpp"
#include "upaq/cost.hpp"
#include "upaq/grouping.hpp"
#include "upaq/patterns.hpp"

namespace upaq {

inline nlohmann::json to_json(const KernelPattern& p) {
  nlohmann::json cells = nlohmann::json::array();
  for (const Cell& c : p.positions) cells.push_back({c.row, c.col});
  return {{"kind", std::string(to_string(p.kind))}, {"d", p.d}, {"n", p.n}, {"positions", cells}};
}

inline nlohmann::json to_json(const EfficiencyScore& s) {
  return {{"sqnr_term", s.sqnr_term},
          {"latency_term", s.latency_term},
          {"energy_term", s.energy_term},
          {"total", s.total}};
}

inline nlohmann::json to_json(const ComputationalCost& c) {
  return {{"conv_layers", c.conv_layers},
          {"kernels_per_layer", c.kernels_per_layer},
          {"nonzeros_per_kernel", c.nonzeros_per_kernel},
          {"product", c.product},
          {"exact_nonzeros", c.exact_nonzeros}};
}

inline nlohmann::json to_json(const CostEstimate& c) {
  return {{"latency", c.latency},
          {"energy", c.energy ? nlohmann::json(*c.energy) : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const RootGroup& g) {
  return {{"root", g.root_id}, {"leaves", g.leaf_ids}};
}

inline nlohmann::json to_json(const CompressionResult& r, const CompressionProfile& profile,
                              std::string_view cost_name) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& d : r.decisions) {
    groups.push_back({{"root", d.group.root_id},
                      {"leaves", d.group.leaf_ids},
                      {"pattern", to_json(d.pattern)},
                      {"bits", d.bits},
                      {"mean_sqnr_db", d.mean_sqnr_db},
                      {"es", to_json(d.score)},
                      {"candidates_evaluated", d.candidates_evaluated}});
  }
  return {{"profile",
           {{"name", profile.name},
            {"quant_bits", profile.quant_bits},
            {"candidates", profile.candidates},
            {"exhaustive", profile.exhaustive},
            {"seed", profile.seed},
            {"weights",
             {{"alpha", profile.weights.alpha},
              {"beta", profile.weights.beta},
              {"gamma", profile.weights.gamma}}}}},
          {"cost_model", std::string(cost_name)},
          {"groups", groups},
          {"dense_bytes", r.dense_bytes},
          {"compressed_bytes", r.compressed_bytes},
          {"compression_ratio", r.ratio},
          {"computational_cost", {{"dense", to_json(r.dense_ops)}, {"compressed", to_json(r.compressed_ops)}}},
          {"baseline_cost", to_json(r.baseline_cost)},
          {"compressed_cost", to_json(r.compressed_cost)}};
}

}  // namespace upaq
