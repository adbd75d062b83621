//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Fidelity of a compressed model against its base, standing in for task
// accuracy: relative output error, argmax agreement and cosine similarity of
// the sink vectors, next to the byte, latency and energy accounting.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "upaq/compressed.hpp"
#include "upaq/compressor.hpp"
#include "upaq/cost.hpp"
#include "upaq/error.hpp"
#include "upaq/inference.hpp"
#include "upaq/serialize.hpp"

namespace upaq {

struct FidelityReport {
  std::size_t inputs = 0;
  double mean_rel_err = 0.0;
  double top1_agreement = 0.0;
  double cosine_sim = 0.0;
  double compression_ratio = 0.0;
  std::size_t dense_bytes = 0;
  std::size_t compressed_bytes = 0;
  double latency_units_base = 0.0;
  double latency_units_compressed = 0.0;
  std::optional<double> energy_units_base;
  std::optional<double> energy_units_compressed;
  double mean_sqnr_db = 0.0;
  double es_total = 0.0;
};

struct FidelityRun {
  FidelityReport report;
  std::vector<Activation> base_outputs;
  std::vector<Activation> compressed_outputs;
};

inline std::size_t argmax(const std::vector<float>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

// ||c - b|| / ||b||, with a tiny floor on the denominator.
inline double relative_error(const std::vector<float>& base, const std::vector<float>& comp) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double d = static_cast<double>(comp[k]) - static_cast<double>(base[k]);
    num += d * d;
    den += static_cast<double>(base[k]) * static_cast<double>(base[k]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

inline double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    na += static_cast<double>(a[k]) * static_cast<double>(a[k]);
    nb += static_cast<double>(b[k]) * static_cast<double>(b[k]);
  }
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 1.0 : 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Mean SQNR (dB) of every packed unit against the same unit of the base
// model after masking, i.e. the quantization error the search scored.
inline double model_sqnr_db(const ModelGraph& base, const CompressedModel& compressed) {
  double acc = 0.0;
  std::size_t units = 0;
  for (const auto& layer : compressed.layers) {
    if (!layer.packed) continue;
    const LayerSpec* ref = base.find(layer.spec.id);
    if (!ref || !ref->weights) {
      throw ValidationError("layer '" + layer.spec.id + "' missing from base model");
    }
    const KernelPattern& pattern = compressed.group_of(layer.spec.id)->pattern;
    const PackedWeights& p = *layer.packed;
    const Tensor4 dq = dequantize_layer(p, pattern);
    const bool blocks = p.layout == PackedLayout::blocks_1x1;
    std::vector<WeightBlock> base_units, dq_units;
    if (blocks) {
      base_units = blocks_from_1x1(*ref->weights, kBlockEdge);
      dq_units = blocks_from_1x1(dq, kBlockEdge);
    }
    for (std::size_t u = 0; u < p.unit_count(); ++u) {
      std::span<const float> x = blocks ? std::span<const float>(base_units[u].values)
                                        : ref->weights->slice(u);
      std::span<const float> x_hat = blocks ? std::span<const float>(dq_units[u].values)
                                            : dq.slice(u);
      const std::vector<float> masked = apply_pattern(x, pattern);
      acc += sqnr_to_db(sqnr_linear(masked, x_hat));
      ++units;
    }
  }
  return units ? acc / static_cast<double>(units) : kSqnrDbCap;
}

inline FidelityRun run_fidelity(const ModelGraph& base, const CompressedModel& compressed,
                                const std::vector<Activation>& inputs, const CostModel& cost,
                                const ScoreWeights& weights = {}) {
  if (inputs.empty()) throw ValidationError("evaluation needs at least one input");
  if (!(base.input_shape == compressed.input_shape)) {
    throw ValidationError("base and compressed models take different input shapes");
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Shape3& s = inputs[k].shape;
    if (!(s == base.input_shape)) {
      throw ValidationError("input " + std::to_string(k) + ": shape (" +
                            std::to_string(s.channels) + "," + std::to_string(s.height) + "," +
                            std::to_string(s.width) + ") does not match model input");
    }
  }

  const ModelGraph dense = densify(compressed);
  FidelityRun run;
  FidelityReport& r = run.report;
  r.inputs = inputs.size();
  std::size_t agree = 0;
  double rel = 0.0, cos = 0.0;
  for (const auto& x : inputs) {
    Activation yb = forward(base, x);
    Activation yc = forward(dense, x);
    if (yb.data.size() != yc.data.size()) {
      throw ValidationError("base and compressed sinks differ in size");
    }
    rel += relative_error(yb.data, yc.data);
    cos += cosine_similarity(yb.data, yc.data);
    agree += argmax(yb.data) == argmax(yc.data) ? 1 : 0;
    run.base_outputs.push_back(std::move(yb));
    run.compressed_outputs.push_back(std::move(yc));
  }
  const auto n = static_cast<double>(inputs.size());
  r.mean_rel_err = rel / n;
  r.cosine_sim = cos / n;
  r.top1_agreement = static_cast<double>(agree) / n;

  r.dense_bytes = dense_payload_bytes(base);
  r.compressed_bytes = compressed_payload_bytes(compressed);
  const std::size_t serialized = blob_size(to_bytes(compressed));
  if (serialized != r.compressed_bytes) {
    throw ValidationError("payload accounting disagrees with the serialized blob (" +
                          std::to_string(r.compressed_bytes) + " vs " +
                          std::to_string(serialized) + " bytes)");
  }
  r.compression_ratio = compression_ratio(r.dense_bytes, r.compressed_bytes);

  const CostEstimate cb = cost.estimate(workload_of(base), &base);
  const CostEstimate cc = cost.estimate(workload_of(compressed), &dense);
  r.latency_units_base = cb.latency;
  r.latency_units_compressed = cc.latency;
  r.energy_units_base = cb.energy;
  r.energy_units_compressed = cc.energy;
  r.mean_sqnr_db = model_sqnr_db(base, compressed);
  r.es_total = calculate_es(r.mean_sqnr_db, cc, cb, weights).total;
  return run;
}

inline FidelityReport evaluate_fidelity(const ModelGraph& base, const CompressedModel& compressed,
                                        const std::vector<Activation>& inputs,
                                        const CostModel& cost = AnalyticCost{},
                                        const ScoreWeights& weights = {}) {
  return run_fidelity(base, compressed, inputs, cost, weights).report;
}

inline nlohmann::json to_json(const FidelityReport& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {
      {"metric_mapping",
       "mean_rel_err/top1_agreement/cosine_sim are output-fidelity proxies for task accuracy"},
      {"inputs", r.inputs},
      {"mean_rel_err", r.mean_rel_err},
      {"top1_agreement", r.top1_agreement},
      {"cosine_sim", r.cosine_sim},
      {"compression_ratio", r.compression_ratio},
      {"dense_bytes", r.dense_bytes},
      {"compressed_bytes", r.compressed_bytes},
      {"latency_units_base", r.latency_units_base},
      {"latency_units_compressed", r.latency_units_compressed},
      {"energy_units_base", opt(r.energy_units_base)},
      {"energy_units_compressed", opt(r.energy_units_compressed)},
      {"mean_sqnr_db", r.mean_sqnr_db},
      {"es_total", r.es_total},
  };
}

}  // namespace upaq
