//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "upaq/compressed.hpp"
#include "upaq/error.hpp"
#include "upaq/inference.hpp"
#include "upaq/model.hpp"

namespace upaq {

// ---- computational cost C = L_n x K_n x W_n ---------------------------------

struct ComputationalCost {
  std::size_t conv_layers = 0;        // L_n
  double kernels_per_layer = 0.0;     // K_n, mean kernel slices per conv layer
  double nonzeros_per_kernel = 0.0;   // W_n, mean nonzero weights per slice
  double product = 0.0;               // L_n * K_n * W_n
  std::size_t exact_nonzeros = 0;     // sum over layers and slices of nnz
};

inline double computational_cost(double layers, double kernels, double nonzeros) {
  return layers * kernels * nonzeros;
}

namespace detail {

inline ComputationalCost finish_cost(std::size_t layers, std::size_t kernels, std::size_t nnz) {
  ComputationalCost c;
  c.conv_layers = layers;
  c.exact_nonzeros = nnz;
  if (layers > 0) c.kernels_per_layer = static_cast<double>(kernels) / static_cast<double>(layers);
  if (kernels > 0) c.nonzeros_per_kernel = static_cast<double>(nnz) / static_cast<double>(kernels);
  c.product = computational_cost(static_cast<double>(layers), c.kernels_per_layer,
                                 c.nonzeros_per_kernel);
  return c;
}

}  // namespace detail

// Counts nonzero conv weights of a dense model.
inline ComputationalCost computational_cost(const ModelGraph& model) {
  std::size_t layers = 0, kernels = 0, nnz = 0;
  for (const auto& layer : model.layers) {
    if (layer.kind != LayerKind::conv2d) continue;
    ++layers;
    kernels += layer.weights->slice_count();
    nnz += static_cast<std::size_t>(
        std::count_if(layer.weights->data.begin(), layer.weights->data.end(),
                      [](float v) { return v != 0.0f; }));
  }
  return detail::finish_cost(layers, kernels, nnz);
}

// Counts stored (pattern-retained) weights of packed layers and nonzero
// weights of the remaining conv layers.
inline ComputationalCost computational_cost(const CompressedModel& model) {
  std::size_t layers = 0, kernels = 0, nnz = 0;
  for (const auto& layer : model.layers) {
    if (layer.spec.kind != LayerKind::conv2d) continue;
    ++layers;
    if (layer.packed) {
      kernels += layer.packed->out_ch * layer.packed->in_ch;
      for (const auto& unit : layer.packed->values) nnz += unit.size();
    } else {
      const Tensor4& w = *layer.spec.weights;
      kernels += w.slice_count();
      nnz += static_cast<std::size_t>(std::count_if(
          w.data.begin(), w.data.end(), [](float v) { return v != 0.0f; }));
    }
  }
  return detail::finish_cost(layers, kernels, nnz);
}

// ---- latency / energy -------------------------------------------------------

// Per conv layer figures the cost models consume.
struct ConvWorkload {
  std::string id;
  std::size_t nonzeros = 0;       // stored weights
  std::size_t out_positions = 0;  // out_h * out_w
  int bits = 32;
};

using Workload = std::vector<ConvWorkload>;

// A dense layer executes every stored weight, zero or not.
inline Workload workload_of(const ModelGraph& model) {
  const std::vector<Shape3> shapes = infer_shapes(model);
  Workload wl;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const LayerSpec& layer = model.layers[k];
    if (layer.kind != LayerKind::conv2d) continue;
    ConvWorkload entry;
    entry.id = layer.id;
    entry.nonzeros = layer.weights->size();
    entry.out_positions = shapes[k].height * shapes[k].width;
    wl.push_back(std::move(entry));
  }
  return wl;
}

inline Workload workload_of(const CompressedModel& model) {
  const ModelGraph dense = densify(model);
  Workload wl = workload_of(dense);
  for (auto& entry : wl) {
    for (const auto& layer : model.layers) {
      if (layer.spec.id != entry.id || !layer.packed) continue;
      entry.nonzeros = 0;
      for (const auto& unit : layer.packed->values) entry.nonzeros += unit.size();
      entry.bits = layer.packed->bits;
    }
  }
  return wl;
}

struct CostEstimate {
  double latency = 0.0;
  std::optional<double> energy;  // empty when the model cannot provide it
};

class CostModel {
 public:
  virtual ~CostModel() = default;

  // `weights` is the candidate model with pruned and dequantized weights; it
  // is only consulted when needs_weights() is true.
  virtual CostEstimate estimate(const Workload& workload, const ModelGraph* weights) const = 0;
  virtual bool needs_weights() const { return false; }
  virtual std::string_view name() const = 0;
};

// Deterministic analytical model, arbitrary units:
//   latency = sum over conv layers of nonzeros * out_positions * bits / 32
//   energy  = latency * kEnergyPerMac + moved_bytes * kEnergyPerByte
// with moved_bytes = sum of nonzeros * bits / 8.
class AnalyticCost final : public CostModel {
 public:
  static constexpr double kEnergyPerMac = 1.0;
  static constexpr double kEnergyPerByte = 0.1;

  CostEstimate estimate(const Workload& workload, const ModelGraph*) const override {
    double latency = 0.0;
    double moved = 0.0;
    for (const auto& e : workload) {
      latency += static_cast<double>(e.nonzeros) * static_cast<double>(e.out_positions) *
                 static_cast<double>(e.bits) / 32.0;
      moved += static_cast<double>(e.nonzeros) * static_cast<double>(e.bits) / 8.0;
    }
    return {latency, latency * kEnergyPerMac + moved * kEnergyPerByte};
  }

  std::string_view name() const override { return "analytic"; }
};

// Wall-clock latency (microseconds, best of `repeats`) of the zero-skipping
// forward pass over a fixed probe set. Energy is not available.
class MeasuredCost final : public CostModel {
 public:
  MeasuredCost(std::vector<Activation> probes, int repeats = 3)
      : probes_(std::move(probes)), repeats_(std::max(1, repeats)) {
    if (probes_.empty()) throw ParameterError("measured cost needs at least one probe input");
  }

  CostEstimate estimate(const Workload&, const ModelGraph* weights) const override {
    if (!weights) throw ParameterError("measured cost needs a model to run");
    double best = 0.0;
    for (int rep = 0; rep < repeats_; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& x : probes_) {
        volatile float sink = forward_sparse(*weights, x).data.front();
        (void)sink;
      }
      const double us =
          std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
      best = rep == 0 ? us : std::min(best, us);
    }
    return {std::max(best, 1e-3), std::nullopt};
  }
  bool needs_weights() const override { return true; }
  std::string_view name() const override { return "measured"; }

 private:
  std::vector<Activation> probes_;
  int repeats_;
};

// dense / compressed payload bytes.
inline double compression_ratio(std::size_t dense_bytes, std::size_t compressed_bytes) {
  if (compressed_bytes == 0) throw ParameterError("compressed payload is empty");
  if (dense_bytes == 0) throw ParameterError("dense payload is empty");
  return static_cast<double>(dense_bytes) / static_cast<double>(compressed_bytes);
}

}  // namespace upaq
