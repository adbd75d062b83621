//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "upaq/bitpack.hpp"
#include "upaq/blocks.hpp"
#include "upaq/error.hpp"
#include "upaq/model.hpp"
#include "upaq/patterns.hpp"
#include "upaq/quantizer.hpp"

namespace upaq {

// How the quantization units of a packed layer map onto its weights.
//   kernel_slices: one unit per (out, in) kh x kw slice.
//   blocks_1x1:    1x1 weights regrouped into kBlockEdge^2 blocks.
enum class PackedLayout { kernel_slices, blocks_1x1 };

inline std::string_view to_string(PackedLayout layout) {
  return layout == PackedLayout::kernel_slices ? "kernel_slices" : "blocks_1x1";
}

inline PackedLayout packed_layout_from_string(std::string_view s) {
  if (s == "kernel_slices") return PackedLayout::kernel_slices;
  if (s == "blocks_1x1") return PackedLayout::blocks_1x1;
  throw FormatError("unknown packed layout '" + std::string(s) + "'");
}

// Quantized, pattern-pruned weights of one conv layer. values[u] holds the
// retained integer levels of unit u in ascending cell order.
struct PackedWeights {
  std::size_t out_ch = 0;
  std::size_t in_ch = 0;
  std::size_t kh = 0;
  std::size_t kw = 0;
  PackedLayout layout = PackedLayout::kernel_slices;
  int bits = 8;
  std::vector<float> scales;
  std::vector<std::vector<std::int32_t>> values;

  std::size_t weight_count() const { return out_ch * in_ch * kh * kw; }
  std::size_t unit_count() const {
    return layout == PackedLayout::kernel_slices ? out_ch * in_ch
                                                 : block_count(weight_count(), kBlockEdge);
  }

  bool operator==(const PackedWeights&) const = default;
};

struct CompressedLayer {
  LayerSpec spec;  // spec.weights is empty when packed is set
  std::optional<PackedWeights> packed;

  bool operator==(const CompressedLayer&) const = default;
};

struct CompressedGroup {
  std::string root_id;
  std::vector<std::string> leaf_ids;
  KernelPattern pattern;
  int bitwidth = 8;

  bool operator==(const CompressedGroup&) const = default;
};

// Profile facts the container records so it can be checked on its own.
struct ProfileStamp {
  std::string name;
  std::vector<int> quant_bits;

  bool operator==(const ProfileStamp&) const = default;
};

struct CompressedModel {
  std::string name;
  Shape3 input_shape;
  std::vector<CompressedLayer> layers;   // topological order
  std::vector<CompressedGroup> groups;   // sorted by root id
  ProfileStamp profile;

  const CompressedGroup* group_of(std::string_view layer_id) const {
    for (const auto& g : groups) {
      if (g.root_id == layer_id) return &g;
      for (const auto& leaf : g.leaf_ids) {
        if (leaf == layer_id) return &g;
      }
    }
    return nullptr;
  }

  bool operator==(const CompressedModel&) const = default;
};

// Cells of unit `u` that carry a stored weight, ascending.
inline std::vector<std::size_t> retained_cells(const PackedWeights& packed,
                                               const KernelPattern& pattern, std::size_t u) {
  std::vector<std::size_t> cells = pattern.flat_offsets();
  if (packed.layout == PackedLayout::blocks_1x1) {
    const std::size_t block = kBlockEdge * kBlockEdge;
    const std::size_t limit = packed.weight_count();
    std::erase_if(cells, [&](std::size_t c) { return u * block + c >= limit; });
  }
  return cells;
}

// Dense weights reconstructed from levels and scales.
inline Tensor4 dequantize_layer(const PackedWeights& packed, const KernelPattern& pattern) {
  Tensor4 w(packed.out_ch, packed.in_ch, packed.kh, packed.kw);
  const std::size_t unit_cells = packed.layout == PackedLayout::kernel_slices
                                     ? packed.kh * packed.kw
                                     : kBlockEdge * kBlockEdge;
  for (std::size_t u = 0; u < packed.unit_count(); ++u) {
    const std::vector<std::size_t> cells = retained_cells(packed, pattern, u);
    const std::vector<float> levels = dequantize(packed.values[u], packed.scales[u]);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      w.data[u * unit_cells + cells[j]] = levels[j];
    }
  }
  return w;
}

// Dense model with dequantized weights in place of every packed layer.
inline ModelGraph densify(const CompressedModel& model) {
  ModelGraph dense{model.name, model.input_shape, {}};
  dense.layers.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    LayerSpec spec = layer.spec;
    if (layer.packed) {
      const CompressedGroup* g = model.group_of(spec.id);
      if (!g) throw ValidationError("layer '" + spec.id + "': packed but in no group");
      spec.weights = dequantize_layer(*layer.packed, g->pattern);
    }
    dense.layers.push_back(std::move(spec));
  }
  return dense;
}

// Serialized weight payload of a dense model: every weight and bias as f32.
inline std::size_t dense_payload_bytes(const ModelGraph& model) {
  std::size_t floats = 0;
  for (const auto& layer : model.layers) {
    if (layer.weights) floats += layer.weights->size();
    if (layer.bias) floats += layer.bias->size();
  }
  return floats * sizeof(float);
}

// Pattern masks (d*d bytes per group) + per-unit f32 scales + packed levels
// (byte aligned per unit) + dense remainder (unpacked weights and biases).
inline std::size_t compressed_payload_bytes(const CompressedModel& model) {
  std::size_t bytes = 0;
  for (const auto& g : model.groups) bytes += g.pattern.d * g.pattern.d;
  for (const auto& layer : model.layers) {
    if (layer.packed) {
      bytes += layer.packed->scales.size() * sizeof(float);
      for (const auto& unit : layer.packed->values) {
        bytes += packed_bytes(unit.size(), layer.packed->bits);
      }
    } else if (layer.spec.weights) {
      bytes += layer.spec.weights->size() * sizeof(float);
    }
    if (layer.spec.bias) bytes += layer.spec.bias->size() * sizeof(float);
  }
  return bytes;
}

// Checks group membership, bitwidths, level ranges and per-unit counts, then
// validates the densified graph.
inline void validate(const CompressedModel& model) {
  std::map<std::string, int> membership;
  for (const auto& g : model.groups) {
    std::vector<std::string> members{g.root_id};
    members.insert(members.end(), g.leaf_ids.begin(), g.leaf_ids.end());
    for (const auto& id : members) {
      if (++membership[id] > 1) {
        throw ValidationError("layer '" + id + "' appears in more than one group");
      }
    }
    if (!model.profile.quant_bits.empty() &&
        std::find(model.profile.quant_bits.begin(), model.profile.quant_bits.end(),
                  g.bitwidth) == model.profile.quant_bits.end()) {
      throw ValidationError("group '" + g.root_id + "': bitwidth " +
                            std::to_string(g.bitwidth) + " not in profile quant bits");
    }
  }
  for (const auto& layer : model.layers) {
    const std::string where = "layer '" + layer.spec.id + "'";
    const bool grouped = membership.count(layer.spec.id) > 0;
    if (!layer.packed) {
      if (grouped) throw ValidationError(where + ": grouped but not packed");
      continue;
    }
    if (!grouped) throw ValidationError(where + ": packed but in no group");
    if (layer.spec.weights) throw ValidationError(where + ": both dense and packed weights");
    const PackedWeights& p = *layer.packed;
    const CompressedGroup& g = *model.group_of(layer.spec.id);
    if (p.bits != g.bitwidth) throw ValidationError(where + ": bitwidth differs from group");
    if (!is_supported_bitwidth(p.bits)) throw ValidationError(where + ": bad bitwidth");
    if (p.scales.size() != p.unit_count() || p.values.size() != p.unit_count()) {
      throw ValidationError(where + ": unit count mismatch");
    }
    const std::size_t unit_dim =
        p.layout == PackedLayout::kernel_slices ? p.kw : kBlockEdge;
    if (p.layout == PackedLayout::kernel_slices && p.kh != p.kw) {
      throw ValidationError(where + ": packed kernel slices must be square");
    }
    if (g.pattern.d != unit_dim) throw ValidationError(where + ": pattern size mismatch");
    const std::int32_t lim = max_quant_level(p.bits);
    for (std::size_t u = 0; u < p.unit_count(); ++u) {
      if (p.values[u].size() != retained_cells(p, g.pattern, u).size()) {
        throw ValidationError(where + ": unit " + std::to_string(u) +
                              " has the wrong number of stored levels");
      }
      for (std::int32_t v : p.values[u]) {
        if (v < -lim || v > lim) throw ValidationError(where + ": level out of range");
      }
      if (!(p.scales[u] > 0.0f) || !std::isfinite(p.scales[u])) {
        throw ValidationError(where + ": non-positive scale");
      }
    }
  }
  for (const auto& [id, count] : membership) {
    bool found = false;
    for (const auto& layer : model.layers) found |= layer.spec.id == id;
    if (!found) throw ValidationError("group member '" + id + "' is not a layer");
  }
  validate(densify(model));
}

}  // namespace upaq
