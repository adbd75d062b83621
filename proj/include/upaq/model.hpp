//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "upaq/error.hpp"

namespace upaq {

// Dense 4-D weight tensor laid out as (out_ch, in_ch, kh, kw), row-major.
// A "kernel slice" is the kh x kw plane at a fixed (out, in) pair.
struct Tensor4 {
  std::size_t out_ch = 0;
  std::size_t in_ch = 0;
  std::size_t kh = 0;
  std::size_t kw = 0;
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(std::size_t o, std::size_t i, std::size_t h, std::size_t w)
      : out_ch(o), in_ch(i), kh(h), kw(w), data(o * i * h * w, 0.0f) {}

  std::size_t size() const { return out_ch * in_ch * kh * kw; }
  std::size_t slice_count() const { return out_ch * in_ch; }
  std::size_t slice_size() const { return kh * kw; }

  std::size_t offset(std::size_t o, std::size_t i, std::size_t r, std::size_t c) const {
    return ((o * in_ch + i) * kh + r) * kw + c;
  }
  float& at(std::size_t o, std::size_t i, std::size_t r, std::size_t c) {
    return data[offset(o, i, r, c)];
  }
  float at(std::size_t o, std::size_t i, std::size_t r, std::size_t c) const {
    return data[offset(o, i, r, c)];
  }

  std::span<float> slice(std::size_t index) {
    return std::span<float>(data).subspan(index * slice_size(), slice_size());
  }
  std::span<const float> slice(std::size_t index) const {
    return std::span<const float>(data).subspan(index * slice_size(), slice_size());
  }

  bool operator==(const Tensor4&) const = default;
};

enum class LayerKind { conv2d, relu, add, global_avg_pool, linear };

inline std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::add: return "add";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::linear: return "linear";
  }
  return "unknown";
}

inline LayerKind layer_kind_from_string(std::string_view name) {
  for (LayerKind k : {LayerKind::conv2d, LayerKind::relu, LayerKind::add,
                      LayerKind::global_avg_pool, LayerKind::linear}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown layer kind '" + std::string(name) + "'");
}

inline bool has_weights(LayerKind kind) {
  return kind == LayerKind::conv2d || kind == LayerKind::linear;
}

// One node of the graph. A layer with no inputs reads the model input.
// Linear weights use the (out, in, 1, 1) shape.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::relu;
  std::optional<Tensor4> weights;
  std::optional<std::vector<float>> bias;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::vector<std::string> inputs;

  bool operator==(const LayerSpec&) const = default;
};

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
};

// Layers are stored in a valid topological order: every input of layer k
// names a layer with index < k.
struct ModelGraph {
  std::string name;
  Shape3 input_shape;
  std::vector<LayerSpec> layers;

  const LayerSpec* find(std::string_view id) const {
    for (const auto& layer : layers) {
      if (layer.id == id) return &layer;
    }
    return nullptr;
  }
  LayerSpec* find(std::string_view id) {
    for (auto& layer : layers) {
      if (layer.id == id) return &layer;
    }
    return nullptr;
  }

  std::size_t index_of(std::string_view id) const {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      if (layers[k].id == id) return k;
    }
    throw ValidationError("unknown layer id '" + std::string(id) + "'");
  }

  bool operator==(const ModelGraph&) const = default;
};

// Every member is a value type, so the copy owns all of its storage.
inline ModelGraph deep_copy(const ModelGraph& model) {
  ModelGraph copy = model;
  return copy;
}

inline bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

namespace detail {

inline std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride,
                               std::size_t padding, const std::string& id) {
  if (in + 2 * padding < k) {
    throw ValidationError("layer '" + id + "': kernel larger than padded input");
  }
  return (in + 2 * padding - k) / stride + 1;
}

}  // namespace detail

// Output shape of every layer, indexed like model.layers. Throws
// ValidationError naming the first inconsistent layer.
inline std::vector<Shape3> infer_shapes(const ModelGraph& model) {
  std::vector<Shape3> shapes;
  shapes.reserve(model.layers.size());
  std::unordered_map<std::string, std::size_t> index;
  auto input_of = [&](const LayerSpec& layer, std::size_t k) -> const Shape3& {
    if (layer.inputs.empty()) return model.input_shape;
    return shapes[index.at(layer.inputs[k])];
  };

  for (const auto& layer : model.layers) {
    const std::string where = "layer '" + layer.id + "'";
    Shape3 out;
    switch (layer.kind) {
      case LayerKind::conv2d: {
        const Tensor4& w = *layer.weights;
        const Shape3& in = input_of(layer, 0);
        if (w.in_ch != in.channels) {
          throw ValidationError(where + ": weight in_ch " + std::to_string(w.in_ch) +
                                " does not match input channels " +
                                std::to_string(in.channels));
        }
        out.channels = w.out_ch;
        out.height = detail::conv_extent(in.height, w.kh, layer.stride, layer.padding, layer.id);
        out.width = detail::conv_extent(in.width, w.kw, layer.stride, layer.padding, layer.id);
        break;
      }
      case LayerKind::relu:
        out = input_of(layer, 0);
        break;
      case LayerKind::add: {
        const Shape3& a = input_of(layer, 0);
        const Shape3& b = input_of(layer, 1);
        if (!(a == b)) throw ValidationError(where + ": add operands have different shapes");
        out = a;
        break;
      }
      case LayerKind::global_avg_pool:
        out = {input_of(layer, 0).channels, 1, 1};
        break;
      case LayerKind::linear: {
        const Tensor4& w = *layer.weights;
        const Shape3& in = input_of(layer, 0);
        if (w.in_ch != in.size()) {
          throw ValidationError(where + ": linear expects " + std::to_string(w.in_ch) +
                                " inputs, got " + std::to_string(in.size()));
        }
        out = {w.out_ch, 1, 1};
        break;
      }
    }
    index.emplace(layer.id, shapes.size());
    shapes.push_back(out);
  }
  return shapes;
}

// Checks ids, arity, topology, weights and shapes.
inline void validate(const ModelGraph& model) {
  if (model.layers.empty()) throw ValidationError("no sink layer");
  if (model.input_shape.size() == 0) throw ValidationError("input shape has a zero extent");

  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> consumed;
  for (const auto& layer : model.layers) {
    const std::string where = "layer '" + layer.id + "'";
    if (layer.id.empty()) throw ValidationError("layer with empty id");
    if (seen.count(layer.id)) throw ValidationError(where + ": duplicate id");

    const std::size_t arity = layer.inputs.size();
    if (layer.kind == LayerKind::add) {
      if (arity != 2) throw ValidationError(where + ": add needs exactly 2 inputs");
    } else if (arity > 1) {
      throw ValidationError(where + ": expects at most 1 input");
    }
    for (const auto& in : layer.inputs) {
      if (!seen.count(in)) {
        throw ValidationError(where + ": input '" + in +
                              "' is not an earlier layer (unknown id or cycle)");
      }
      consumed.insert(in);
    }

    if (has_weights(layer.kind)) {
      if (!layer.weights) throw ValidationError(where + ": missing weights");
      const Tensor4& w = *layer.weights;
      if (w.size() == 0 || w.data.size() != w.size()) {
        throw ValidationError(where + ": weight data length does not match shape");
      }
      if (layer.kind == LayerKind::linear && (w.kh != 1 || w.kw != 1)) {
        throw ValidationError(where + ": linear weights must have kh = kw = 1");
      }
      if (!all_finite(w.data)) throw ValidationError(where + ": non-finite weight");
      if (layer.bias) {
        if (layer.bias->size() != w.out_ch) {
          throw ValidationError(where + ": bias length does not match out_ch");
        }
        if (!all_finite(*layer.bias)) throw ValidationError(where + ": non-finite bias");
      }
    } else if (layer.weights || layer.bias) {
      throw ValidationError(where + ": " + std::string(to_string(layer.kind)) +
                            " layers carry no parameters");
    }
    if (layer.stride == 0) throw ValidationError(where + ": stride must be >= 1");
    seen.insert(layer.id);
  }

  std::size_t sinks = 0;
  for (const auto& layer : model.layers) {
    if (!consumed.count(layer.id)) ++sinks;
  }
  if (sinks != 1) {
    throw ValidationError("model must have exactly one sink layer, found " +
                          std::to_string(sinks));
  }
  infer_shapes(model);
}

}  // namespace upaq
