//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "upaq/compressed.hpp"
#include "upaq/error.hpp"
#include "upaq/model.hpp"

namespace upaq {

// Feature map in (channel, row, col) row-major order.
struct Activation {
  Shape3 shape;
  std::vector<float> data;

  Activation() = default;
  explicit Activation(Shape3 s) : shape(s), data(s.size(), 0.0f) {}
  Activation(Shape3 s, std::vector<float> values) : shape(s), data(std::move(values)) {
    if (data.size() != shape.size()) throw ValidationError("activation size does not match shape");
  }

  float& at(std::size_t c, std::size_t r, std::size_t col) {
    return data[(c * shape.height + r) * shape.width + col];
  }
  float at(std::size_t c, std::size_t r, std::size_t col) const {
    return data[(c * shape.height + r) * shape.width + col];
  }
};

namespace detail {

// Nonzero taps of one output channel, in (in, row, col) order.
struct SparseTap {
  std::size_t in;
  std::size_t r;
  std::size_t c;
  float w;
};

// Direct convolution. Per output pixel: acc = 0, then for in, r, c add w*x
// (out-of-bounds taps skipped), then add the bias. With `skip_zeros` zero
// weights are not visited; the visiting order of the rest is unchanged.
inline Activation conv2d(const LayerSpec& layer, const Activation& in, const Shape3& out_shape,
                         bool skip_zeros) {
  const Tensor4& w = *layer.weights;
  Activation out(out_shape);
  const auto stride = static_cast<std::ptrdiff_t>(layer.stride);
  const auto pad = static_cast<std::ptrdiff_t>(layer.padding);
  const auto in_h = static_cast<std::ptrdiff_t>(in.shape.height);
  const auto in_w = static_cast<std::ptrdiff_t>(in.shape.width);

  std::vector<std::vector<SparseTap>> taps(w.out_ch);
  for (std::size_t o = 0; o < w.out_ch; ++o) {
    for (std::size_t i = 0; i < w.in_ch; ++i) {
      for (std::size_t r = 0; r < w.kh; ++r) {
        for (std::size_t c = 0; c < w.kw; ++c) {
          const float v = w.at(o, i, r, c);
          if (skip_zeros && v == 0.0f) continue;
          taps[o].push_back({i, r, c, v});
        }
      }
    }
  }

  for (std::size_t o = 0; o < w.out_ch; ++o) {
    const float b = layer.bias ? (*layer.bias)[o] : 0.0f;
    for (std::size_t y = 0; y < out_shape.height; ++y) {
      for (std::size_t x = 0; x < out_shape.width; ++x) {
        float acc = 0.0f;
        for (const SparseTap& t : taps[o]) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y) * stride - pad +
                                    static_cast<std::ptrdiff_t>(t.r);
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x) * stride - pad +
                                    static_cast<std::ptrdiff_t>(t.c);
          if (iy < 0 || ix < 0 || iy >= in_h || ix >= in_w) continue;
          const float prod = t.w * in.at(t.in, static_cast<std::size_t>(iy),
                                         static_cast<std::size_t>(ix));
          acc = acc + prod;
        }
        out.at(o, y, x) = acc + b;
      }
    }
  }
  return out;
}

inline Activation linear(const LayerSpec& layer, const Activation& in, bool skip_zeros) {
  const Tensor4& w = *layer.weights;
  Activation out(Shape3{w.out_ch, 1, 1});
  for (std::size_t o = 0; o < w.out_ch; ++o) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < w.in_ch; ++i) {
      const float v = w.data[o * w.in_ch + i];
      if (skip_zeros && v == 0.0f) continue;
      const float prod = v * in.data[i];
      acc = acc + prod;
    }
    out.data[o] = acc + (layer.bias ? (*layer.bias)[o] : 0.0f);
  }
  return out;
}

inline Activation global_avg_pool(const Activation& in) {
  Activation out(Shape3{in.shape.channels, 1, 1});
  const std::size_t plane = in.shape.height * in.shape.width;
  for (std::size_t c = 0; c < in.shape.channels; ++c) {
    float acc = 0.0f;
    for (std::size_t k = 0; k < plane; ++k) acc = acc + in.data[c * plane + k];
    out.data[c] = acc / static_cast<float>(plane);
  }
  return out;
}

inline Activation run_graph(const ModelGraph& model, const Activation& input, bool skip_zeros) {
  if (!(input.shape == model.input_shape)) {
    throw ValidationError("input shape (" + std::to_string(input.shape.channels) + "," +
                          std::to_string(input.shape.height) + "," +
                          std::to_string(input.shape.width) + ") does not match model input");
  }
  if (input.data.size() != input.shape.size()) throw ValidationError("input data size mismatch");
  const std::vector<Shape3> shapes = infer_shapes(model);
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Activation> values(model.layers.size());

  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const LayerSpec& layer = model.layers[k];
    auto arg = [&](std::size_t j) -> const Activation& {
      if (layer.inputs.empty()) return input;
      return values[index.at(layer.inputs[j])];
    };
    switch (layer.kind) {
      case LayerKind::conv2d:
        values[k] = conv2d(layer, arg(0), shapes[k], skip_zeros);
        break;
      case LayerKind::relu: {
        values[k] = arg(0);
        for (float& v : values[k].data) v = v > 0.0f ? v : 0.0f;
        break;
      }
      case LayerKind::add: {
        const Activation& a = arg(0);
        const Activation& b = arg(1);
        values[k] = Activation(a.shape);
        for (std::size_t j = 0; j < a.data.size(); ++j) values[k].data[j] = a.data[j] + b.data[j];
        break;
      }
      case LayerKind::global_avg_pool:
        values[k] = global_avg_pool(arg(0));
        break;
      case LayerKind::linear:
        values[k] = linear(layer, arg(0), skip_zeros);
        break;
    }
    index.emplace(layer.id, k);
  }
  return values.back();
}

}  // namespace detail

// Dense forward pass; the graph's single sink is the last layer.
inline Activation forward(const ModelGraph& model, const Activation& input) {
  return detail::run_graph(model, input, false);
}

// Same loop order as forward() but zero weights are never visited.
inline Activation forward_sparse(const ModelGraph& model, const Activation& input) {
  return detail::run_graph(model, input, true);
}

// Reference path: materialize dequantized weights, then run densely.
inline Activation forward_compressed(const CompressedModel& model, const Activation& input,
                                     bool sparse = false) {
  const ModelGraph dense = densify(model);
  return sparse ? forward_sparse(dense, input) : forward(dense, input);
}

}  // namespace upaq
