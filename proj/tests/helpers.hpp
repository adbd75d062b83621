//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include "upaq/upaq.hpp"

namespace upaq::testing {

inline LayerSpec conv(std::string id, std::vector<std::string> inputs, std::size_t out,
                      std::size_t in, std::size_t k, std::size_t padding = 0) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::conv2d;
  l.weights = Tensor4(out, in, k, k);
  l.padding = padding;
  l.inputs = std::move(inputs);
  return l;
}

inline LayerSpec op(std::string id, LayerKind kind, std::vector<std::string> inputs) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = kind;
  l.inputs = std::move(inputs);
  return l;
}

inline void fill_uniform(ModelGraph& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : m.layers) {
    if (l.weights) {
      for (float& v : l.weights->data) v = rng.uniform(-1.0f, 1.0f);
    }
    if (l.bias) {
      for (float& v : *l.bias) v = rng.uniform(-1.0f, 1.0f);
    }
  }
}

// Single 3x3 conv on an (in, 8, 8) input; weights from `seed`.
inline ModelGraph single_conv(std::size_t out, std::size_t in, std::uint64_t seed) {
  ModelGraph m{"single-conv", {in, 8, 8}, {}};
  m.layers.push_back(conv("conv", {}, out, in, 3, 1));
  m.layers.back().bias = std::vector<float>(out, 0.0f);
  fill_uniform(m, seed);
  return m;
}

inline Activation random_input(Shape3 shape, std::uint64_t seed) {
  Rng rng(seed);
  Activation a(shape);
  for (float& v : a.data) v = rng.uniform(-1.0f, 1.0f);
  return a;
}

}  // namespace upaq::testing
