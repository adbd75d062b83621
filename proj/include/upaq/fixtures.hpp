//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "upaq/error.hpp"
#include "upaq/inference.hpp"
#include "upaq/model.hpp"
#include "upaq/rng.hpp"

namespace upaq {

inline constexpr std::size_t kFixtureInputs = 64;
inline constexpr float kInputNoise = 0.25f;

inline const std::vector<std::string>& fixture_archs() {
  static const std::vector<std::string> names{"toy-cnn", "toy-residual", "toy-1x1"};
  return names;
}

struct Fixture {
  ModelGraph model;
  std::vector<Activation> inputs;
};

namespace detail {

class FixtureBuilder {
 public:
  FixtureBuilder(std::string name, Shape3 input, std::uint64_t seed)
      : rng_(stream_seed(seed, "weights:" + name)) {
    model_.name = std::move(name);
    model_.input_shape = input;
  }

  FixtureBuilder& conv(std::string id, std::string input, std::size_t out, std::size_t in,
                       std::size_t k, std::size_t padding) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = LayerKind::conv2d;
    l.weights = random_tensor(out, in, k, k);
    l.bias = random_vector(out);
    l.padding = padding;
    if (!input.empty()) l.inputs = {std::move(input)};
    model_.layers.push_back(std::move(l));
    return *this;
  }

  FixtureBuilder& linear(std::string id, std::string input, std::size_t out, std::size_t in) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = LayerKind::linear;
    l.weights = random_tensor(out, in, 1, 1);
    l.bias = random_vector(out);
    l.inputs = {std::move(input)};
    model_.layers.push_back(std::move(l));
    return *this;
  }

  FixtureBuilder& op(std::string id, LayerKind kind, std::vector<std::string> inputs) {
    LayerSpec l;
    l.id = std::move(id);
    l.kind = kind;
    l.inputs = std::move(inputs);
    model_.layers.push_back(std::move(l));
    return *this;
  }

  ModelGraph build() { return std::move(model_); }

 private:
  Tensor4 random_tensor(std::size_t o, std::size_t i, std::size_t h, std::size_t w) {
    Tensor4 t(o, i, h, w);
    for (float& v : t.data) v = rng_.uniform(-1.0f, 1.0f);
    return t;
  }
  std::vector<float> random_vector(std::size_t n) {
    std::vector<float> v(n);
    for (float& x : v) x = rng_.uniform(-1.0f, 1.0f);
    return v;
  }

  ModelGraph model_;
  Rng rng_;
};

}  // namespace detail

// Seeded toy models with uniform(-1, 1) parameters plus kFixtureInputs inputs.
// Each input is offset + horizontal/vertical ramp + small noise, with the
// three coefficients drawn per input, so pooled features differ between
// inputs.
//   toy-cnn:      conv3x3 x3 chain, relu, global average pool, linear
//   toy-residual: conv3x3 A, relu, fork into conv3x3 B and C, add, pool, linear
//   toy-1x1:      conv3x3 (9 out), relu, conv1x1 (9 -> 2), pool, linear
inline Fixture gen_fixture(std::string_view arch, std::uint64_t seed) {
  const Shape3 input{1, 16, 16};
  using detail::FixtureBuilder;
  Fixture f;
  if (arch == "toy-cnn") {
    f.model = FixtureBuilder("toy-cnn", input, seed)
                  .conv("conv1", "", 8, 1, 3, 1)
                  .conv("conv2", "conv1", 16, 8, 3, 1)
                  .conv("conv3", "conv2", 16, 16, 3, 1)
                  .op("relu3", LayerKind::relu, {"conv3"})
                  .op("gap", LayerKind::global_avg_pool, {"relu3"})
                  .linear("fc", "gap", 10, 16)
                  .build();
  } else if (arch == "toy-residual") {
    f.model = FixtureBuilder("toy-residual", input, seed)
                  .conv("conv_a", "", 8, 1, 3, 1)
                  .op("relu_a", LayerKind::relu, {"conv_a"})
                  .conv("conv_b", "relu_a", 8, 8, 3, 1)
                  .conv("conv_c", "relu_a", 8, 8, 3, 1)
                  .op("add", LayerKind::add, {"conv_b", "conv_c"})
                  .op("gap", LayerKind::global_avg_pool, {"add"})
                  .linear("fc", "gap", 10, 8)
                  .build();
  } else if (arch == "toy-1x1") {
    f.model = FixtureBuilder("toy-1x1", input, seed)
                  .conv("conv1", "", 9, 1, 3, 1)
                  .op("relu1", LayerKind::relu, {"conv1"})
                  .conv("proj", "relu1", 2, 9, 1, 0)
                  .op("gap", LayerKind::global_avg_pool, {"proj"})
                  .linear("fc", "gap", 4, 2)
                  .build();
  } else {
    throw ParameterError("unknown fixture arch '" + std::string(arch) + "'");
  }
  validate(f.model);

  Rng rng(stream_seed(seed, "inputs:" + std::string(arch)));
  for (std::size_t k = 0; k < kFixtureInputs; ++k) {
    const float offset = rng.uniform(-1.0f, 1.0f);
    const float gx = rng.uniform(-1.0f, 1.0f);
    const float gy = rng.uniform(-1.0f, 1.0f);
    Activation a(input);
    const float cy = static_cast<float>(input.height - 1) / 2.0f;
    const float cx = static_cast<float>(input.width - 1) / 2.0f;
    for (std::size_t r = 0; r < input.height; ++r) {
      for (std::size_t c = 0; c < input.width; ++c) {
        const float ramp = gx * (static_cast<float>(c) - cx) / cx + gy * (static_cast<float>(r) - cy) / cy;
        a.at(0, r, c) = offset + ramp + kInputNoise * rng.uniform(-1.0f, 1.0f);
      }
    }
    f.inputs.push_back(std::move(a));
  }
  return f;
}

}  // namespace upaq
