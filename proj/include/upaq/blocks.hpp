//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "upaq/error.hpp"
#include "upaq/model.hpp"

namespace upaq {

// Block edge used to regroup 1x1 weights.
inline constexpr std::size_t kBlockEdge = 3;

// A k x k block of regrouped 1x1 weights, row-major.
struct WeightBlock {
  std::size_t k = 0;
  std::vector<float> values;

  bool operator==(const WeightBlock&) const = default;
};

inline std::size_t block_count(std::size_t weight_count, std::size_t k) {
  return (weight_count + k * k - 1) / (k * k);
}

// Flattens 1x1 weights in (out, in) order and cuts the sequence into k*k
// chunks. The trailing partial chunk keeps its real values in the leading
// row-major cells and is zero padded.
inline std::vector<WeightBlock> blocks_from_1x1(std::span<const float> flat, std::size_t k) {
  if (k < 2) throw ParameterError("block edge must be >= 2");
  const std::size_t cells = k * k;
  std::vector<WeightBlock> blocks(block_count(flat.size(), k));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    blocks[b].k = k;
    blocks[b].values.assign(cells, 0.0f);
    for (std::size_t j = 0; j < cells && b * cells + j < flat.size(); ++j) {
      blocks[b].values[j] = flat[b * cells + j];
    }
  }
  return blocks;
}

inline std::vector<WeightBlock> blocks_from_1x1(const Tensor4& weights, std::size_t k) {
  if (weights.kh != 1 || weights.kw != 1) {
    throw ParameterError("blocks_from_1x1 needs a 1x1 weight tensor");
  }
  return blocks_from_1x1(std::span<const float>(weights.data), k);
}

// Inverse of blocks_from_1x1: writes back the first `count` cells and drops
// the padding.
inline std::vector<float> flatten_blocks(std::span<const WeightBlock> blocks,
                                         std::size_t count) {
  if (blocks.empty()) {
    if (count == 0) return {};
    throw ParameterError("no blocks to flatten");
  }
  const std::size_t k = blocks.front().k;
  const std::size_t cells = k * k;
  if (blocks.size() != block_count(count, k)) {
    throw ParameterError("block count " + std::to_string(blocks.size()) +
                         " does not cover " + std::to_string(count) + " weights");
  }
  std::vector<float> flat(count);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].k != k || blocks[b].values.size() != cells) {
      throw ParameterError("block " + std::to_string(b) + " has the wrong shape");
    }
    for (std::size_t j = 0; j < cells && b * cells + j < count; ++j) {
      flat[b * cells + j] = blocks[b].values[j];
    }
  }
  return flat;
}

inline Tensor4 flatten_blocks_to_1x1(std::span<const WeightBlock> blocks, std::size_t out_ch,
                                     std::size_t in_ch) {
  Tensor4 t(out_ch, in_ch, 1, 1);
  t.data = flatten_blocks(blocks, out_ch * in_ch);
  return t;
}

}  // namespace upaq
