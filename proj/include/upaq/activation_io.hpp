//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Activation batches on disk: a raw little-endian f32 blob holding the
// tensors back to back, plus "<blob>.json" = {"count": N, "shape": [c, h, w]}.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "upaq/error.hpp"
#include "upaq/inference.hpp"
#include "upaq/serialize.hpp"

namespace upaq {

inline std::filesystem::path sidecar_path(const std::filesystem::path& blob) {
  return std::filesystem::path(blob.string() + ".json");
}

inline void write_activations(const std::filesystem::path& path,
                              const std::vector<Activation>& batch) {
  if (batch.empty()) throw ParameterError("cannot write an empty activation batch");
  const Shape3 shape = batch.front().shape;
  std::string blob;
  blob.reserve(batch.size() * shape.size() * 4);
  for (const auto& a : batch) {
    if (!(a.shape == shape)) throw ValidationError("activation batch has mixed shapes");
    for (float f : a.data) {
      const auto u = std::bit_cast<std::uint32_t>(f);
      for (int k = 0; k < 4; ++k) blob.push_back(static_cast<char>((u >> (8 * k)) & 0xffu));
    }
  }
  nlohmann::json side{{"count", batch.size()},
                      {"shape", {shape.channels, shape.height, shape.width}}};
  write_file(path, blob);
  write_file(sidecar_path(path), side.dump());
}

inline std::vector<Activation> read_activations(const std::filesystem::path& path) {
  Shape3 shape;
  std::size_t count = 0;
  try {
    const auto side = nlohmann::json::parse(read_file(sidecar_path(path)));
    count = side.at("count").get<std::size_t>();
    const auto dims = side.at("shape").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw FormatError("activation shape must have 3 dims");
    shape = {dims[0], dims[1], dims[2]};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed activation sidecar: " + std::string(e.what()));
  }
  const std::string blob = read_file(path);
  if (blob.size() != count * shape.size() * 4) {
    throw FormatError("activation blob is " + std::to_string(blob.size()) +
                      " bytes, sidecar implies " + std::to_string(count * shape.size() * 4));
  }
  std::vector<Activation> batch;
  batch.reserve(count);
  std::size_t at = 0;
  for (std::size_t n = 0; n < count; ++n) {
    Activation a(shape);
    for (float& f : a.data) {
      f = std::bit_cast<float>(detail::get_u32(blob, at));
      at += 4;
    }
    batch.push_back(std::move(a));
  }
  return batch;
}

}  // namespace upaq
