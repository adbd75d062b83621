//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "upaq/error.hpp"

namespace upaq {

// Bytes needed for `count` lanes of `bits` each, padded to a byte boundary.
inline std::size_t packed_bytes(std::size_t count, int bits) {
  return (count * static_cast<std::size_t>(bits) + 7) / 8;
}

// Appends two's-complement lanes of `bits` bits. Lane j occupies stream bits
// [j*bits, (j+1)*bits); stream bit t is bit (t % 8) of byte t / 8, so 16-bit
// lanes come out little-endian and 4-bit lanes fill the low nibble first.
inline void pack_lanes(std::span<const std::int32_t> values, int bits,
                       std::vector<std::uint8_t>& out) {
  const std::size_t base = out.size();
  out.resize(base + packed_bytes(values.size(), bits), 0);
  const std::uint32_t lane_mask = (bits == 32) ? 0xffffffffu : ((1u << bits) - 1u);
  std::size_t bit = 0;
  for (std::int32_t v : values) {
    const std::uint32_t u = static_cast<std::uint32_t>(v) & lane_mask;
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((u >> b) & 1u) out[base + bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
}

inline std::vector<std::int32_t> unpack_lanes(std::span<const std::uint8_t> bytes,
                                              std::size_t count, int bits) {
  if (bytes.size() < packed_bytes(count, bits)) {
    throw FormatError("packed lane buffer too short");
  }
  std::vector<std::int32_t> values(count);
  std::size_t bit = 0;
  for (std::size_t j = 0; j < count; ++j) {
    std::uint32_t u = 0;
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((bytes[bit / 8] >> (bit % 8)) & 1u) u |= (1u << b);
    }
    // sign-extend
    if (bits < 32 && (u >> (bits - 1)) & 1u) u |= ~((1u << bits) - 1u);
    values[j] = static_cast<std::int32_t>(u);
  }
  return values;
}

}  // namespace upaq
