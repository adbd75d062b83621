//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "upaq/error.hpp"
#include "upaq/rng.hpp"

namespace upaq {

enum class PatternKind { main_diagonal, anti_diagonal, row, column };

inline constexpr std::array<PatternKind, 4> kPatternKinds = {
    PatternKind::main_diagonal, PatternKind::anti_diagonal, PatternKind::row,
    PatternKind::column};

inline std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::main_diagonal: return "main_diagonal";
    case PatternKind::anti_diagonal: return "anti_diagonal";
    case PatternKind::row: return "row";
    case PatternKind::column: return "column";
  }
  return "unknown";
}

inline PatternKind pattern_kind_from_string(std::string_view name) {
  for (PatternKind k : kPatternKinds) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown pattern kind '" + std::string(name) + "'");
}

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;

  auto operator<=>(const Cell&) const = default;
};

// Retained positions of a d x d kernel mask.
struct KernelPattern {
  PatternKind kind = PatternKind::main_diagonal;
  std::size_t d = 0;
  std::size_t n = 0;
  std::vector<Cell> positions;

  bool operator==(const KernelPattern&) const = default;

  // Row-major flags, 1 at retained positions.
  std::vector<unsigned char> mask() const {
    std::vector<unsigned char> m(d * d, 0);
    for (const Cell& p : positions) m[p.row * d + p.col] = 1;
    return m;
  }

  // Retained flat offsets (r * d + c) in ascending order. Packed weights are
  // stored in this order.
  std::vector<std::size_t> flat_offsets() const {
    std::vector<std::size_t> offsets;
    offsets.reserve(positions.size());
    for (const Cell& p : positions) offsets.push_back(p.row * d + p.col);
    std::sort(offsets.begin(), offsets.end());
    return offsets;
  }

  bool same_cells(const KernelPattern& other) const {
    return d == other.d && flat_offsets() == other.flat_offsets();
  }
};

inline void check_pattern_args(std::size_t n, std::size_t d) {
  if (d == 0) throw ParameterError("kernel dimension must be >= 1");
  if (n == 0 || n > d) {
    throw ParameterError("non-zero count " + std::to_string(n) + " must lie in [1, " +
                         std::to_string(d) + "]");
  }
}

// Builds the pattern of a given kind. `line` selects the row (or column) and
// `start` the first retained column (or row); both are ignored for diagonals.
inline KernelPattern make_pattern(PatternKind kind, std::size_t n, std::size_t d,
                                  std::size_t line = 0, std::size_t start = 0) {
  check_pattern_args(n, d);
  KernelPattern p{kind, d, n, {}};
  const std::size_t count = std::min(n, d);
  p.positions.reserve(count);
  switch (kind) {
    case PatternKind::main_diagonal:
      for (std::size_t i = 0; i < count; ++i) p.positions.push_back({i, i});
      break;
    case PatternKind::anti_diagonal:
      for (std::size_t i = 0; i < count; ++i) p.positions.push_back({i, d - 1 - i});
      break;
    case PatternKind::row:
      if (line >= d || start > d - n) throw ParameterError("row pattern out of bounds");
      for (std::size_t i = 0; i < n; ++i) p.positions.push_back({line, start + i});
      break;
    case PatternKind::column:
      if (line >= d || start > d - n) throw ParameterError("column pattern out of bounds");
      for (std::size_t i = 0; i < n; ++i) p.positions.push_back({start + i, line});
      break;
  }
  return p;
}

// Random semi-structured pattern. Draw order: kind, then line in [0, d), then
// start offset in [0, d - n]. Diagonals are anchored at index 0.
inline KernelPattern generate_pattern(std::size_t n, std::size_t d, Rng& rng) {
  check_pattern_args(n, d);
  const PatternKind kind = kPatternKinds[rng.below(kPatternKinds.size())];
  if (kind == PatternKind::row || kind == PatternKind::column) {
    const std::size_t line = rng.below(d);
    const std::size_t start = rng.below(d - n + 1);
    return make_pattern(kind, n, d, line, start);
  }
  return make_pattern(kind, n, d);
}

// Every pattern generate_pattern can return, without duplicate cell sets.
// Order: main diagonal, anti diagonal, rows (line, then start ascending),
// columns (same); the first occurrence of a cell set wins.
inline std::vector<KernelPattern> enumerate_all_patterns(std::size_t n, std::size_t d) {
  check_pattern_args(n, d);
  std::vector<KernelPattern> all;
  auto push_unique = [&all](KernelPattern p) {
    for (const auto& q : all) {
      if (q.same_cells(p)) return;
    }
    all.push_back(std::move(p));
  };
  push_unique(make_pattern(PatternKind::main_diagonal, n, d));
  push_unique(make_pattern(PatternKind::anti_diagonal, n, d));
  for (PatternKind kind : {PatternKind::row, PatternKind::column}) {
    for (std::size_t line = 0; line < d; ++line) {
      for (std::size_t start = 0; start + n <= d; ++start) {
        push_unique(make_pattern(kind, n, d, line, start));
      }
    }
  }
  return all;
}

// Keeps slice values at the pattern cells and zeroes the rest.
inline std::vector<float> apply_pattern(std::span<const float> slice,
                                        const KernelPattern& pattern) {
  if (slice.size() != pattern.d * pattern.d) {
    throw ParameterError("slice has " + std::to_string(slice.size()) +
                         " values, pattern expects " + std::to_string(pattern.d) + "x" +
                         std::to_string(pattern.d));
  }
  std::vector<float> out(slice.size(), 0.0f);
  for (const Cell& p : pattern.positions) {
    const std::size_t k = p.row * pattern.d + p.col;
    out[k] = slice[k];
  }
  return out;
}

}  // namespace upaq
