//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "upaq/error.hpp"
#include "upaq/model.hpp"

namespace upaq {

// Linear SQNR reported when the reconstruction error has no variance.
inline constexpr double kSqnrCap = 1e12;
// Error variances below this count as zero.
inline constexpr double kSqnrNoiseFloor = 1e-30;
// dB range of a single SQNR value; mirrors the linear cap on the low side.
inline constexpr double kSqnrDbCap = 120.0;

inline bool is_supported_bitwidth(int bits) { return bits == 4 || bits == 8 || bits == 16; }

inline std::int32_t max_quant_level(int bits) {
  return static_cast<std::int32_t>((std::int64_t{1} << (bits - 1)) - 1);
}

// Rounds half away from zero; std::round does exactly this.
inline double round_half_away(double v) { return std::round(v); }

struct QuantResult {
  std::vector<std::int32_t> q_values;
  float scale = 1.0f;
  int bits = 8;
  double sqnr_linear = kSqnrCap;
  double sqnr_db = kSqnrDbCap;
};

inline double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

inline double sqnr_to_db(double linear) {
  if (linear <= 0.0) return -kSqnrDbCap;
  return std::clamp(10.0 * std::log10(linear), -kSqnrDbCap, kSqnrDbCap);
}

inline std::vector<float> dequantize(std::span<const std::int32_t> q_values, float scale) {
  std::vector<float> out(q_values.size());
  for (std::size_t k = 0; k < q_values.size(); ++k) {
    out[k] = static_cast<float>(static_cast<double>(q_values[k]) * static_cast<double>(scale));
  }
  return out;
}

// var(x) / var(x - x_hat), population variances over every element.
inline double sqnr_linear(std::span<const float> x, std::span<const float> x_hat) {
  std::vector<double> signal(x.begin(), x.end());
  std::vector<double> noise(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    noise[k] = static_cast<double>(x[k]) - static_cast<double>(x_hat[k]);
  }
  const double noise_var = population_variance(noise);
  if (noise_var < kSqnrNoiseFloor) return kSqnrCap;
  return std::min(population_variance(signal) / noise_var, kSqnrCap);
}

// Symmetric per-slice quantizer. scale = max|x| / (2^(bits-1) - 1); an
// all-zero slice falls back to scale 1.
inline QuantResult mp_quantize(std::span<const float> x, int bits) {
  if (!is_supported_bitwidth(bits)) {
    throw ParameterError("unsupported bitwidth " + std::to_string(bits));
  }
  if (!all_finite(x)) throw ParameterError("cannot quantize non-finite values");

  QuantResult r;
  r.bits = bits;
  const std::int32_t max_value = max_quant_level(bits);

  float alpha = 0.0f;
  if (!x.empty()) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    alpha = std::max(std::fabs(*lo), std::fabs(*hi));
  }
  r.scale = alpha > 0.0f ? static_cast<float>(static_cast<double>(alpha) / max_value) : 1.0f;

  r.q_values.resize(x.size());
  const double scale = r.scale;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double level = round_half_away(static_cast<double>(x[k]) / scale);
    r.q_values[k] = static_cast<std::int32_t>(
        std::clamp(level, -static_cast<double>(max_value), static_cast<double>(max_value)));
  }

  const std::vector<float> x_hat = dequantize(r.q_values, r.scale);
  r.sqnr_linear = sqnr_linear(x, x_hat);
  r.sqnr_db = sqnr_to_db(r.sqnr_linear);
  return r;
}

}  // namespace upaq
