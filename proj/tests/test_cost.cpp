//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include "helpers.hpp"

namespace upaq {
namespace {

TEST(Cost, ProductForm) {
  EXPECT_EQ(computational_cost(2.0, 4.0, 5.0), 40.0);
  ModelGraph m = gen_fixture("toy-cnn", 42).model;
  for (auto& l : m.layers)
    if (l.kind == LayerKind::conv2d) std::fill(l.weights->data.begin(), l.weights->data.end(), 0.0f);
  const ComputationalCost c = computational_cost(m);
  EXPECT_EQ(c.nonzeros_per_kernel, 0.0);
  EXPECT_EQ(c.product, 0.0);
}

TEST(Cost, FixtureCounts) {
  const ComputationalCost c = computational_cost(gen_fixture("toy-cnn", 42).model);
  EXPECT_EQ(c.conv_layers, 3u);
  EXPECT_EQ(c.exact_nonzeros, 72u + 1152u + 2304u);
  EXPECT_DOUBLE_EQ(c.kernels_per_layer, (8.0 + 128.0 + 256.0) / 3.0);
  EXPECT_DOUBLE_EQ(c.product, 3528.0);
}

// Hand count: every conv of toy-cnn keeps its 16x16 plane (3x3, pad 1), so
// MACs = (72 + 1152 + 2304) * 256 at 32 bits.
TEST(Cost, AnalyticMatchesMacCount) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  const CostEstimate e = AnalyticCost{}.estimate(workload_of(m), nullptr);
  EXPECT_EQ(e.latency, 903168.0);
  ASSERT_TRUE(e.energy);
  EXPECT_DOUBLE_EQ(*e.energy, 903168.0 + 0.1 * 3528.0 * 4.0);
}

TEST(Cost, LatencyScalesWithNonzerosAndBits) {
  const Workload full{{"a", 100, 64, 32}, {"b", 40, 16, 32}};
  const Workload half{{"a", 50, 64, 32}, {"b", 20, 16, 32}};
  const Workload eight{{"a", 100, 64, 8}, {"b", 40, 16, 8}};
  const AnalyticCost cost;
  const double base = cost.estimate(full, nullptr).latency;
  EXPECT_EQ(cost.estimate(half, nullptr).latency / base, 0.5);
  EXPECT_EQ(cost.estimate(eight, nullptr).latency / base, 0.25);
}

TEST(Cost, MeasuredNeedsModelAndProbes) {
  EXPECT_THROW(MeasuredCost(std::vector<Activation>{}), ParameterError);
  const Fixture f = gen_fixture("toy-1x1", 1);
  const MeasuredCost cost({f.inputs[0]}, 1);
  EXPECT_TRUE(cost.needs_weights());
  EXPECT_THROW(cost.estimate({}, nullptr), ParameterError);
  const CostEstimate e = cost.estimate(workload_of(f.model), &f.model);
  EXPECT_GT(e.latency, 0.0);
  EXPECT_FALSE(e.energy);
}

TEST(Cost, RatioErrors) {
  EXPECT_THROW(compression_ratio(10, 0), ParameterError);
  EXPECT_EQ(compression_ratio(10, 4), 2.5);
}

}  // namespace
}  // namespace upaq
