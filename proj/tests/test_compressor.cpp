//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include "helpers.hpp"

namespace upaq {
namespace {

std::size_t stored(const PackedWeights& p, std::size_t u) { return p.values[u].size(); }

TEST(EfficiencyScore, WorkedExample) {
  const EfficiencyScore s = calculate_es(20.0, {1.0, 1.0}, {2.0, 2.5}, {});
  EXPECT_DOUBLE_EQ(s.sqnr_term, 0.5);
  EXPECT_DOUBLE_EQ(s.latency_term, 2.0);
  EXPECT_DOUBLE_EQ(s.energy_term, 2.5);
  EXPECT_NEAR(s.total, 1.70, 1e-12);
}

TEST(EfficiencyScore, DegenerateWeightsAndMonotonicity) {
  const EfficiencyScore s = calculate_es(60.0, {1.0, 1.0}, {3.0, 3.0}, {1.0, 0.0, 0.0});
  EXPECT_EQ(s.total, s.sqnr_term);
  for (double alpha : {0.01, 0.3, 1.0}) {
    const ScoreWeights w{alpha, 0.4, 0.3};
    EXPECT_GT(calculate_es(41.0, {2.0, 2.0}, {4.0, 4.0}, w).total,
              calculate_es(40.0, {2.0, 2.0}, {4.0, 4.0}, w).total);
  }
  EXPECT_EQ(calculate_es(-30.0, {1.0, 1.0}, {1.0, 1.0}, {}).sqnr_term, 0.0);
  EXPECT_EQ(calculate_es(500.0, {1.0, 1.0}, {1.0, 1.0}, {}).sqnr_term, 3.0);
  EXPECT_EQ(calculate_es(10.0, {1.0, std::nullopt}, {1.0, std::nullopt}, {}).energy_term, 0.0);
  EXPECT_THROW(calculate_es(10.0, {0.0, 1.0}, {1.0, 1.0}, {}), ParameterError);
}

TEST(Profile, Validation) {
  EXPECT_NO_THROW(CompressionProfile::hck().validate());
  EXPECT_NO_THROW(CompressionProfile::lck().validate());
  CompressionProfile p = CompressionProfile::hck();
  p.quant_bits = {4, 3};
  EXPECT_THROW(p.validate(), ValidationError);
  p = CompressionProfile::hck();
  p.n_nonzero[3] = 4;
  EXPECT_THROW(p.validate(), ValidationError);
  p = CompressionProfile::hck();
  p.weights = {0.0, 0.0, 0.0};
  EXPECT_THROW(p.validate(), ValidationError);
  EXPECT_EQ(CompressionProfile::hck().nonzero_for(5), 4u);
  EXPECT_EQ(CompressionProfile::lck().nonzero_for(5), 5u);
}

void expect_profile_structure(const CompressionResult& r, std::size_t n, std::vector<int> bits) {
  for (const auto& g : r.model.groups) {
    EXPECT_EQ(g.pattern.n, n);
    EXPECT_NE(std::find(bits.begin(), bits.end(), g.bitwidth), bits.end());
  }
  for (const auto& layer : r.model.layers) {
    if (layer.spec.kind != LayerKind::conv2d) continue;
    ASSERT_TRUE(layer.packed) << layer.spec.id;
    const KernelPattern& p = r.model.group_of(layer.spec.id)->pattern;
    const Tensor4 dq = dequantize_layer(*layer.packed, p);
    const auto mask = p.mask();
    for (std::size_t u = 0; u < layer.packed->unit_count(); ++u) {
      EXPECT_EQ(stored(*layer.packed, u), n);
      const auto slice = dq.slice(u);
      for (std::size_t c = 0; c < slice.size(); ++c) {
        if (!mask[c]) {
          EXPECT_EQ(slice[c], 0.0f);
        }
      }
    }
  }
}

TEST(Compress, HckAndLckStructureOnToyCnn) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  expect_profile_structure(compress_model(m, CompressionProfile::hck(42), AnalyticCost{}), 2, {4, 8});
  expect_profile_structure(compress_model(m, CompressionProfile::lck(42), AnalyticCost{}), 3, {8, 16});
}

TEST(Compress, ResidualGroupSharesDecision) {
  const auto r = compress_model(gen_fixture("toy-residual", 42).model, CompressionProfile::hck(42),
                                AnalyticCost{});
  ASSERT_EQ(r.model.groups.size(), 1u);
  const CompressedGroup& g = r.model.groups[0];
  EXPECT_EQ(g.root_id, "conv_a");
  EXPECT_EQ(g.leaf_ids, (std::vector<std::string>{"conv_b", "conv_c"}));
  for (const auto& layer : r.model.layers) {
    if (layer.packed) {
      EXPECT_EQ(layer.packed->bits, g.bitwidth) << layer.spec.id;
    }
  }
  expect_profile_structure(r, 2, {4, 8});
}

TEST(Compress, SumFormNonzeros) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  const auto r = compress_model(m, CompressionProfile::hck(42), AnalyticCost{});
  std::size_t expected = 0;
  for (const auto& g : r.model.groups) {
    for (const auto& id : RootGroup{g.root_id, g.leaf_ids}.members()) {
      expected += m.find(id)->weights->slice_count() * g.pattern.n;
    }
  }
  EXPECT_EQ(r.compressed_ops.exact_nonzeros, expected);
  EXPECT_EQ(r.dense_ops.exact_nonzeros, 3528u);
}

TEST(Compress, RootOnlyGroup) {
  const ModelGraph m = testing::single_conv(4, 2, 8);
  const auto r = compress_model(m, CompressionProfile::hck(1), AnalyticCost{});
  ASSERT_EQ(r.decisions.size(), 1u);
  EXPECT_TRUE(r.decisions[0].group.leaf_ids.empty());
  EXPECT_EQ(r.decisions[0].layers.size(), 1u);
}

TEST(Compress, ExhaustiveMatchesBruteForce) {
  const ModelGraph m = testing::single_conv(4, 3, 42);
  for (std::size_t n : {1u, 2u, 3u}) {
    CompressionProfile profile;
    profile.name = "oracle";
    profile.n_nonzero = {{3, n}};
    profile.quant_bits = {4, 8, 16};
    profile.exhaustive = true;
    const AnalyticCost cost;
    const auto r = compress_model(m, profile, cost);

    const SearchContext ctx(m, profile, cost);
    const RootGroup group{"conv", {}};
    std::optional<CandidateResult> best;
    for (const auto& p : enumerate_all_patterns(n, 3)) {
      for (int bits : {4, 8, 16}) {
        CandidateResult c = ctx.evaluate(group, p, bits);
        if (!best || c.score.total > best->score.total) best = c;
      }
    }
    EXPECT_EQ(r.decisions[0].pattern, best->pattern) << n;
    EXPECT_EQ(r.decisions[0].bits, best->bits) << n;
    EXPECT_EQ(r.decisions[0].score, best->score) << n;
    EXPECT_EQ(r.decisions[0].candidates_evaluated, enumerate_all_patterns(n, 3).size() * 3);
  }
}

TEST(Compress, TieKeepsFirstCandidate) {
  ModelGraph m{"zeros", {9, 4, 4}, {testing::conv("proj", {}, 2, 9, 1)}};
  CompressionProfile profile = CompressionProfile::lck(0);
  profile.exhaustive = true;
  profile.quant_bits = {8};
  const auto r = compress_model(m, profile, AnalyticCost{});
  EXPECT_EQ(r.decisions[0].pattern, enumerate_all_patterns(3, 3).front());
  EXPECT_EQ(r.decisions[0].mean_sqnr_db, kSqnrDbCap);
}

TEST(Compress, HigherSqnrWinsAtEqualCost) {
  // Slices whose row-0 values are representable at 4 bits and whose other
  // rows are not: the row-0 pattern carries the cap, the rest do not.
  ModelGraph m = testing::single_conv(1, 1, 3);
  auto& w = m.layers[0].weights->data;
  w = {1.0f, -1.0f, 0.0f, 0.3f, 0.71f, -0.2f, 0.55f, 0.13f, 0.9f};
  CompressionProfile profile;
  profile.n_nonzero = {{3, 3}};
  profile.quant_bits = {4};
  profile.exhaustive = true;
  const auto r = compress_model(m, profile, AnalyticCost{});
  EXPECT_EQ(r.decisions[0].pattern, make_pattern(PatternKind::row, 3, 3, 0, 0));
}

// toy-cnn has 392 kernel slices, 50 biases and a 16x10 linear layer. With
// n = d = 3 a slice stores 3 cells: 4 bytes of scale plus 3 * bits / 8.
TEST(Compress, PayloadHandCount) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  const std::size_t remainder = 9 + 50 * 4 + 160 * 4;
  EXPECT_EQ(dense_payload_bytes(m), (3528u + 50u + 160u) * 4u);
  CompressionProfile profile;
  profile.name = "full-line";
  profile.n_nonzero = {{3, 3}};
  profile.quant_bits = {16};
  const auto r16 = compress_model(m, profile, AnalyticCost{});
  EXPECT_EQ(r16.compressed_bytes, 392u * (4u + 6u) + remainder);
  const auto hck = compress_model(m, CompressionProfile::hck(42), AnalyticCost{});
  const std::size_t level_bytes = hck.decisions[0].bits == 8 ? 2 : 1;
  EXPECT_EQ(hck.compressed_bytes, 392u * (4u + level_bytes) + remainder);
  EXPECT_EQ(hck.ratio, static_cast<double>(hck.dense_bytes) / static_cast<double>(hck.compressed_bytes));
}

TEST(Compress, DeterministicAcrossWorkers) {
  for (const auto& arch : fixture_archs()) {
    const ModelGraph m = gen_fixture(arch, 42).model;
    for (const auto& profile : {CompressionProfile::hck(42), CompressionProfile::lck(42)}) {
      const std::string one = to_bytes(compress_model(m, profile, AnalyticCost{}, {1}).model);
      for (unsigned workers : {2u, 4u, 16u}) {
        EXPECT_EQ(to_bytes(compress_model(m, profile, AnalyticCost{}, {workers}).model), one)
            << arch << " workers " << workers;
      }
    }
  }
}

TEST(Compress, SeedChangesSampledPatterns) {
  const ModelGraph m = gen_fixture("toy-cnn", 42).model;
  std::set<std::string> outputs;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    CompressionProfile p = CompressionProfile::hck(seed);
    p.candidates = 1;
    outputs.insert(to_bytes(compress_model(m, p, AnalyticCost{}).model));
  }
  EXPECT_GT(outputs.size(), 1u);
}

TEST(Compress, DispatchGuards) {
  const ModelGraph one = gen_fixture("toy-1x1", 1).model;
  const CompressionProfile profile = CompressionProfile::hck(0);
  const AnalyticCost cost;
  const SearchContext ctx(one, profile, cost);
  Rng rng(1);
  EXPECT_THROW(compress_kxk_group(ctx, {"proj", {}}, rng), ParameterError);
  EXPECT_THROW(compress_1x1_group(ctx, {"conv1", {}}, rng), ParameterError);
  EXPECT_NO_THROW(compress_1x1_group(ctx, {"proj", {}}, rng));

  ModelGraph rect{"rect", {1, 8, 8}, {testing::conv("r", {}, 2, 1, 3)}};
  rect.layers[0].weights = Tensor4(2, 1, 3, 1);
  testing::fill_uniform(rect, 2);
  EXPECT_THROW(compress_model(rect, profile, cost), ValidationError);
}

TEST(Compress, MeasuredCostRuns) {
  const Fixture f = gen_fixture("toy-residual", 3);
  CompressionProfile p = CompressionProfile::hck(1);
  p.candidates = 2;
  const MeasuredCost cost({f.inputs[0]}, 1);
  const auto r = compress_model(f.model, p, cost);
  EXPECT_FALSE(r.compressed_cost.energy);
  EXPECT_NO_THROW(validate(r.model));
}

TEST(Compress, CompressedValidationCatchesTampering) {
  const auto r = compress_model(gen_fixture("toy-cnn", 42).model, CompressionProfile::hck(42),
                                AnalyticCost{});
  CompressedModel bad = r.model;
  bad.groups[0].bitwidth = 16;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = r.model;
  for (auto& l : bad.layers)
    if (l.packed) {
      l.packed->values[0].push_back(1);
      break;
    }
  EXPECT_THROW(validate(bad), ValidationError);
  bad = r.model;
  for (auto& l : bad.layers)
    if (l.packed) {
      l.packed->values[0][0] = 1000;
      break;
    }
  EXPECT_THROW(validate(bad), ValidationError);
}

TEST(Compress, ReloadGivesSameDequantizedWeights) {
  const auto r = compress_model(gen_fixture("toy-cnn", 42).model, CompressionProfile::hck(42),
                                AnalyticCost{});
  const CompressedModel back = compressed_from_bytes(to_bytes(r.model));
  EXPECT_TRUE(densify(back) == densify(r.model));
}

}  // namespace
}  // namespace upaq
