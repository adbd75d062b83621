//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "upaq/blocks.hpp"
#include "upaq/compressed.hpp"
#include "upaq/cost.hpp"
#include "upaq/error.hpp"
#include "upaq/grouping.hpp"
#include "upaq/model.hpp"
#include "upaq/patterns.hpp"
#include "upaq/quantizer.hpp"
#include "upaq/rng.hpp"

namespace upaq {

// Relative importance of accuracy, latency and energy in the efficiency score.
struct ScoreWeights {
  double alpha = 0.3;
  double beta = 0.4;
  double gamma = 0.3;

  bool operator==(const ScoreWeights&) const = default;
};

struct CompressionProfile {
  std::string name = "custom";
  // Retained weights per kernel of dimension d. Dimensions missing here fall
  // back to max(1, d - fallback_drop).
  std::map<std::size_t, std::size_t> n_nonzero;
  std::size_t fallback_drop = 0;
  std::vector<int> quant_bits{8};
  std::size_t candidates = 16;
  bool exhaustive = false;  // score every enumerable pattern instead of sampling
  ScoreWeights weights;
  std::uint64_t seed = 0;

  std::size_t nonzero_for(std::size_t d) const {
    if (auto it = n_nonzero.find(d); it != n_nonzero.end()) return it->second;
    return d > fallback_drop ? d - fallback_drop : 1;
  }

  void validate() const {
    const auto& w = weights;
    for (double v : {w.alpha, w.beta, w.gamma}) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("score weights must lie in [0, 1]");
    }
    if (!(w.alpha + w.beta + w.gamma > 0.0)) {
      throw ValidationError("score weights must not all be zero");
    }
    if (quant_bits.empty()) throw ValidationError("profile has no quantization bitwidths");
    for (std::size_t k = 0; k < quant_bits.size(); ++k) {
      if (!is_supported_bitwidth(quant_bits[k])) {
        throw ValidationError("bitwidth " + std::to_string(quant_bits[k]) +
                              " not in {4, 8, 16}");
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (quant_bits[j] == quant_bits[k]) throw ValidationError("duplicate bitwidth");
      }
    }
    for (const auto& [d, n] : n_nonzero) {
      if (d == 0 || n == 0 || n > d) {
        throw ValidationError("non-zero count " + std::to_string(n) +
                              " invalid for kernel dimension " + std::to_string(d));
      }
    }
    if (candidates == 0) throw ValidationError("candidate count must be >= 1");
  }

  // Fewer retained weights and lower bitwidths.
  static CompressionProfile hck(std::uint64_t seed = 0) {
    CompressionProfile p;
    p.name = "HCK";
    p.n_nonzero = {{3, 2}};
    p.fallback_drop = 1;
    p.quant_bits = {4, 8};
    p.seed = seed;
    return p;
  }

  // More retained weights and higher bitwidths.
  static CompressionProfile lck(std::uint64_t seed = 0) {
    CompressionProfile p;
    p.name = "LCK";
    p.n_nonzero = {{3, 3}};
    p.fallback_drop = 0;
    p.quant_bits = {8, 16};
    p.seed = seed;
    return p;
  }
};

struct EfficiencyScore {
  double sqnr_term = 0.0;
  double latency_term = 0.0;
  double energy_term = 0.0;
  double total = 0.0;

  bool operator==(const EfficiencyScore&) const = default;
};

// dB divisor that brings the SQNR term to the order of the cost ratios.
inline constexpr double kSqnrTermScaleDb = 40.0;

// E_s = alpha * sqnr_term + beta * latency_term + gamma * energy_term with
//   sqnr_term    = clamp(mean_sqnr_db, 0, 120) / 40
//   latency_term = baseline latency / candidate latency
//   energy_term  = baseline energy / candidate energy (0 when unavailable)
inline EfficiencyScore calculate_es(double mean_sqnr_db, const CostEstimate& candidate,
                                    const CostEstimate& baseline, const ScoreWeights& w) {
  if (!(baseline.latency > 0.0)) throw ParameterError("baseline latency must be positive");
  if (!(candidate.latency > 0.0)) throw ParameterError("zero candidate cost");
  EfficiencyScore s;
  s.sqnr_term = std::clamp(mean_sqnr_db, 0.0, kSqnrDbCap) / kSqnrTermScaleDb;
  s.latency_term = baseline.latency / candidate.latency;
  if (candidate.energy && baseline.energy) {
    if (!(*candidate.energy > 0.0)) throw ParameterError("zero candidate cost");
    s.energy_term = *baseline.energy / *candidate.energy;
  }
  s.total = w.alpha * s.sqnr_term + w.beta * s.latency_term + w.gamma * s.energy_term;
  return s;
}

// Pattern-pruned and quantized weights of one layer.
struct LayerQuantization {
  PackedWeights packed;
  std::vector<double> unit_sqnr_db;

  double mean_sqnr_db() const {
    if (unit_sqnr_db.empty()) return kSqnrDbCap;
    double acc = 0.0;
    for (double v : unit_sqnr_db) acc += v;
    return acc / static_cast<double>(unit_sqnr_db.size());
  }
};

// Masks every unit (kernel slice, or 3x3 block for 1x1 layers) with the
// pattern and quantizes it with its own scale.
inline LayerQuantization quantize_layer(const LayerSpec& layer, const KernelPattern& pattern,
                                        int bits) {
  const Tensor4& w = *layer.weights;
  LayerQuantization out;
  PackedWeights& p = out.packed;
  p.out_ch = w.out_ch;
  p.in_ch = w.in_ch;
  p.kh = w.kh;
  p.kw = w.kw;
  p.bits = bits;

  auto take = [&](std::span<const float> unit, std::size_t u) {
    const std::vector<float> masked = apply_pattern(unit, pattern);
    const QuantResult q = mp_quantize(masked, bits);
    std::vector<std::int32_t> levels;
    for (std::size_t cell : retained_cells(p, pattern, u)) levels.push_back(q.q_values[cell]);
    p.scales.push_back(q.scale);
    p.values.push_back(std::move(levels));
    out.unit_sqnr_db.push_back(q.sqnr_db);
  };

  if (w.kh == 1 && w.kw == 1) {
    p.layout = PackedLayout::blocks_1x1;
    const std::vector<WeightBlock> blocks = blocks_from_1x1(w, kBlockEdge);
    for (std::size_t b = 0; b < blocks.size(); ++b) take(blocks[b].values, b);
  } else {
    if (w.kh != w.kw) throw ValidationError("layer '" + layer.id + "': non-square kernel");
    p.layout = PackedLayout::kernel_slices;
    for (std::size_t s = 0; s < w.slice_count(); ++s) take(w.slice(s), s);
  }
  return out;
}

struct CandidateResult {
  KernelPattern pattern;
  int bits = 0;
  double mean_sqnr_db = 0.0;
  EfficiencyScore score;
  CostEstimate cost;
  LayerQuantization root;
};

struct GroupDecision {
  RootGroup group;
  KernelPattern pattern;
  int bits = 0;
  double mean_sqnr_db = 0.0;
  EfficiencyScore score;
  CostEstimate candidate_cost;
  std::size_t candidates_evaluated = 0;
  std::map<std::string, PackedWeights> layers;  // root and leaves
};

// Read-only state shared by all group searches: the baseline model, its
// workload and cost.
class SearchContext {
 public:
  SearchContext(const ModelGraph& model, const CompressionProfile& profile, const CostModel& cost)
      : model_(model),
        profile_(profile),
        cost_(cost),
        baseline_workload_(workload_of(model)),
        baseline_cost_(cost.estimate(baseline_workload_, &model)) {}

  const ModelGraph& model() const { return model_; }
  const CompressionProfile& profile() const { return profile_; }
  const CostModel& cost() const { return cost_; }
  const CostEstimate& baseline_cost() const { return baseline_cost_; }
  const Workload& baseline_workload() const { return baseline_workload_; }

  // Writes the root candidate into a copy of the baseline and scores it.
  // Both the search and any external oracle go through here.
  CandidateResult evaluate(const RootGroup& group, const KernelPattern& pattern, int bits) const {
    const LayerSpec& root = *model_.find(group.root_id);
    CandidateResult r;
    r.pattern = pattern;
    r.bits = bits;
    r.root = quantize_layer(root, pattern, bits);
    r.mean_sqnr_db = r.root.mean_sqnr_db();

    Workload wl = baseline_workload_;
    for (auto& e : wl) {
      if (e.id != group.root_id) continue;
      e.nonzeros = 0;
      for (const auto& unit : r.root.packed.values) e.nonzeros += unit.size();
      e.bits = bits;
    }
    if (cost_.needs_weights()) {
      ModelGraph candidate = deep_copy(model_);
      candidate.find(group.root_id)->weights = dequantize_layer(r.root.packed, pattern);
      r.cost = cost_.estimate(wl, &candidate);
    } else {
      r.cost = cost_.estimate(wl, nullptr);
    }
    r.score = calculate_es(r.mean_sqnr_db, r.cost, baseline_cost_, profile_.weights);
    return r;
  }

 private:
  const ModelGraph& model_;
  const CompressionProfile& profile_;
  const CostModel& cost_;
  Workload baseline_workload_;
  CostEstimate baseline_cost_;
};

// Kernel dimension and retained count the group's search works with.
struct GroupGeometry {
  std::size_t d = 0;
  std::size_t n = 0;
  bool one_by_one = false;
};

inline GroupGeometry group_geometry(const ModelGraph& model, const RootGroup& group,
                                    const CompressionProfile& profile) {
  const LayerSpec* root = model.find(group.root_id);
  if (!root || root->kind != LayerKind::conv2d) {
    throw ValidationError("group root '" + group.root_id + "' is not a conv2d layer");
  }
  const Tensor4& w = *root->weights;
  GroupGeometry g;
  g.one_by_one = w.kw == 1 && w.kh == 1;
  if (!g.one_by_one && w.kh != w.kw) {
    throw ValidationError("layer '" + root->id + "': non-square kernel cannot take a pattern");
  }
  g.d = g.one_by_one ? kBlockEdge : w.kw;
  g.n = profile.nonzero_for(g.d);
  if (g.n == 0 || g.n > g.d) {
    throw ParameterError("profile/kernel incompatibility: " + std::to_string(g.n) +
                         " non-zeros for kernel dimension " + std::to_string(g.d));
  }
  return g;
}

namespace detail {

inline GroupDecision search_group(const SearchContext& ctx, const RootGroup& group,
                                  const GroupGeometry& geo, Rng& rng) {
  const CompressionProfile& profile = ctx.profile();
  std::vector<KernelPattern> candidates;
  if (profile.exhaustive) {
    candidates = enumerate_all_patterns(geo.n, geo.d);
  } else {
    for (std::size_t k = 0; k < profile.candidates; ++k) {
      candidates.push_back(generate_pattern(geo.n, geo.d, rng));
    }
  }

  std::optional<CandidateResult> best;
  std::size_t evaluated = 0;
  for (const KernelPattern& pattern : candidates) {
    for (int bits : profile.quant_bits) {
      CandidateResult r = ctx.evaluate(group, pattern, bits);
      ++evaluated;
      if (!best || r.score.total > best->score.total) best = std::move(r);
    }
  }

  GroupDecision d;
  d.group = group;
  d.pattern = best->pattern;
  d.bits = best->bits;
  d.mean_sqnr_db = best->mean_sqnr_db;
  d.score = best->score;
  d.candidate_cost = best->cost;
  d.candidates_evaluated = evaluated;
  d.layers.emplace(group.root_id, std::move(best->root.packed));
  for (const auto& leaf : group.leaf_ids) {
    const LayerSpec& layer = *ctx.model().find(leaf);
    d.layers.emplace(leaf, quantize_layer(layer, d.pattern, d.bits).packed);
  }
  return d;
}

}  // namespace detail

// Search over (pattern, bitwidth) for a group whose root has d x d kernels,
// d > 1. The winner is replicated to the leaves.
inline GroupDecision compress_kxk_group(const SearchContext& ctx, const RootGroup& group, Rng& rng) {
  const GroupGeometry geo = group_geometry(ctx.model(), group, ctx.profile());
  if (geo.one_by_one) throw ParameterError("compress_kxk_group called on a 1x1 root");
  return detail::search_group(ctx, group, geo, rng);
}

// Same search for 1x1 roots, over the 3x3 block view of the weights.
inline GroupDecision compress_1x1_group(const SearchContext& ctx, const RootGroup& group,
                                        Rng& rng) {
  const GroupGeometry geo = group_geometry(ctx.model(), group, ctx.profile());
  if (!geo.one_by_one) throw ParameterError("compress_1x1_group called on a k x k root");
  return detail::search_group(ctx, group, geo, rng);
}

struct CompressOptions {
  unsigned workers = 1;
};

struct CompressionResult {
  CompressedModel model;
  std::vector<GroupDecision> decisions;  // in root topological order
  CostEstimate baseline_cost;
  CostEstimate compressed_cost;
  ComputationalCost dense_ops;
  ComputationalCost compressed_ops;
  std::size_t dense_bytes = 0;
  std::size_t compressed_bytes = 0;
  double ratio = 0.0;
};

inline CompressedModel assemble_compressed(const ModelGraph& model,
                                           const std::vector<GroupDecision>& decisions,
                                           const CompressionProfile& profile) {
  CompressedModel out;
  out.name = model.name;
  out.input_shape = model.input_shape;
  out.profile = {profile.name, profile.quant_bits};
  std::map<std::string, const PackedWeights*> packed;
  for (const auto& d : decisions) {
    out.groups.push_back({d.group.root_id, d.group.leaf_ids, d.pattern, d.bits});
    for (const auto& [id, p] : d.layers) packed[id] = &p;
  }
  std::sort(out.groups.begin(), out.groups.end(),
            [](const auto& a, const auto& b) { return a.root_id < b.root_id; });
  for (const auto& layer : model.layers) {
    CompressedLayer cl;
    cl.spec = layer;
    if (auto it = packed.find(layer.id); it != packed.end()) {
      cl.spec.weights.reset();
      cl.packed = *it->second;
    }
    out.layers.push_back(std::move(cl));
  }
  return out;
}

// Groups are searched independently (optionally on several threads), each
// with its own random stream keyed by (profile seed, root id), so the
// output does not depend on the worker count.
inline CompressionResult compress_model(const ModelGraph& model, const CompressionProfile& profile,
                                        const CostModel& cost, CompressOptions options = {}) {
  validate(model);
  profile.validate();
  const ModelGraph working = deep_copy(model);
  const std::vector<RootGroup> groups = find_root_groups(working);

  std::vector<GroupGeometry> geometry;
  for (const auto& g : groups) geometry.push_back(group_geometry(working, g, profile));

  const SearchContext ctx(working, profile, cost);
  std::vector<GroupDecision> decisions(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < groups.size(); k = next++) {
      try {
        Rng rng(stream_seed(profile.seed, groups[k].root_id));
        decisions[k] = detail::search_group(ctx, groups[k], geometry[k], rng);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers,
                                                           static_cast<unsigned>(groups.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CompressionResult result;
  result.model = assemble_compressed(working, decisions, profile);
  result.decisions = std::move(decisions);
  result.baseline_cost = ctx.baseline_cost();
  if (cost.needs_weights()) {
    const ModelGraph dense = densify(result.model);
    result.compressed_cost = cost.estimate(workload_of(result.model), &dense);
  } else {
    result.compressed_cost = cost.estimate(workload_of(result.model), nullptr);
  }
  result.dense_ops = computational_cost(working);
  result.compressed_ops = computational_cost(result.model);
  result.dense_bytes = dense_payload_bytes(working);
  result.compressed_bytes = compressed_payload_bytes(result.model);
  result.ratio = compression_ratio(result.dense_bytes, result.compressed_bytes);
  return result;
}

}  // namespace upaq
