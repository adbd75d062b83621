//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "upaq/model.hpp"

namespace upaq {

// A root layer plus the coupled layers that inherit its compression
// decision. Leaves are listed in topological order.
struct RootGroup {
  std::string root_id;
  std::vector<std::string> leaf_ids;

  std::vector<std::string> members() const {
    std::vector<std::string> all{root_id};
    all.insert(all.end(), leaf_ids.begin(), leaf_ids.end());
    return all;
  }
  std::size_t size() const { return 1 + leaf_ids.size(); }

  bool operator==(const RootGroup&) const = default;
};

// Undirected coupling graph over conv2d layers, keyed by layer index.
struct CouplingGraph {
  std::vector<std::size_t> conv_layers;                    // topological order
  std::set<std::pair<std::size_t, std::size_t>> edges;     // (lo, hi) layer indices

  bool connected(std::size_t a, std::size_t b) const {
    return edges.count({std::min(a, b), std::max(a, b)}) > 0;
  }
};

namespace detail {

// Conv layers whose output reaches layer `k` without passing another conv.
inline void collect_conv_producers(const ModelGraph& model, std::size_t k,
                                   std::set<std::size_t>& out) {
  for (const auto& in : model.layers[k].inputs) {
    const std::size_t p = model.index_of(in);
    if (model.layers[p].kind == LayerKind::conv2d) {
      out.insert(p);
    } else {
      collect_conv_producers(model, p, out);
    }
  }
}

inline bool same_kernel_dims(const LayerSpec& a, const LayerSpec& b) {
  return a.weights->kh == b.weights->kh && a.weights->kw == b.weights->kw;
}

}  // namespace detail

// Edge u-v when v consumes u's output, directly or through non-conv layers,
// and both have the same (kh, kw).
inline CouplingGraph build_coupling_graph(const ModelGraph& model) {
  CouplingGraph g;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (model.layers[k].kind != LayerKind::conv2d) continue;
    g.conv_layers.push_back(k);
    std::set<std::size_t> producers;
    detail::collect_conv_producers(model, k, producers);
    for (std::size_t p : producers) {
      if (detail::same_kernel_dims(model.layers[p], model.layers[k])) {
        g.edges.insert({std::min(p, k), std::max(p, k)});
      }
    }
  }
  return g;
}

// Connected components of the coupling graph. The topologically first layer
// of a component is its root; groups are returned in root order.
inline std::vector<RootGroup> find_root_groups(const ModelGraph& model) {
  const CouplingGraph g = build_coupling_graph(model);
  std::vector<std::vector<std::size_t>> adjacency(model.layers.size());
  for (const auto& [a, b] : g.edges) {
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }

  std::vector<bool> visited(model.layers.size(), false);
  std::vector<RootGroup> groups;
  for (std::size_t root : g.conv_layers) {
    if (visited[root]) continue;
    std::vector<std::size_t> members;
    std::vector<std::size_t> stack{root};
    visited[root] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      members.push_back(u);
      for (std::size_t v : adjacency[u]) {
        if (!visited[v]) {
          visited[v] = true;
          stack.push_back(v);
        }
      }
    }
    std::sort(members.begin(), members.end());
    RootGroup group{model.layers[members.front()].id, {}};
    for (std::size_t i = 1; i < members.size(); ++i) {
      group.leaf_ids.push_back(model.layers[members[i]].id);
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace upaq
