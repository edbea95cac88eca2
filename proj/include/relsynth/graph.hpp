/*
 * Copyright 2026 The relsynth Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "relsynth/codec.hpp"
#include "relsynth/database.hpp"
#include "relsynth/error.hpp"
#include "relsynth/random.hpp"

namespace relsynth {

using NodeId = std::int64_t;

/// Typed edge: nodes of `child` point at nodes of `parent` through one
/// foreign-key column. Identity includes the column, so two foreign keys to
/// the same parent table are distinct edge types.
struct EdgeType {
  std::size_t child = 0;
  std::size_t parent = 0;
  std::size_t fk_slot = 0;
  std::string fk_column;

  bool operator==(const EdgeType&) const = default;
};

struct NodeRef {
  std::size_t type = 0;
  NodeId id = 0;

  bool operator==(const NodeRef&) const = default;
};

/// Directed heterogeneous graph: one node type per table, one edge type per
/// link, edges stored child -> parent. `features[i]` holds one encoded row
/// per node of type i (it may have zero columns, or be left empty for a
/// featureless structure).
struct HeteroGraph {
  std::vector<std::string> node_types;
  std::vector<NodeId> node_counts;
  std::vector<EdgeType> edge_types;
  std::vector<std::vector<std::pair<NodeId, NodeId>>> edges;  // [edge type] (child, parent)
  std::vector<Matrix> features;

  std::size_t num_types() const { return node_types.size(); }
  NodeId total_nodes() const {
    NodeId n = 0;
    for (NodeId c : node_counts) n += c;
    return n;
  }
  bool has_features() const { return features.size() == node_types.size(); }

  bool operator==(const HeteroGraph&) const = default;
};

/// Node and edge types of a schema, with no nodes yet.
inline HeteroGraph graph_skeleton(const DatabaseSchema& schema) {
  HeteroGraph g;
  for (const auto& table : schema.tables()) g.node_types.push_back(table.name);
  g.node_counts.assign(schema.tables().size(), 0);
  for (const auto& link : schema.links()) {
    g.edge_types.push_back(EdgeType{link.child, link.parent, link.fk_slot, link.fk_column});
  }
  g.edges.resize(g.edge_types.size());
  return g;
}

/// Checks endpoint types, id ranges, and (optionally) that every node has
/// exactly one outgoing edge per edge type of its table.
inline void check_graph(const HeteroGraph& g, bool require_complete = true) {
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& et = g.edge_types[e];
    if (et.child == et.parent) throw ValidationError("edge type connects a node type to itself");
    std::vector<int> out(static_cast<std::size_t>(g.node_counts[et.child]), 0);
    for (const auto& [c, p] : g.edges[e]) {
      if (c < 0 || c >= g.node_counts[et.child] || p < 0 || p >= g.node_counts[et.parent]) {
        throw ValidationError("edge endpoint out of range for edge type " + et.fk_column);
      }
      ++out[static_cast<std::size_t>(c)];
    }
    for (std::size_t v = 0; v < out.size(); ++v) {
      if (out[v] > 1 || (require_complete && out[v] != 1)) {
        throw ValidationError("incomplete foreign keys: node " + std::to_string(v) + " of type '" +
                              g.node_types[et.child] + "' has " + std::to_string(out[v]) +
                              " outgoing '" + et.fk_column + "' edges");
      }
    }
  }
}

/// Rows become nodes (ids = row positions), foreign-key references become
/// edges, and attributes become encoded node features. Keys are not part of
/// the features.
inline HeteroGraph rdb_to_graph(const Database& db, const CodecBundle& codecs) {
  HeteroGraph g = graph_skeleton(db.schema);
  for (std::size_t t = 0; t < db.tables.size(); ++t) {
    g.node_counts[t] = static_cast<NodeId>(db.tables[t].rows());
  }
  const auto parents = resolve_links(db);
  for (std::size_t e = 0; e < parents.size(); ++e) {
    auto& edges = g.edges[e];
    edges.reserve(parents[e].size());
    for (std::size_t r = 0; r < parents[e].size(); ++r) {
      edges.emplace_back(static_cast<NodeId>(r), static_cast<NodeId>(parents[e][r]));
    }
  }
  g.features = encode_features(db, codecs);
  return g;
}

/// Reconstructs tables from a graph: node i of each type gets primary key
/// "i+1", each outgoing edge contributes the parent's key to the matching
/// foreign-key column, and features are decoded into attributes.
inline Database graph_to_rdb(const HeteroGraph& g, const DatabaseSchema& schema,
                             const CodecBundle& codecs) {
  if (g.node_types.size() != schema.tables().size() ||
      g.edge_types.size() != schema.links().size()) {
    throw ValidationError("graph types do not match the schema");
  }
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& link = schema.links()[e];
    const auto& et = g.edge_types[e];
    if (et.child != link.child || et.parent != link.parent || et.fk_slot != link.fk_slot) {
      throw ValidationError("graph edge type " + std::to_string(e) + " does not match the schema");
    }
  }
  check_graph(g, true);
  if (!g.has_features()) throw ValidationError("graph has no features to decode");

  Database db = empty_database(schema);
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    auto& table = db.tables[t];
    const auto n = static_cast<std::size_t>(g.node_counts[t]);
    if (static_cast<std::size_t>(g.features[t].rows()) != n) {
      throw ValidationError("feature rows do not match node count for type '" + g.node_types[t] + "'");
    }
    table.keys.resize(n);
    for (std::size_t v = 0; v < n; ++v) table.keys[v] = std::to_string(v + 1);
    for (auto& fk : table.foreign_keys) fk.assign(n, std::string());
    table.attributes = decode_table(g.features[t], codecs.at(t));
  }
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    const auto& et = g.edge_types[e];
    auto& column = db.tables[et.child].foreign_keys[et.fk_slot];
    for (const auto& [c, p] : g.edges[e]) {
      column[static_cast<std::size_t>(c)] = std::to_string(p + 1);
    }
  }
  return db;
}

// ---------------------------------------------------------------------------
// Undirected view used by the diffusion model.

/// Message-passing relation. Every edge type yields two: relation 2e carries
/// messages parent -> child, relation 2e+1 carries them child -> parent.
struct Relation {
  std::size_t edge_type = 0;
  bool reversed = false;  // false: parent -> child messages; true: child -> parent
  std::size_t source = 0;
  std::size_t target = 0;
};

inline std::vector<Relation> relations_of(const std::vector<EdgeType>& edge_types) {
  std::vector<Relation> out;
  for (std::size_t e = 0; e < edge_types.size(); ++e) {
    out.push_back(Relation{e, false, edge_types[e].parent, edge_types[e].child});
    out.push_back(Relation{e, true, edge_types[e].child, edge_types[e].parent});
  }
  return out;
}

/// CSR adjacency of the undirected view: for each relation and each target
/// node, its source neighbours in ascending id order.
class UndirectedView {
 public:
  UndirectedView() = default;

  explicit UndirectedView(const HeteroGraph& g) : relations_(relations_of(g.edge_types)) {
    offsets_.resize(relations_.size());
    neighbors_.resize(relations_.size());
    for (std::size_t r = 0; r < relations_.size(); ++r) {
      const auto& rel = relations_[r];
      const auto n_target = static_cast<std::size_t>(g.node_counts[rel.target]);
      auto& offsets = offsets_[r];
      offsets.assign(n_target + 1, 0);
      for (const auto& [c, p] : g.edges[rel.edge_type]) {
        const NodeId target = rel.reversed ? p : c;
        ++offsets[static_cast<std::size_t>(target) + 1];
      }
      for (std::size_t v = 0; v < n_target; ++v) offsets[v + 1] += offsets[v];
      auto& nbrs = neighbors_[r];
      nbrs.resize(offsets.back());
      std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
      for (const auto& [c, p] : g.edges[rel.edge_type]) {
        const NodeId target = rel.reversed ? p : c;
        const NodeId source = rel.reversed ? c : p;
        nbrs[fill[static_cast<std::size_t>(target)]++] = source;
      }
      for (std::size_t v = 0; v < n_target; ++v) {
        std::sort(nbrs.begin() + static_cast<std::ptrdiff_t>(offsets[v]),
                  nbrs.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]));
      }
    }
  }

  const std::vector<Relation>& relations() const { return relations_; }

  std::span<const NodeId> neighbors(std::size_t relation, NodeId target) const {
    const auto& offsets = offsets_[relation];
    const auto v = static_cast<std::size_t>(target);
    return {neighbors_[relation].data() + offsets[v], offsets[v + 1] - offsets[v]};
  }

 private:
  std::vector<Relation> relations_;
  std::vector<std::vector<std::size_t>> offsets_;
  std::vector<std::vector<NodeId>> neighbors_;
};

/// K-hop neighbourhood of `center` as a standalone graph. Local ids are
/// ordered by global id within each type; `global_ids` maps them back.
struct Subgraph {
  HeteroGraph graph;
  std::vector<std::vector<NodeId>> global_ids;  // [type][local id]
  NodeRef center;                               // local reference
  int hops = 0;
};

struct SubgraphOptions {
  int hops = 1;
  /// Maximum neighbours kept per (node, relation) during expansion; unset
  /// keeps everything and yields the induced subgraph.
  std::optional<int> neighbor_cap;
};

/// Breadth-first expansion over the undirected view. Without a neighbour
/// cap the result is the subgraph induced by all nodes within `hops`; with a
/// cap, neighbours are sampled uniformly without replacement from `rng` and
/// only traversed edges are kept.
inline Subgraph k_hop_subgraph(const HeteroGraph& g, const UndirectedView& view, NodeRef center,
                               const SubgraphOptions& options, Rng* rng = nullptr) {
  if (center.type >= g.num_types() || center.id < 0 || center.id >= g.node_counts[center.type]) {
    throw ValidationError("subgraph center out of range");
  }
  if (options.hops < 0) throw ValidationError("hop count must be non-negative");
  if (options.neighbor_cap && *options.neighbor_cap < 1) {
    throw ValidationError("neighbor cap must be at least 1");
  }
  if (options.neighbor_cap && rng == nullptr) {
    throw ValidationError("neighbor sampling needs a random source");
  }

  const std::size_t types = g.num_types();
  std::vector<std::vector<NodeId>> members(types);
  std::vector<std::unordered_set<NodeId>> seen(types);
  members[center.type].push_back(center.id);
  seen[center.type].insert(center.id);
  std::vector<NodeRef> frontier{center};
  // (relation, target, source) pairs traversed while sampling.
  std::vector<std::tuple<std::size_t, NodeId, NodeId>> traversed;

  std::vector<NodeId> scratch;
  for (int hop = 0; hop < options.hops && !frontier.empty(); ++hop) {
    std::vector<NodeRef> next;
    for (const NodeRef& node : frontier) {
      for (std::size_t r = 0; r < view.relations().size(); ++r) {
        const auto& rel = view.relations()[r];
        if (rel.target != node.type) continue;
        auto nbrs = view.neighbors(r, node.id);
        scratch.assign(nbrs.begin(), nbrs.end());
        if (options.neighbor_cap && scratch.size() > static_cast<std::size_t>(*options.neighbor_cap)) {
          // Partial Fisher-Yates: the first `cap` entries are a uniform sample.
          const auto cap = static_cast<std::size_t>(*options.neighbor_cap);
          for (std::size_t i = 0; i < cap; ++i) {
            std::swap(scratch[i], scratch[i + rng->below(scratch.size() - i)]);
          }
          scratch.resize(cap);
        }
        for (NodeId w : scratch) {
          if (options.neighbor_cap) traversed.emplace_back(r, node.id, w);
          if (seen[rel.source].insert(w).second) {
            members[rel.source].push_back(w);
            next.push_back(NodeRef{rel.source, w});
          }
        }
      }
    }
    frontier = std::move(next);
  }

  Subgraph sub;
  sub.hops = options.hops;
  for (auto& ids : members) std::sort(ids.begin(), ids.end());
  sub.global_ids = members;
  sub.graph.node_types = g.node_types;
  sub.graph.edge_types = g.edge_types;
  sub.graph.edges.resize(g.edge_types.size());
  sub.graph.node_counts.resize(types);
  for (std::size_t t = 0; t < types; ++t) sub.graph.node_counts[t] = static_cast<NodeId>(members[t].size());

  auto local = [&](std::size_t type, NodeId id) -> NodeId {
    const auto& ids = sub.global_ids[type];
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return -1;
    return static_cast<NodeId>(it - ids.begin());
  };
  sub.center = NodeRef{center.type, local(center.type, center.id)};

  if (!options.neighbor_cap) {
    for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
      const auto& et = g.edge_types[e];
      // Walk the children included in the subgraph and keep their parent
      // edge when the parent is included too.
      const std::size_t forward = 2 * e;  // parent -> child relation: targets are children
      for (NodeId c : sub.global_ids[et.child]) {
        for (NodeId p : view.neighbors(forward, c)) {
          const NodeId lp = local(et.parent, p);
          if (lp >= 0) sub.graph.edges[e].emplace_back(local(et.child, c), lp);
        }
      }
    }
  } else {
    for (const auto& [r, target, source] : traversed) {
      const auto& rel = view.relations()[r];
      const NodeId child = rel.reversed ? source : target;
      const NodeId parent = rel.reversed ? target : source;
      sub.graph.edges[rel.edge_type].emplace_back(local(g.edge_types[rel.edge_type].child, child),
                                                  local(g.edge_types[rel.edge_type].parent, parent));
    }
    for (auto& edges : sub.graph.edges) {
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
  }

  if (g.has_features()) {
    sub.graph.features.resize(types);
    for (std::size_t t = 0; t < types; ++t) {
      const auto& src = g.features[t];
      Matrix& dst = sub.graph.features[t];
      dst.resize(static_cast<Eigen::Index>(members[t].size()), src.cols());
      for (std::size_t i = 0; i < members[t].size(); ++i) {
        dst.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(sub.global_ids[t][i]));
      }
    }
  }
  return sub;
}

}  // namespace relsynth
