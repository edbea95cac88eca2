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

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "relsynth/error.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/random.hpp"
#include "relsynth/schema.hpp"
#include "relsynth/stats.hpp"

namespace relsynth {

/// Empirical indegree distributions per edge type plus the real sizes of
/// the root tables.
struct DegreeModel {
  std::vector<std::map<std::int64_t, double>> indegree_pmf;  // [edge type]
  std::vector<NodeId> root_counts;                           // [node type], 0 for non-roots
  double scale = 1.0;

  bool operator==(const DegreeModel&) const = default;
};

/// Indegree of every parent node for edge type `e`, zeros included.
inline std::vector<std::int64_t> indegrees(const HeteroGraph& g, std::size_t e) {
  std::vector<std::int64_t> deg(static_cast<std::size_t>(g.node_counts[g.edge_types[e].parent]), 0);
  for (const auto& [c, p] : g.edges[e]) ++deg[static_cast<std::size_t>(p)];
  return deg;
}

inline DegreeModel fit_degree_model(const HeteroGraph& g, const DatabaseSchema& schema) {
  DegreeModel model;
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    std::map<std::int64_t, double> pmf;
    const auto deg = indegrees(g, e);
    for (auto d : deg) pmf[d] += 1.0;
    for (auto& [d, p] : pmf) p /= static_cast<double>(deg.size());
    model.indegree_pmf.push_back(std::move(pmf));
  }
  model.root_counts.assign(g.num_types(), 0);
  for (std::size_t t : root_tables(schema)) model.root_counts[t] = g.node_counts[t];
  return model;
}

namespace detail {

constexpr std::uint64_t kIndegreeStream = 0x1d;
constexpr std::uint64_t kMergeStream = 0x3e;

class PmfSampler {
 public:
  explicit PmfSampler(const std::map<std::int64_t, double>& pmf) {
    double total = 0.0;
    for (const auto& [value, p] : pmf) {
      total += p;
      values_.push_back(value);
      cumulative_.push_back(total);
    }
  }

  std::int64_t operator()(Rng& rng) const {
    if (values_.empty()) return 0;
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto i = std::min(static_cast<std::size_t>(it - cumulative_.begin()), values_.size() - 1);
    return values_[i];
  }

 private:
  std::vector<std::int64_t> values_;
  std::vector<double> cumulative_;
};

}  // namespace detail

/// Samples a featureless graph level by level from the roots.
///
/// Every parent node draws an indegree per incoming edge type from its own
/// random stream (keyed by seed, edge type and node id) and spawns that many
/// child stubs. A child table with one foreign key turns each stub into a
/// node. With several foreign keys the per-edge-type stub pools are shuffled
/// and zipped in declaration order, which is a uniform random matching;
/// surplus stubs of the longer pools are dropped because they cannot carry a
/// complete set of foreign keys.
inline HeteroGraph sample_structure(const DegreeModel& model, const DatabaseSchema& schema,
                                    std::uint64_t seed) {
  HeteroGraph g = graph_skeleton(schema);
  if (model.indegree_pmf.size() != g.edge_types.size() ||
      model.root_counts.size() != g.num_types()) {
    throw ValidationError("degree model does not match the schema");
  }
  if (!(model.scale > 0.0)) throw ValidationError("structure scale must be positive");
  const auto order = topological_order(schema);
  for (std::size_t t : order) {
    const auto links = schema.links_from(t);
    if (links.empty()) {
      g.node_counts[t] = static_cast<NodeId>(
          std::floor(model.scale * static_cast<double>(model.root_counts[t]) + 0.5));
      continue;
    }
    std::vector<std::vector<NodeId>> pools;
    for (std::size_t e : links) {
      const detail::PmfSampler draw(model.indegree_pmf[e]);
      const std::size_t parent = g.edge_types[e].parent;
      std::vector<NodeId> pool;
      for (NodeId p = 0; p < g.node_counts[parent]; ++p) {
        Rng rng(mix_seed(seed, {detail::kIndegreeStream, e, static_cast<std::uint64_t>(p)}));
        const auto k = draw(rng);
        pool.insert(pool.end(), static_cast<std::size_t>(k), p);
      }
      pools.push_back(std::move(pool));
    }
    std::size_t count = pools.front().size();
    if (pools.size() > 1) {
      for (std::size_t i = 0; i < pools.size(); ++i) {
        Rng rng(mix_seed(seed, {detail::kMergeStream, t, links[i]}));
        rng.shuffle(std::span<NodeId>(pools[i]));
        count = std::min(count, pools[i].size());
      }
    }
    g.node_counts[t] = static_cast<NodeId>(count);
    for (std::size_t i = 0; i < links.size(); ++i) {
      auto& edges = g.edges[links[i]];
      edges.reserve(count);
      for (std::size_t v = 0; v < count; ++v) edges.emplace_back(static_cast<NodeId>(v), pools[i][v]);
    }
  }
  return g;
}

/// Per edge type KS complement between real and sampled indegree
/// distributions.
inline std::vector<double> cardinality_check(const HeteroGraph& real, const HeteroGraph& synth) {
  if (real.edge_types != synth.edge_types) throw ValidationError("graphs have different edge types");
  std::vector<double> scores;
  for (std::size_t e = 0; e < real.edge_types.size(); ++e) {
    auto to_double = [](const std::vector<std::int64_t>& v) {
      return std::vector<double>(v.begin(), v.end());
    };
    const auto a = to_double(indegrees(real, e));
    const auto b = to_double(indegrees(synth, e));
    if (a.empty() || b.empty()) {
      scores.push_back(a.empty() && b.empty() ? 100.0 : 0.0);
    } else {
      scores.push_back(stats::ks_complement(a, b));
    }
  }
  return scores;
}

inline nlohmann::json degree_model_to_json(const DegreeModel& model, const DatabaseSchema& schema) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < model.indegree_pmf.size(); ++e) {
    const auto& link = schema.links().at(e);
    nlohmann::json pmf = nlohmann::json::object();
    for (const auto& [d, p] : model.indegree_pmf[e]) pmf[std::to_string(d)] = p;
    edges.push_back({{"child", link.child_table},
                     {"fk_column", link.fk_column},
                     {"parent", link.parent_table},
                     {"pmf", std::move(pmf)}});
  }
  nlohmann::json roots = nlohmann::json::object();
  for (std::size_t t : root_tables(schema)) roots[schema.table(t).name] = model.root_counts.at(t);
  return {{"scale", model.scale}, {"root_counts", std::move(roots)}, {"edge_types", std::move(edges)}};
}

inline DegreeModel degree_model_from_json(const nlohmann::json& j, const DatabaseSchema& schema) {
  DegreeModel model;
  model.scale = j.at("scale").get<double>();
  model.root_counts.assign(schema.tables().size(), 0);
  for (const auto& [name, count] : j.at("root_counts").items()) {
    model.root_counts[schema.table_index(name)] = count.get<NodeId>();
  }
  const auto& edges = j.at("edge_types");
  if (edges.size() != schema.links().size()) throw ValidationError("degree model does not match the schema");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& link = schema.links()[e];
    if (edges[e].at("child") != link.child_table || edges[e].at("fk_column") != link.fk_column) {
      throw ValidationError("degree model edge type " + std::to_string(e) + " does not match the schema");
    }
    std::map<std::int64_t, double> pmf;
    for (const auto& [d, p] : edges[e].at("pmf").items()) pmf[std::stoll(d)] = p.get<double>();
    model.indegree_pmf.push_back(std::move(pmf));
  }
  return model;
}

}  // namespace relsynth
