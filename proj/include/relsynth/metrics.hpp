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

#include <cstdio>
#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relsynth/database.hpp"
#include "relsynth/error.hpp"
#include "relsynth/schema.hpp"
#include "relsynth/stats.hpp"

namespace relsynth::metrics {

struct ScoreEntry {
  std::string label;
  double score = 0.0;
  bool degenerate = false;
};

/// One metric family: the mean score plus what it averages. `overall` is
/// empty when nothing was scored (for example, no table has two attributes).
struct MetricResult {
  std::optional<double> overall;
  std::vector<ScoreEntry> breakdown;

  void finish() {
    if (breakdown.empty()) {
      overall.reset();
      return;
    }
    double sum = 0.0;
    for (const auto& e : breakdown) sum += e.score;
    overall = sum / static_cast<double>(breakdown.size());
  }
};

struct FidelityReport {
  MetricResult cardinality;
  MetricResult column_shapes;
  MetricResult intra_table_trends;
  std::map<int, MetricResult> inter_table_trends;  // by hop count k
};

inline double ks_complement(std::span<const double> real, std::span<const double> synth) {
  return stats::ks_complement(real, synth);
}

inline double tv_complement(std::span<const std::string> real, std::span<const std::string> synth) {
  return stats::tv_complement(real, synth);
}

/// Marginal similarity of one column: KS complement for continuous kinds,
/// TV complement for categoricals.
inline ScoreEntry column_score(const AttributeColumn& real, const AttributeColumn& synth) {
  if (real.size() == 0 || synth.size() == 0) {
    return {"", real.size() == synth.size() ? 100.0 : 0.0, true};
  }
  if (is_continuous(real.kind)) return {"", ks_complement(real.numbers, synth.numbers), false};
  return {"", tv_complement(real.labels, synth.labels), false};
}

inline constexpr int kTrendBins = 10;

/// Category labels for a column: categoricals as-is, continuous values as
/// the index of their bin among the real-data deciles.
inline std::vector<std::string> as_categories(const AttributeColumn& column,
                                              const std::vector<double>& edges) {
  if (!is_continuous(column.kind)) return column.labels;
  std::vector<std::string> out;
  out.reserve(column.numbers.size());
  for (double x : column.numbers) {
    const auto bin = std::upper_bound(edges.begin(), edges.end(), x) - edges.begin();
    out.push_back("#" + std::to_string(bin));
  }
  return out;
}

/// Interior decile edges of a sample.
inline std::vector<double> decile_edges(const std::vector<double>& values) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int i = 1; i < kTrendBins; ++i) {
    edges.push_back(stats::quantile_sorted(sorted, static_cast<double>(i) / kTrendBins));
  }
  return edges;
}

/// Correlation similarity of a column pair. Two continuous columns compare
/// Pearson coefficients, (1 - |S - R| / 2) * 100. Otherwise continuous
/// columns are binned at the real deciles and the normalized contingency
/// tables are compared by total variation, (1 - TV) * 100.
inline ScoreEntry pair_trend_score(const AttributeColumn& a_real, const AttributeColumn& b_real,
                                   const AttributeColumn& a_synth, const AttributeColumn& b_synth) {
  if (a_real.size() != b_real.size() || a_synth.size() != b_synth.size()) {
    throw DataError("column pair has misaligned rows");
  }
  if (a_real.size() == 0 || a_synth.size() == 0) {
    return {"", a_real.size() == a_synth.size() ? 100.0 : 0.0, true};
  }
  if (is_continuous(a_real.kind) && is_continuous(b_real.kind)) {
    auto corr = [](const AttributeColumn& a, const AttributeColumn& b) {
      if (a.size() < 2) return stats::Correlation{0.0, true};
      return stats::pearson(a.numbers, b.numbers);
    };
    const auto r = corr(a_real, b_real);
    const auto s = corr(a_synth, b_synth);
    return {"", (1.0 - std::abs(s.rho - r.rho) / 2.0) * 100.0, r.degenerate || s.degenerate};
  }
  const auto edges_a = is_continuous(a_real.kind) ? decile_edges(a_real.numbers) : std::vector<double>{};
  const auto edges_b = is_continuous(b_real.kind) ? decile_edges(b_real.numbers) : std::vector<double>{};
  auto cells = [&](const AttributeColumn& a, const AttributeColumn& b) {
    const auto la = as_categories(a, edges_a);
    const auto lb = as_categories(b, edges_b);
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(la.size());
    for (std::size_t i = 0; i < la.size(); ++i) out.emplace_back(la[i], lb[i]);
    return out;
  };
  const auto real_cells = cells(a_real, b_real);
  const auto synth_cells = cells(a_synth, b_synth);
  const double tv = stats::tv_distance<std::pair<std::string, std::string>>(real_cells, synth_cells);
  return {"", (1.0 - tv) * 100.0, false};
}

// ---------------------------------------------------------------------------

inline void check_same_schema(const Database& real, const Database& synth) {
  if (!(real.schema == synth.schema)) throw ValidationError("real and synthetic schemas differ");
}

inline std::string link_label(const Link& link) {
  return link.child_table + "." + link.fk_column + " -> " + link.parent_table;
}

/// Number of child rows referencing each parent row, per link.
inline std::vector<double> child_counts(const Database& db, const std::vector<std::vector<std::size_t>>& parents,
                                        std::size_t link) {
  const auto& l = db.schema.links()[link];
  std::vector<double> counts(db.tables[l.parent].rows(), 0.0);
  for (std::size_t p : parents[link]) counts[p] += 1.0;
  return counts;
}

inline MetricResult cardinality(const Database& real, const Database& synth) {
  check_same_schema(real, synth);
  const auto rp = resolve_links(real);
  const auto sp = resolve_links(synth);
  MetricResult result;
  for (std::size_t l = 0; l < real.schema.links().size(); ++l) {
    const auto a = child_counts(real, rp, l);
    const auto b = child_counts(synth, sp, l);
    ScoreEntry entry;
    if (a.empty() || b.empty()) {
      entry = {"", a.size() == b.size() ? 100.0 : 0.0, true};
    } else {
      entry = {"", ks_complement(a, b), false};
    }
    entry.label = link_label(real.schema.links()[l]);
    result.breakdown.push_back(entry);
  }
  result.finish();
  return result;
}

inline MetricResult column_shapes(const Database& real, const Database& synth) {
  check_same_schema(real, synth);
  MetricResult result;
  for (std::size_t t = 0; t < real.tables.size(); ++t) {
    const auto& ts = real.schema.table(t);
    for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
      ScoreEntry entry = column_score(real.tables[t].attributes[a], synth.tables[t].attributes[a]);
      entry.label = ts.name + "." + ts.attribute(a).name;
      result.breakdown.push_back(entry);
    }
  }
  result.finish();
  return result;
}

inline MetricResult intra_table_trends(const Database& real, const Database& synth) {
  check_same_schema(real, synth);
  MetricResult result;
  for (std::size_t t = 0; t < real.tables.size(); ++t) {
    const auto& ts = real.schema.table(t);
    const auto& rt = real.tables[t];
    const auto& st = synth.tables[t];
    for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
      for (std::size_t b = a + 1; b < ts.attributes.size(); ++b) {
        ScoreEntry entry = pair_trend_score(rt.attributes[a], rt.attributes[b], st.attributes[a], st.attributes[b]);
        entry.label = ts.name + "." + ts.attribute(a).name + " ~ " + ts.name + "." + ts.attribute(b).name;
        result.breakdown.push_back(entry);
      }
    }
  }
  result.finish();
  return result;
}

// ---------------------------------------------------------------------------
// Join paths between tables.

/// One hop of a join path: follow `link`, either from child to parent
/// (`upward`) or from parent to child.
struct JoinStep {
  std::size_t link = 0;
  bool upward = true;

  bool operator==(const JoinStep&) const = default;
  auto operator<=>(const JoinStep&) const = default;
};

using JoinPath = std::vector<JoinStep>;

/// Shortest-path distances between tables over the undirected link graph;
/// -1 when unreachable.
inline std::vector<std::vector<int>> table_distances(const DatabaseSchema& schema) {
  const std::size_t n = schema.tables().size();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (std::size_t s = 0; s < n; ++s) {
    dist[s][s] = 0;
    std::deque<std::size_t> queue{s};
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (const auto& link : schema.links()) {
        for (auto [a, b] : {std::pair{link.child, link.parent}, std::pair{link.parent, link.child}}) {
          if (a == u && dist[s][b] < 0) {
            dist[s][b] = dist[s][u] + 1;
            queue.push_back(b);
          }
        }
      }
    }
  }
  return dist;
}

inline int max_table_distance(const DatabaseSchema& schema) {
  int best = 0;
  for (const auto& row : table_distances(schema)) {
    for (int d : row) best = std::max(best, d);
  }
  return best;
}

/// Every shortest join path from table `from` to table `to`.
inline std::vector<JoinPath> shortest_paths(const DatabaseSchema& schema, std::size_t from, std::size_t to) {
  const auto dist = table_distances(schema);
  std::vector<JoinPath> out;
  if (dist[from][to] < 0) return out;
  JoinPath path;
  // Depth-first walk that only moves to tables one step closer to `to`.
  std::function<void(std::size_t)> walk = [&](std::size_t u) {
    if (u == to) {
      out.push_back(path);
      return;
    }
    for (std::size_t l = 0; l < schema.links().size(); ++l) {
      const auto& link = schema.links()[l];
      if (link.child == u && dist[link.parent][to] == dist[u][to] - 1) {
        path.push_back({l, true});
        walk(link.parent);
        path.pop_back();
      }
      if (link.parent == u && dist[link.child][to] == dist[u][to] - 1) {
        path.push_back({l, false});
        walk(link.child);
        path.pop_back();
      }
    }
  };
  walk(from);
  return out;
}

/// Inner join along a path: all (row of start table, row of end table)
/// combinations connected by matching keys at every hop.
inline std::vector<std::pair<std::size_t, std::size_t>> join_rows(
    const Database& db, const std::vector<std::vector<std::size_t>>& parents, std::size_t from,
    const JoinPath& path) {
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t r = 0; r < db.tables[from].rows(); ++r) rows.emplace_back(r, r);
  for (const JoinStep& step : path) {
    const auto& link = db.schema.links()[step.link];
    std::vector<std::pair<std::size_t, std::size_t>> next;
    if (step.upward) {
      for (const auto& [start, cur] : rows) next.emplace_back(start, parents[step.link][cur]);
    } else {
      std::vector<std::vector<std::size_t>> children(db.tables[link.parent].rows());
      for (std::size_t c = 0; c < parents[step.link].size(); ++c) children[parents[step.link][c]].push_back(c);
      for (const auto& [start, cur] : rows) {
        for (std::size_t c : children[cur]) next.emplace_back(start, c);
      }
    }
    rows = std::move(next);
  }
  return rows;
}

/// Column-pair trends between tables exactly k hops apart. Each table pair
/// is denormalized along its shortest join paths; when there are several,
/// the pair scores are averaged over the paths. Empty when no table pair is
/// k hops apart.
inline MetricResult inter_table_trends(const Database& real, const Database& synth, int k) {
  check_same_schema(real, synth);
  if (k < 1) throw UsageError("inter-table trends need k >= 1");
  const auto& schema = real.schema;
  const auto dist = table_distances(schema);
  const auto rp = resolve_links(real);
  const auto sp = resolve_links(synth);
  MetricResult result;
  for (std::size_t a = 0; a < schema.tables().size(); ++a) {
    for (std::size_t b = a + 1; b < schema.tables().size(); ++b) {
      if (dist[a][b] != k) continue;
      const auto& ta = schema.table(a);
      const auto& tb = schema.table(b);
      if (ta.attributes.empty() || tb.attributes.empty()) continue;
      const auto paths = shortest_paths(schema, a, b);
      std::vector<ScoreEntry> entries;
      for (std::size_t i = 0; i < ta.attributes.size(); ++i) {
        for (std::size_t j = 0; j < tb.attributes.size(); ++j) {
          entries.push_back({ta.name + "." + ta.attribute(i).name + " ~ " + tb.name + "." + tb.attribute(j).name,
                             0.0, false});
        }
      }
      for (const auto& path : paths) {
        const auto real_rows = join_rows(real, rp, a, path);
        const auto synth_rows = join_rows(synth, sp, a, path);
        auto split = [](const std::vector<std::pair<std::size_t, std::size_t>>& rows) {
          std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
          for (const auto& [x, y] : rows) {
            out.first.push_back(x);
            out.second.push_back(y);
          }
          return out;
        };
        const auto [ra, rb] = split(real_rows);
        const auto [sa, sb] = split(synth_rows);
        std::size_t e = 0;
        for (std::size_t i = 0; i < ta.attributes.size(); ++i) {
          const auto col_ra = real.tables[a].attributes[i].gather(ra);
          const auto col_sa = synth.tables[a].attributes[i].gather(sa);
          for (std::size_t j = 0; j < tb.attributes.size(); ++j, ++e) {
            const auto col_rb = real.tables[b].attributes[j].gather(rb);
            const auto col_sb = synth.tables[b].attributes[j].gather(sb);
            const auto s = pair_trend_score(col_ra, col_rb, col_sa, col_sb);
            entries[e].score += s.score / static_cast<double>(paths.size());
            entries[e].degenerate = entries[e].degenerate || s.degenerate;
          }
        }
      }
      result.breakdown.insert(result.breakdown.end(), entries.begin(), entries.end());
    }
  }
  result.finish();
  return result;
}

struct MetricToggles {
  bool cardinality = true;
  bool column_shapes = true;
  bool intra_table = true;
  bool inter_table = true;

  bool operator==(const MetricToggles&) const = default;
};

inline FidelityReport evaluate(const Database& real, const Database& synth, const MetricToggles& toggles = {}) {
  check_same_schema(real, synth);
  FidelityReport report;
  if (toggles.cardinality) report.cardinality = cardinality(real, synth);
  if (toggles.column_shapes) report.column_shapes = column_shapes(real, synth);
  if (toggles.intra_table) report.intra_table_trends = intra_table_trends(real, synth);
  if (toggles.inter_table) {
    for (int k = 1; k <= max_table_distance(real.schema); ++k) {
      auto r = inter_table_trends(real, synth, k);
      if (r.overall) report.inter_table_trends.emplace(k, std::move(r));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization.

inline nlohmann::json to_json(const MetricResult& m) {
  nlohmann::json breakdown = nlohmann::json::array();
  for (const auto& e : m.breakdown) {
    breakdown.push_back({{"label", e.label}, {"score", e.score}, {"degenerate", e.degenerate}});
  }
  return {{"overall", m.overall ? nlohmann::json(*m.overall) : nlohmann::json(nullptr)},
          {"breakdown", std::move(breakdown)}};
}

inline nlohmann::json to_json(const FidelityReport& r) {
  nlohmann::json inter = nlohmann::json::object();
  for (const auto& [k, m] : r.inter_table_trends) inter[std::to_string(k)] = to_json(m);
  return {{"cardinality", to_json(r.cardinality)},
          {"column_shapes", to_json(r.column_shapes)},
          {"intra_table_trends", to_json(r.intra_table_trends)},
          {"inter_table_trends", std::move(inter)}};
}

/// Plain-text summary, one metric per line.
inline std::string to_text(const FidelityReport& r) {
  std::ostringstream out;
  auto line = [&out](const std::string& name, const MetricResult& m) {
    char buffer[96];
    if (m.overall) {
      std::snprintf(buffer, sizeof(buffer), "%-30s %8.2f\n", name.c_str(), *m.overall);
    } else {
      std::snprintf(buffer, sizeof(buffer), "%-30s %8s\n", name.c_str(), "-");
    }
    out << buffer;
  };
  line("Cardinality", r.cardinality);
  line("Column Shapes", r.column_shapes);
  line("Intra-Table Trends", r.intra_table_trends);
  for (const auto& [k, m] : r.inter_table_trends) {
    line("Inter-Table Trends (" + std::to_string(k) + "-hop)", m);
  }
  return out.str();
}

}  // namespace relsynth::metrics
