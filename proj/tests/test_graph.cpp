#include <gtest/gtest.h>

#include <set>

#include "relsynth/codec.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/toy.hpp"

using namespace relsynth;

namespace {

Database households(const std::vector<int>& sizes) {
  Database db = empty_database(toy::household_schema());
  int person = 0;
  for (std::size_t h = 0; h < sizes.size(); ++h) {
    auto& hh = db.tables[0];
    hh.keys.push_back(std::to_string(h + 1));
    hh.attributes[0].labels.push_back(h % 2 ? "north" : "south");
    hh.attributes[1].numbers.push_back(1000.0 * static_cast<double>(h));
    hh.attributes[2].numbers.push_back(86400.0 * static_cast<double>(h));
    for (int i = 0; i < sizes[h]; ++i) {
      auto& p = db.tables[1];
      p.keys.push_back("p" + std::to_string(person++));
      p.foreign_keys[0].push_back(std::to_string(h + 1));
      p.attributes[0].numbers.push_back(20.0 + person);
      p.attributes[1].labels.push_back(person % 3 ? "yes" : "no");
    }
  }
  return db;
}

HeteroGraph graph_of(const Database& db) { return rdb_to_graph(db, fit_codecs(db)); }

}  // namespace

TEST(RdbToGraph, HouseholdCounts) {
  const auto g = graph_of(households({2, 1, 2}));
  ASSERT_EQ(g.num_types(), 2u);
  EXPECT_EQ(g.node_counts[0], 3);
  EXPECT_EQ(g.node_counts[1], 5);
  ASSERT_EQ(g.edge_types.size(), 1u);
  EXPECT_EQ(g.edge_types[0].fk_column, "household_id");
  EXPECT_EQ(g.edges[0].size(), 5u);
  EXPECT_EQ(g.features[0].cols(), 3);
  EXPECT_EQ(g.features[1].cols(), 2);
}

TEST(RdbToGraph, TwoForeignKeysGiveTwoEdgeTypes) {
  const DatabaseSchema schema({
      TableSchema{"a", {toy::pk("id")}},
      TableSchema{"b", {toy::pk("id")}},
      TableSchema{"c", {toy::pk("id"), toy::fk("a_id", "a"), toy::fk("b_id", "b")}},
  });
  Database db = empty_database(schema);
  db.tables[0].keys = {"x", "y"};
  db.tables[1].keys = {"u"};
  db.tables[2].keys = {"1", "2", "3", "4"};
  db.tables[2].foreign_keys = {{"x", "y", "x", "y"}, {"u", "u", "u", "u"}};
  const auto g = graph_of(db);
  ASSERT_EQ(g.edge_types.size(), 2u);
  EXPECT_EQ(g.edges[0].size() + g.edges[1].size(), 8u);
  EXPECT_EQ(g.features[2].cols(), 0);
}

TEST(RdbToGraph, EmptyChildTable) {
  const auto g = graph_of(households({0, 0}));
  EXPECT_EQ(g.node_counts[0], 2);
  EXPECT_EQ(g.node_counts[1], 0);
  EXPECT_TRUE(g.edges[0].empty());
}

TEST(GraphToRdb, RoundTripIsFaithful) {
  const auto db = households({3, 0, 1, 2});
  const auto codecs = fit_codecs(db);
  const auto back = graph_to_rdb(rdb_to_graph(db, codecs), db.schema, codecs);
  EXPECT_TRUE(equivalent_up_to_keys(db, back));
  EXPECT_EQ(graph_to_rdb(rdb_to_graph(back, codecs), db.schema, codecs), back);
}

TEST(GraphToRdb, MissingParentEdgeIsAnError) {
  const auto db = households({2, 2});
  const auto codecs = fit_codecs(db);
  auto g = rdb_to_graph(db, codecs);
  g.edges[0].pop_back();
  try {
    graph_to_rdb(g, db.schema, codecs);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("incomplete foreign keys"), std::string::npos);
  }
}

TEST(UndirectedView, EveryEdgeAppearsBothWays) {
  const auto g = graph_of(toy::chain_database(5, 2));
  const UndirectedView view(g);
  ASSERT_EQ(view.relations().size(), 2 * g.edge_types.size());
  for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
    for (const auto& [c, p] : g.edges[e]) {
      bool up = false, down = false;
      for (std::size_t r = 0; r < view.relations().size(); ++r) {
        const auto& rel = view.relations()[r];
        if (rel.edge_type != e) continue;
        if (rel.target == g.edge_types[e].child)
          for (NodeId w : view.neighbors(r, c)) up |= w == p;
        else
          for (NodeId w : view.neighbors(r, p)) down |= w == c;
      }
      EXPECT_TRUE(up && down);
    }
  }
}

TEST(KHopSubgraph, ZeroHopsIsTheCenterAlone) {
  const auto g = graph_of(households({2, 3}));
  const UndirectedView view(g);
  const auto sub = k_hop_subgraph(g, view, {1, 3}, {0, std::nullopt});
  EXPECT_EQ(sub.graph.total_nodes(), 1);
  EXPECT_TRUE(sub.graph.edges[0].empty());
  EXPECT_EQ(sub.global_ids[1], std::vector<NodeId>{3});
  EXPECT_EQ(sub.center, (NodeRef{1, 0}));
  EXPECT_EQ(sub.graph.features[1].row(0), g.features[1].row(3));
}

TEST(KHopSubgraph, HouseholdWithTwoPersons) {
  const auto g = graph_of(households({2, 3}));
  const UndirectedView view(g);
  const auto sub = k_hop_subgraph(g, view, {0, 0}, {1, std::nullopt});
  EXPECT_EQ(sub.graph.total_nodes(), 3);
  EXPECT_EQ(sub.graph.edges[0].size(), 2u);
}

TEST(KHopSubgraph, ChainReachesGrandparentInTwoHops) {
  const auto db = toy::chain_database(3, 9);
  const auto g = graph_of(db);
  const UndirectedView view(g);
  const std::size_t district = db.schema.table_index("district");
  const std::size_t tx = db.schema.table_index("transaction");
  const auto one = k_hop_subgraph(g, view, {tx, 0}, {1, std::nullopt});
  const auto two = k_hop_subgraph(g, view, {tx, 0}, {2, std::nullopt});
  EXPECT_EQ(one.graph.node_counts[district], 0);
  EXPECT_EQ(two.graph.node_counts[district], 1);
}

TEST(KHopSubgraph, MonotoneInHopsAndInducedEdges) {
  const auto g = graph_of(toy::chain_database(6, 4));
  const UndirectedView view(g);
  for (NodeId v = 0; v < g.node_counts[1]; ++v) {
    std::vector<std::vector<NodeId>> prev;
    for (int k = 0; k <= 4; ++k) {
      const auto sub = k_hop_subgraph(g, view, {1, v}, {k, std::nullopt});
      if (!prev.empty()) {
        for (std::size_t t = 0; t < g.num_types(); ++t) {
          EXPECT_TRUE(std::includes(sub.global_ids[t].begin(), sub.global_ids[t].end(), prev[t].begin(), prev[t].end()));
        }
      }
      // induced: every original edge with both endpoints inside is present
      for (std::size_t e = 0; e < g.edge_types.size(); ++e) {
        const auto& et = g.edge_types[e];
        std::set<std::pair<NodeId, NodeId>> inside;
        for (const auto& [c, p] : sub.graph.edges[e]) inside.emplace(sub.global_ids[et.child][c], sub.global_ids[et.parent][p]);
        for (const auto& [c, p] : g.edges[e]) {
          const bool both = std::binary_search(sub.global_ids[et.child].begin(), sub.global_ids[et.child].end(), c) &&
                            std::binary_search(sub.global_ids[et.parent].begin(), sub.global_ids[et.parent].end(), p);
          EXPECT_EQ(both, inside.count({c, p}) == 1);
        }
      }
      prev = sub.global_ids;
    }
  }
}

TEST(KHopSubgraph, NeighborCapLimitsFanOut) {
  const auto g = graph_of(households({9, 1}));
  const UndirectedView view(g);
  Rng rng(3);
  const auto sub = k_hop_subgraph(g, view, {0, 0}, {1, 4}, &rng);
  EXPECT_EQ(sub.graph.node_counts[1], 4);
  EXPECT_EQ(sub.graph.edges[0].size(), 4u);
  // uniform without replacement: every person eventually gets picked
  std::set<NodeId> picked;
  for (int i = 0; i < 200; ++i) {
    const auto s = k_hop_subgraph(g, view, {0, 0}, {1, 4}, &rng);
    picked.insert(s.global_ids[1].begin(), s.global_ids[1].end());
  }
  EXPECT_EQ(picked.size(), 9u);
}

TEST(KHopSubgraph, Errors) {
  const auto g = graph_of(households({1}));
  const UndirectedView view(g);
  EXPECT_THROW(k_hop_subgraph(g, view, {0, 5}, {1, std::nullopt}), ValidationError);
  EXPECT_THROW(k_hop_subgraph(g, view, {2, 0}, {1, std::nullopt}), ValidationError);
  EXPECT_THROW(k_hop_subgraph(g, view, {0, 0}, {-1, std::nullopt}), ValidationError);
  Rng rng(1);
  EXPECT_THROW(k_hop_subgraph(g, view, {0, 0}, {1, 0}, &rng), ValidationError);
}
