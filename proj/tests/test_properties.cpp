// Randomized checks over many generated schemas and databases.

#include <gtest/gtest.h>

#include "perturb.hpp"
#include "relsynth/codec.hpp"
#include "relsynth/metrics.hpp"
#include "relsynth/structure.hpp"
#include "relsynth/toy.hpp"
#include "test_util.hpp"

using namespace relsynth;

namespace {

constexpr int kDatabases = 50;

Database nth_database(int i, std::size_t max_rows = 200) {
  Rng rng(mix_seed(2024, {static_cast<std::uint64_t>(i)}));
  return toy::random_database(rng, max_rows);
}

}  // namespace

TEST(Properties, GraphRoundTripPreservesEverythingButKeys) {
  for (int i = 0; i < kDatabases; ++i) {
    const auto db = nth_database(i);
    const auto codecs = fit_codecs(db);
    const auto g = rdb_to_graph(db, codecs);
    check_graph(g, true);
    const auto back = graph_to_rdb(g, db.schema, codecs);
    check_integrity(back);
    EXPECT_TRUE(equivalent_up_to_keys(db, back)) << "database " << i;
    // the only freedom is the key spelling: a second trip is a fixed point
    EXPECT_TRUE(graph_to_rdb(rdb_to_graph(back, codecs), db.schema, codecs) == back) << "database " << i;
  }
}

TEST(Properties, ExportThenLoadIsIdentity) {
  const auto dir = testutil::scratch_dir();
  for (int i = 0; i < kDatabases; ++i) {
    const auto db = nth_database(i);
    const auto sub = dir / std::to_string(i);
    export_database(db, sub);
    testutil::write_file(sub / "schema.json", schema_to_json(db.schema).dump());
    const auto schema = load_schema(sub / "schema.json");
    EXPECT_EQ(schema_hash(schema), schema_hash(db.schema));
    EXPECT_TRUE(load_database(schema, sub) == db) << "database " << i;
  }
}

TEST(Properties, SampledStructuresAreComplete) {
  for (int i = 0; i < kDatabases; ++i) {
    const auto db = nth_database(i);
    const auto g = rdb_to_graph(db, fit_codecs(db));
    const auto model = fit_degree_model(g, db.schema);
    for (double scale : {0.5, 1.0, 2.0}) {
      auto m = model;
      m.scale = scale;
      const auto s = sample_structure(m, db.schema, mix_seed(i, {17}));
      EXPECT_NO_THROW(check_graph(s, true)) << "database " << i;
      for (std::size_t r : root_tables(db.schema)) {
        EXPECT_EQ(s.node_counts[r], static_cast<NodeId>(std::floor(scale * static_cast<double>(g.node_counts[r]) + 0.5)));
      }
      // single-parent children keep every drawn stub, so each sampled
      // indegree lies in the real support
      for (std::size_t e = 0; e < s.edge_types.size(); ++e) {
        if (db.schema.links_from(s.edge_types[e].child).size() > 1) continue;
        for (auto d : indegrees(s, e)) {
          EXPECT_TRUE(model.indegree_pmf[e].count(d)) << "database " << i << " degree " << d;
        }
      }
    }
  }
}

TEST(Properties, MetricsAreBoundedAndPerfectOnIdenticalData) {
  for (int i = 0; i < kDatabases; ++i) {
    const auto db = nth_database(i, 60);
    Rng rng(mix_seed(i, {5}));
    const auto other = testutil::perturb(db, rng);
    const auto self = metrics::evaluate(db, db);
    const auto cross = metrics::evaluate(db, other);
    auto each = [](const metrics::FidelityReport& r, auto&& fn) {
      fn(r.cardinality);
      fn(r.column_shapes);
      fn(r.intra_table_trends);
      for (const auto& [k, m] : r.inter_table_trends) fn(m);
    };
    each(self, [&](const metrics::MetricResult& m) {
      for (const auto& e : m.breakdown) EXPECT_NEAR(e.score, 100.0, 1e-9) << "database " << i << " " << e.label;
    });
    each(cross, [&](const metrics::MetricResult& m) {
      for (const auto& e : m.breakdown) {
        EXPECT_GE(e.score, 0.0);
        EXPECT_LE(e.score, 100.0 + 1e-9) << "database " << i << " " << e.label;
      }
    });
  }
}

TEST(Properties, CodecsInvertOnTheirTrainingData) {
  for (int i = 0; i < kDatabases; ++i) {
    const auto db = nth_database(i);
    const auto codecs = fit_codecs(db);
    for (std::size_t t = 0; t < db.tables.size(); ++t) {
      const Matrix x = encode_table(db.tables[t], codecs[t]);
      EXPECT_TRUE(x.allFinite());
      EXPECT_TRUE(decode_table(x, codecs[t]) == db.tables[t].attributes) << "database " << i << " table " << t;
    }
  }
}
