#include <gtest/gtest.h>

#include "oracle.hpp"
#include "perturb.hpp"
#include "relsynth/metrics.hpp"
#include "relsynth/toy.hpp"

using namespace relsynth;

namespace {

AttributeColumn num(std::vector<double> v) { return {ColumnKind::kNumerical, std::move(v), {}}; }
AttributeColumn cat(std::vector<std::string> v) { return {ColumnKind::kCategorical, {}, std::move(v)}; }

void expect_report_is_perfect(const metrics::FidelityReport& r) {
  for (const auto* m : {&r.cardinality, &r.column_shapes, &r.intra_table_trends}) {
    if (m->overall) EXPECT_DOUBLE_EQ(*m->overall, 100.0);
  }
  for (const auto& [k, m] : r.inter_table_trends) EXPECT_DOUBLE_EQ(*m.overall, 100.0) << "k=" << k;
}

void expect_matches_oracle(const Database& real, const Database& synth) {
  const auto report = metrics::evaluate(real, synth);
  auto same = [](const std::optional<double>& lib, const std::optional<double>& ref, const char* what) {
    ASSERT_EQ(lib.has_value(), ref.has_value()) << what;
    if (lib) EXPECT_NEAR(*lib, *ref, 1e-9) << what;
  };
  same(report.cardinality.overall, oracle::cardinality(real, synth), "cardinality");
  same(report.column_shapes.overall, oracle::column_shapes(real, synth), "column shapes");
  same(report.intra_table_trends.overall, oracle::intra_table(real, synth), "intra");
  for (int k = 1; k <= 4; ++k) {
    const auto ref = oracle::inter_table(real, synth, k);
    const auto it = report.inter_table_trends.find(k);
    same(it == report.inter_table_trends.end() ? std::nullopt : it->second.overall, ref, "inter");
  }
}

}  // namespace

TEST(PairTrend, PearsonExtremes) {
  const auto x = num({1, 2, 3, 4});
  const auto up = num({1, 2, 3, 4});
  const auto down = num({4, 3, 2, 1});
  EXPECT_DOUBLE_EQ(metrics::pair_trend_score(x, up, x, down).score, 0.0);
  EXPECT_DOUBLE_EQ(metrics::pair_trend_score(x, up, x, up).score, 100.0);
}

TEST(PairTrend, ConstantColumnIsDegenerate) {
  const auto x = num({1, 2, 3, 4});
  const auto flat = num({2, 2, 2, 2});
  const auto s = metrics::pair_trend_score(x, x, x, flat);
  EXPECT_TRUE(s.degenerate);
  EXPECT_DOUBLE_EQ(s.score, 50.0);  // rho 1 vs rho := 0
}

TEST(PairTrend, ConstantColumnWithInexactMean) {
  // the mean of three 0.1s is not exactly 0.1
  const auto x = num({1, 2, 3});
  const auto flat = num({0.1, 0.1, 0.1});
  const auto s = metrics::pair_trend_score(x, x, flat, x);
  EXPECT_TRUE(s.degenerate);
  EXPECT_DOUBLE_EQ(s.score, 50.0);
}

TEST(PairTrend, SixRowCategoricalPair) {
  // real cells: (a,x) x2, (a,y), (b,y) x3 ; synth cells: (a,x), (a,y) x2, (b,x), (b,y) x2
  const auto ra = cat({"a", "a", "a", "b", "b", "b"});
  const auto rb = cat({"x", "x", "y", "y", "y", "y"});
  const auto sa = cat({"a", "a", "a", "b", "b", "b"});
  const auto sb = cat({"x", "y", "y", "x", "y", "y"});
  // |2-1| + |1-2| + |0-1| + |3-2| = 4 over 6 rows -> TV = 1/3
  EXPECT_NEAR(metrics::pair_trend_score(ra, rb, sa, sb).score, 100.0 * (1.0 - 1.0 / 3.0), 1e-12);
}

TEST(PairTrend, MixedPairUsesRealDeciles) {
  std::vector<double> xs;
  std::vector<std::string> ls;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(i);
    ls.push_back(i < 20 ? "lo" : "hi");
  }
  const auto real_x = num(xs);
  const auto real_l = cat(ls);
  EXPECT_DOUBLE_EQ(metrics::pair_trend_score(real_x, real_l, real_x, real_l).score, 100.0);
  // shifting synth values far right puts them all in the top bin
  std::vector<double> shifted = xs;
  for (auto& v : shifted) v += 1000;
  const double s = metrics::pair_trend_score(real_x, real_l, num(shifted), real_l).score;
  EXPECT_NEAR(s, oracle::pair_score(real_x, real_l, num(shifted), real_l), 1e-12);
  EXPECT_LT(s, 20.0);
}

TEST(ColumnShapes, SwappedCategoriesScoreHalf) {
  auto real = toy::household_database(5, 1);
  auto synth = real;
  // keep only region (categorical) and income (numerical): blank the others
  for (auto& l : synth.tables[0].attributes[0].labels) l = "elsewhere";
  const auto cs = metrics::column_shapes(real, synth);
  ASSERT_EQ(cs.breakdown.size(), 5u);
  EXPECT_DOUBLE_EQ(cs.breakdown[0].score, 0.0);
  EXPECT_DOUBLE_EQ(cs.breakdown[1].score, 100.0);
  EXPECT_EQ(cs.breakdown[0].label, "household.region");
}

TEST(Cardinality, TwoVersusThreeChildren) {
  const auto two = toy::household_database(10, 1, {2});
  const auto three = toy::household_database(10, 1, {3});
  EXPECT_DOUBLE_EQ(*metrics::cardinality(two, two).overall, 100.0);
  EXPECT_DOUBLE_EQ(*metrics::cardinality(two, three).overall, 0.0);
  EXPECT_EQ(metrics::cardinality(two, two).breakdown[0].label, "person.household_id -> household");
}

TEST(IntraTable, SingleAttributeTablesAreAbsent) {
  const DatabaseSchema schema({TableSchema{"t", {toy::pk("id"), toy::attr("x", ColumnKind::kNumerical)}}});
  Database db = empty_database(schema);
  db.tables[0].keys = {"1", "2"};
  db.tables[0].attributes[0].numbers = {1, 2};
  const auto r = metrics::intra_table_trends(db, db);
  EXPECT_TRUE(r.breakdown.empty());
  EXPECT_FALSE(r.overall);
  EXPECT_TRUE(metrics::evaluate(db, db).inter_table_trends.empty());
}

TEST(InterTable, HouseholdReshuffleDropsBelowHundred) {
  const auto real = toy::household_database(60, 3);
  auto synth = real;
  Rng rng(5);
  rng.shuffle(std::span<std::string>(synth.tables[1].foreign_keys[0]));
  EXPECT_DOUBLE_EQ(*metrics::inter_table_trends(real, real, 1).overall, 100.0);
  EXPECT_LT(*metrics::inter_table_trends(real, synth, 1).overall, 100.0);
  EXPECT_FALSE(metrics::inter_table_trends(real, real, 2).overall);
}

TEST(InterTable, ChainTwoHopMatchesJoinOracle) {
  const auto real = toy::chain_database(3, 4);
  Rng rng(8);
  const auto synth = testutil::perturb(real, rng);
  ASSERT_LE(real.tables[2].rows(), 100u);
  const auto lib = metrics::inter_table_trends(real, synth, 2);
  ASSERT_TRUE(lib.overall);
  EXPECT_NEAR(*lib.overall, *oracle::inter_table(real, synth, 2), 1e-9);
  EXPECT_EQ(lib.breakdown.size(), 4u);
}

TEST(InterTable, ParallelPathsAreAveraged) {
  // c references a twice: two shortest 1-hop paths between c and a
  const DatabaseSchema schema({
      TableSchema{"a", {toy::pk("id"), toy::attr("x", ColumnKind::kNumerical)}},
      TableSchema{"c", {toy::pk("id"), toy::fk("p", "a"), toy::fk("q", "a"), toy::attr("y", ColumnKind::kNumerical)}},
  });
  Database db = empty_database(schema);
  db.tables[0].keys = {"1", "2", "3"};
  db.tables[0].attributes[0].numbers = {1, 2, 3};
  db.tables[1].keys = {"u", "v", "w", "z"};
  db.tables[1].foreign_keys = {{"1", "2", "3", "3"}, {"3", "1", "2", "1"}};
  db.tables[1].attributes[0].numbers = {1, 2, 3, 5};
  auto synth = db;
  synth.tables[1].attributes[0].numbers = {5, 1, 2, 3};
  const auto lib = metrics::inter_table_trends(db, synth, 1);
  ASSERT_EQ(lib.breakdown.size(), 1u);
  EXPECT_NEAR(*lib.overall, *oracle::inter_table(db, synth, 1), 1e-12);
}

TEST(Metrics, OracleAgreementOnRandomDatabases) {
  Rng rng(2024);
  for (int i = 0; i < 25; ++i) {
    const auto real = toy::random_database(rng, 60);
    const auto synth = testutil::perturb(real, rng, 0.4);
    expect_matches_oracle(real, synth);
    expect_report_is_perfect(metrics::evaluate(real, real));
  }
}

TEST(Metrics, RowOrderInvariance) {
  const auto real = toy::chain_database(5, 2);
  Rng rng(3);
  const auto synth = testutil::perturb(real, rng);
  const auto shuffled = testutil::perturb(synth, rng, 0.0);
  const auto a = metrics::evaluate(real, synth);
  const auto b = metrics::evaluate(real, shuffled);
  auto close = [](const metrics::MetricResult& x, const metrics::MetricResult& y) {
    ASSERT_EQ(x.breakdown.size(), y.breakdown.size());
    for (std::size_t i = 0; i < x.breakdown.size(); ++i) {
      EXPECT_EQ(x.breakdown[i].label, y.breakdown[i].label);
      EXPECT_NEAR(x.breakdown[i].score, y.breakdown[i].score, 1e-9);
    }
  };
  close(a.cardinality, b.cardinality);
  close(a.column_shapes, b.column_shapes);
  close(a.intra_table_trends, b.intra_table_trends);
  ASSERT_EQ(a.inter_table_trends.size(), b.inter_table_trends.size());
  for (const auto& [k, m] : a.inter_table_trends) close(m, b.inter_table_trends.at(k));
}

TEST(Metrics, SchemaMismatchIsAnError) {
  EXPECT_THROW(metrics::evaluate(toy::household_database(3, 1), toy::chain_database(2, 1)), ValidationError);
}

TEST(Metrics, JsonAndTextRendering) {
  const auto db = toy::chain_database(4, 1);
  const auto report = metrics::evaluate(db, db);
  const auto j = metrics::to_json(report);
  EXPECT_EQ(j["cardinality"]["overall"].get<double>(), 100.0);
  EXPECT_TRUE(j["inter_table_trends"].contains("2"));
  EXPECT_EQ(j["column_shapes"]["breakdown"].size(), 6u);
  const auto text = metrics::to_text(report);
  EXPECT_NE(text.find("Inter-Table Trends (1-hop)"), std::string::npos);
  EXPECT_NE(text.find("Intra-Table Trends"), std::string::npos);
}
