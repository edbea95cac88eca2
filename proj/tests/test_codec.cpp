#include <gtest/gtest.h>

#include <cmath>

#include "relsynth/codec.hpp"
#include "relsynth/toy.hpp"

using namespace relsynth;

namespace {

AttributeColumn numbers(std::vector<double> v, ColumnKind kind = ColumnKind::kNumerical) {
  return AttributeColumn{kind, std::move(v), {}};
}
AttributeColumn labels(std::vector<std::string> v) { return AttributeColumn{ColumnKind::kCategorical, {}, std::move(v)}; }

}  // namespace

TEST(ColumnCodec, FirstAppearanceCodes) {
  const auto codec = ColumnCodec::fit(labels({"red", "blue", "red"}));
  EXPECT_EQ(codec.cardinality(), 2u);
  EXPECT_EQ(codec.code("red"), 0u);
  EXPECT_EQ(codec.code("blue"), 1u);
  EXPECT_THROW(codec.code("green"), DataError);
}

TEST(ColumnCodec, ZScoreOfOneTwoThree) {
  const auto codec = ColumnCodec::fit(numbers({1, 2, 3}));
  ASSERT_EQ(codec.transform(), ColumnCodec::Transform::kZScore);
  const double s = std::sqrt(1.5);  // 1 / population sd of {1,2,3}
  EXPECT_NEAR(codec.encode_number(1), -s, 1e-12);
  EXPECT_NEAR(codec.encode_number(2), 0.0, 1e-12);
  EXPECT_NEAR(codec.encode_number(3), s, 1e-12);
  EXPECT_NEAR(codec.encode_number(3), 1.2247, 1e-4);
}

TEST(ColumnCodec, StandardizedLabelCodes) {
  // codes {0,1,0,0}: mean 0.25, sd sqrt(3)/4
  const auto codec = ColumnCodec::fit(labels({"a", "b", "a", "a"}));
  const double sd = std::sqrt(3.0) / 4.0;
  EXPECT_NEAR(codec.encode_label("a"), -0.25 / sd, 1e-12);
  EXPECT_NEAR(codec.encode_label("b"), 0.75 / sd, 1e-12);
}

TEST(ColumnCodec, DecodeRoundsAndClamps) {
  const auto codec = ColumnCodec::fit(labels({"x", "y"}));
  // map code-space value c to the standardized coordinate
  auto at = [&](double c) {
    const double y0 = codec.encode_label("x"), y1 = codec.encode_label("y");
    return y0 + c * (y1 - y0);
  };
  EXPECT_EQ(codec.decode_code(at(1.4)), 1u);
  EXPECT_EQ(codec.decode_code(at(-3.7)), 0u);
  EXPECT_EQ(codec.decode_code(at(0.49)), 0u);
  EXPECT_EQ(codec.decode_code(at(57.0)), 1u);
}

TEST(ColumnCodec, QuantileForManyDistinctValues) {
  std::vector<double> v;
  Rng rng(4);
  for (int i = 0; i < 500; ++i) v.push_back(std::exp(rng.normal()) * 1000.0);
  const auto codec = ColumnCodec::fit(numbers(v));
  ASSERT_EQ(codec.transform(), ColumnCodec::Transform::kQuantile);
  double sum = 0, sq = 0;
  for (double x : v) {
    const double y = codec.encode_number(x);
    sum += y;
    sq += y * y;
    EXPECT_EQ(codec.decode_number(y), x);
  }
  EXPECT_NEAR(sum / v.size(), 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(sq / v.size()), 1.0, 0.1);
  // strictly monotone on the observed range and total outside it
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) EXPECT_LT(codec.encode_number(sorted[i - 1]), codec.encode_number(sorted[i]));
  EXPECT_EQ(codec.decode_number(1e9), sorted.back());
  EXPECT_EQ(codec.decode_number(-1e9), sorted.front());
}

TEST(ColumnCodec, ConstantColumnShifts) {
  const auto codec = ColumnCodec::fit(numbers({5, 5, 5}));
  EXPECT_EQ(codec.transform(), ColumnCodec::Transform::kShift);
  EXPECT_EQ(codec.encode_number(5), 0.0);
  EXPECT_EQ(codec.decode_number(0.0), 5.0);
  EXPECT_TRUE(std::isfinite(codec.decode_number(1e6)));
}

TEST(ColumnCodec, JsonRoundTrip) {
  for (const auto& column : {labels({"a", "b", "c"}), numbers({1, 2, 4}), numbers({3}),
                             numbers({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20})}) {
    const auto codec = ColumnCodec::fit(column);
    EXPECT_EQ(ColumnCodec::from_json(codec.to_json()), codec);
  }
}

TEST(TableCodec, MixedTableRoundTripsExactly) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto db = toy::household_database(60, seed);
    const auto codecs = fit_codecs(db);
    const auto features = encode_features(db, codecs);
    const auto decoded = decode_features(features, codecs);
    for (std::size_t t = 0; t < db.tables.size(); ++t) EXPECT_EQ(decoded[t], db.tables[t].attributes);
  }
}

TEST(TableCodec, EncodedMomentsAreNearStandard) {
  const auto db = toy::chain_database(200, 5);
  const auto codecs = fit_codecs(db);
  for (const auto& m : encode_features(db, codecs)) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double mean = m.col(c).mean();
      const double sd = std::sqrt((m.col(c).array() - mean).square().mean());
      EXPECT_GE(mean, -0.1);
      EXPECT_LE(mean, 0.1);
      EXPECT_GE(sd, 0.8);
      EXPECT_LE(sd, 1.2);
    }
  }
}

TEST(TableCodec, DecodeIsTotalOnFiniteInputs) {
  const auto db = toy::household_database(30, 8);
  const auto codecs = fit_codecs(db);
  Rng rng(1);
  for (std::size_t t = 0; t < db.tables.size(); ++t) {
    Matrix m(50, static_cast<Eigen::Index>(codecs[t].dim()));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 20.0 * rng.normal();
    const auto cols = decode_table(m, codecs[t]);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      EXPECT_EQ(cols[a].size(), 50u);
      for (double x : cols[a].numbers) EXPECT_TRUE(std::isfinite(x));
    }
    m(0, 0) = std::nan("");
    EXPECT_THROW(decode_table(m, codecs[t]), NumericError);
  }
}

TEST(TableCodec, DatetimeDecodesToWholeSeconds) {
  const auto codec = ColumnCodec::fit(numbers({0, 86400, 172800}, ColumnKind::kDatetime));
  TableCodec tc{{codec}};
  Matrix m(1, 1);
  m(0, 0) = 0.123;
  const auto cols = decode_table(m, tc);
  EXPECT_EQ(cols[0].numbers[0], std::round(cols[0].numbers[0]));
}
