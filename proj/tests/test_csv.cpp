#include <gtest/gtest.h>

#include "relsynth/csv.hpp"
#include "relsynth/error.hpp"

namespace csv = relsynth::csv;

TEST(Csv, ParsesQuotesEmbeddedSeparatorsAndCrlf) {
  const auto doc = csv::parse("a,b,c\r\n1,\"x, y\",\"say \"\"hi\"\"\"\r\n2,\"multi\nline\",z\n");
  ASSERT_EQ(doc.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(doc.rows.size(), 2u);
  EXPECT_EQ(doc.rows[0][1], "x, y");
  EXPECT_EQ(doc.rows[0][2], "say \"hi\"");
  EXPECT_EQ(doc.rows[1][1], "multi\nline");
}

TEST(Csv, MissingTrailingNewlineAndEmptyFields) {
  const auto doc = csv::parse("a,b\n,2\n3,");
  ASSERT_EQ(doc.rows.size(), 2u);
  EXPECT_EQ(doc.rows[0][0], "");
  EXPECT_EQ(doc.rows[1][1], "");
}

TEST(Csv, HeaderOnlyDocumentHasNoRows) {
  const auto doc = csv::parse("a,b\n");
  EXPECT_EQ(doc.header.size(), 2u);
  EXPECT_TRUE(doc.rows.empty());
}

TEST(Csv, RaggedRowReportsLine) {
  try {
    csv::parse("a,b\n1,2\n3\n", "t.csv");
    FAIL() << "expected a parse error";
  } catch (const relsynth::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("t.csv"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(Csv, UnterminatedQuoteIsAnError) { EXPECT_THROW(csv::parse("a\n\"open\n"), relsynth::ParseError); }

TEST(Csv, FormatThenParseRoundTrips) {
  csv::Document doc{{"k", "text"}, {{"1", "plain"}, {"2", "comma, quote \" and\nnewline"}, {"3", ""}}};
  const auto back = csv::parse(csv::format(doc));
  EXPECT_EQ(back.header, doc.header);
  EXPECT_EQ(back.rows, doc.rows);
}
