#include <gtest/gtest.h>

#include "relsynth/schema.hpp"
#include "relsynth/toy.hpp"
#include "test_util.hpp"

using namespace relsynth;

namespace {

const char* kHousehold = R"({"tables":[
  {"name":"household","columns":[
    {"name":"household_id","kind":"numerical","role":"primary_key"},
    {"name":"income","kind":"numerical","role":"attribute"}]},
  {"name":"person","columns":[
    {"name":"person_id","kind":"numerical","role":"primary_key"},
    {"name":"household_id","kind":"numerical","role":"foreign_key","target_table":"household"},
    {"name":"age","kind":"numerical","role":"attribute"}]}]})";

std::string error_of(const std::string& text) {
  try {
    parse_schema(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Schema, TwoTableDescriptorYieldsOneLink) {
  const auto schema = parse_schema(kHousehold);
  ASSERT_EQ(schema.tables().size(), 2u);
  ASSERT_EQ(schema.links().size(), 1u);
  const auto& link = schema.links()[0];
  EXPECT_EQ(link.child_table, "person");
  EXPECT_EQ(link.fk_column, "household_id");
  EXPECT_EQ(link.parent_table, "household");
  EXPECT_EQ(schema.table(1).attributes.size(), 1u);
  EXPECT_EQ(schema.table(1).attribute(0).name, "age");
}

TEST(Schema, DanglingTargetIsAValidationError) {
  std::string text = kHousehold;
  text.replace(text.find("\"target_table\":\"household\""), 26, "\"target_table\":\"homes\"");
  try {
    parse_schema(text);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("person.household_id"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("homes"), std::string::npos);
  }
}

TEST(Schema, SelfReferenceRejected) {
  const auto msg = error_of(R"({"tables":[{"name":"node","columns":[
      {"name":"id","role":"primary_key"},
      {"name":"parent","role":"foreign_key","target_table":"node"}]}]})");
  EXPECT_NE(msg.find("self-referential schemas unsupported"), std::string::npos) << msg;
}

TEST(Schema, StructuralErrors) {
  EXPECT_NE(error_of(R"({"tables":[{"name":"a","columns":[{"name":"x","role":"attribute"}]}]})").find("no primary key"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"tables":[{"name":"a","columns":[{"name":"x","role":"primary_key"},
      {"name":"y","role":"primary_key"}]}]})").find("composite"), std::string::npos);
  EXPECT_NE(error_of(R"({"tables":[{"name":"a","columns":[{"name":"x","role":"primary_key"},
      {"name":"x","role":"attribute"}]}]})").find("duplicate column"), std::string::npos);
  EXPECT_NE(error_of(R"({"tables":[{"name":"a","columns":[{"name":"x","role":"primary_key"}]},
      {"name":"a","columns":[{"name":"x","role":"primary_key"}]}]})").find("duplicate table"), std::string::npos);
  EXPECT_NE(error_of(R"({"tables":[{"name":"a","columns":[{"name":"x","role":"primary_key"},
      {"name":"y","role":"foreign_key"}]}]})").find("no target_table"), std::string::npos);
  EXPECT_NE(error_of(R"({"tables":[{"name":"a","columns":[{"name":"x","role":"primary_key","kind":"text"}]}]})")
                .find("text"), std::string::npos);
}

TEST(Schema, ParseErrorCarriesLineContext) {
  try {
    parse_schema("{\"tables\": [\n  {\"name\": \"a\",\n   \"columns\": [ oops ]}]}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Schema, KeyOnlyTablesAreAllowed) {
  const auto schema = parse_schema(R"({"tables":[{"name":"a","columns":[{"name":"id","role":"primary_key"}]}]})");
  EXPECT_TRUE(schema.table(0).attributes.empty());
}

TEST(Schema, TwoForeignKeysToOneParentAreDistinctLinks) {
  const DatabaseSchema schema({
      TableSchema{"user", {toy::pk("id")}},
      TableSchema{"transfer", {toy::pk("id"), toy::fk("sender", "user"), toy::fk("receiver", "user")}},
  });
  ASSERT_EQ(schema.links().size(), 2u);
  EXPECT_EQ(schema.links()[0].fk_column, "sender");
  EXPECT_EQ(schema.links()[1].fk_column, "receiver");
  EXPECT_EQ(schema.links()[1].fk_slot, 1u);
}

TEST(RootTables, HouseholdAndChain) {
  EXPECT_EQ(root_table_names(toy::household_schema()), std::vector<std::string>{"household"});
  EXPECT_EQ(root_table_names(toy::chain_schema()), std::vector<std::string>{"district"});
}

TEST(RootTables, CycleHasNoRootsAndOrderingRefuses) {
  const DatabaseSchema schema({
      TableSchema{"a", {toy::pk("id"), toy::fk("b_id", "b")}},
      TableSchema{"b", {toy::pk("id"), toy::fk("a_id", "a")}},
  });
  EXPECT_TRUE(root_tables(schema).empty());
  try {
    topological_order(schema);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no root tables"), std::string::npos);
  }
}

TEST(RootTables, TopologicalOrderPutsParentsFirst) {
  const auto schema = toy::chain_schema();
  const auto order = topological_order(schema);
  std::vector<std::size_t> position(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
  for (const auto& link : schema.links()) EXPECT_LT(position[link.parent], position[link.child]);
}

TEST(Schema, JsonRoundTripAndHash) {
  const auto schema = parse_schema(kHousehold);
  const auto again = schema_from_json(schema_to_json(schema));
  EXPECT_EQ(schema, again);
  EXPECT_EQ(schema_hash(schema), schema_hash(again));
  EXPECT_NE(schema_hash(schema), schema_hash(toy::household_schema()));
}

TEST(Schema, LoadFromFile) {
  const auto dir = testutil::scratch_dir();
  testutil::write_file(dir / "schema.json", kHousehold);
  EXPECT_EQ(load_schema(dir / "schema.json").links().size(), 1u);
  EXPECT_THROW(load_schema(dir / "absent.json"), DataError);
}
