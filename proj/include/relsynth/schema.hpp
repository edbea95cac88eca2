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
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "relsynth/error.hpp"
#include "relsynth/random.hpp"

namespace relsynth {

enum class ColumnKind { kNumerical, kCategorical, kDatetime };
enum class ColumnRole { kPrimaryKey, kForeignKey, kAttribute };

inline std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kNumerical: return "numerical";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kDatetime: return "datetime";
  }
  return "?";
}

inline std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::kPrimaryKey: return "primary_key";
    case ColumnRole::kForeignKey: return "foreign_key";
    case ColumnRole::kAttribute: return "attribute";
  }
  return "?";
}

/// Numerical and datetime attributes share the continuous representation.
inline bool is_continuous(ColumnKind kind) { return kind != ColumnKind::kCategorical; }

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumerical;
  ColumnRole role = ColumnRole::kAttribute;
  std::string target_table;  // only for foreign keys

  bool operator==(const ColumnSpec&) const = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSpec> columns;

  /// Column positions by role, in declaration order.
  std::size_t primary_key = 0;
  std::vector<std::size_t> foreign_keys;
  std::vector<std::size_t> attributes;

  const ColumnSpec& attribute(std::size_t a) const { return columns[attributes[a]]; }
  const ColumnSpec& foreign_key(std::size_t f) const { return columns[foreign_keys[f]]; }

  bool operator==(const TableSchema&) const = default;
};

/// One primary/foreign key reference: rows of `child` point at rows of
/// `parent` through the child's `fk_column`.
struct Link {
  std::size_t child = 0;
  std::size_t parent = 0;
  std::size_t fk_slot = 0;  // index into the child's foreign_keys
  std::string child_table;
  std::string fk_column;
  std::string parent_table;

  bool operator==(const Link&) const = default;
};

/// Validated multi-table schema. Links are derived from the foreign-key
/// columns, in table then column declaration order.
class DatabaseSchema {
 public:
  DatabaseSchema() = default;

  explicit DatabaseSchema(std::vector<TableSchema> tables) : tables_(std::move(tables)) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      auto& table = tables_[i];
      if (table.name.empty()) throw ValidationError("table " + std::to_string(i) + " has no name");
      if (!index.emplace(table.name, i).second) {
        throw ValidationError("duplicate table name '" + table.name + "'");
      }
    }
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      auto& table = tables_[i];
      table.foreign_keys.clear();
      table.attributes.clear();
      std::set<std::string> seen;
      std::optional<std::size_t> pk;
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        const auto& column = table.columns[c];
        const std::string where = table.name + "." + column.name;
        if (column.name.empty()) {
          throw ValidationError("table '" + table.name + "' has an unnamed column");
        }
        if (!seen.insert(column.name).second) {
          throw ValidationError("duplicate column '" + where + "'");
        }
        switch (column.role) {
          case ColumnRole::kPrimaryKey:
            if (pk) {
              throw ValidationError("table '" + table.name +
                                    "' declares more than one primary key column "
                                    "(composite keys are unsupported)");
            }
            pk = c;
            break;
          case ColumnRole::kForeignKey: {
            if (column.target_table.empty()) {
              throw ValidationError("foreign key '" + where + "' has no target_table");
            }
            if (column.target_table == table.name) {
              throw ValidationError("foreign key '" + where +
                                    "': self-referential schemas unsupported");
            }
            const auto target = index.find(column.target_table);
            if (target == index.end()) {
              throw ValidationError("foreign key '" + where + "' targets unknown table '" +
                                    column.target_table + "'");
            }
            links_.push_back(Link{i, target->second, table.foreign_keys.size(), table.name,
                                  column.name, column.target_table});
            table.foreign_keys.push_back(c);
            break;
          }
          case ColumnRole::kAttribute:
            if (!column.target_table.empty()) {
              throw ValidationError("column '" + where +
                                    "' has target_table but is not a foreign key");
            }
            table.attributes.push_back(c);
            break;
        }
      }
      if (!pk) throw ValidationError("table '" + table.name + "' has no primary key column");
      table.primary_key = *pk;
    }
  }

  const std::vector<TableSchema>& tables() const { return tables_; }
  const std::vector<Link>& links() const { return links_; }
  const TableSchema& table(std::size_t i) const { return tables_.at(i); }

  std::optional<std::size_t> find_table(const std::string& name) const {
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      if (tables_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t table_index(const std::string& name) const {
    if (auto i = find_table(name)) return *i;
    throw ValidationError("unknown table '" + name + "'");
  }

  /// Links whose child is table `t`, in fk declaration order.
  std::vector<std::size_t> links_from(std::size_t t) const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < links_.size(); ++l) {
      if (links_[l].child == t) out.push_back(l);
    }
    return out;
  }

  bool operator==(const DatabaseSchema&) const = default;

 private:
  std::vector<TableSchema> tables_;
  std::vector<Link> links_;
};

/// Tables without foreign keys; structure generation starts from them.
inline std::vector<std::size_t> root_tables(const DatabaseSchema& schema) {
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < schema.tables().size(); ++i) {
    if (schema.table(i).foreign_keys.empty()) roots.push_back(i);
  }
  return roots;
}

inline std::vector<std::string> root_table_names(const DatabaseSchema& schema) {
  std::vector<std::string> names;
  for (std::size_t i : root_tables(schema)) names.push_back(schema.table(i).name);
  return names;
}

/// Parents-before-children ordering of the tables. Throws when the link
/// graph has a cycle (which also means there are no usable roots).
inline std::vector<std::size_t> topological_order(const DatabaseSchema& schema) {
  const std::size_t n = schema.tables().size();
  if (!schema.tables().empty() && root_tables(schema).empty()) {
    throw ValidationError("no root tables: every table has a foreign key");
  }
  std::vector<std::size_t> pending(n, 0);
  for (const auto& link : schema.links()) ++pending[link.child];
  std::vector<std::size_t> order;
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || pending[i] != 0) continue;
      done[i] = true;
      order.push_back(i);
      progressed = true;
      for (const auto& link : schema.links()) {
        if (link.parent == i) --pending[link.child];
      }
    }
    if (!progressed) throw ValidationError("schema links contain a cycle");
  }
  return order;
}

namespace detail {

inline ColumnKind parse_kind(const std::string& text, const std::string& where) {
  if (text == "numerical") return ColumnKind::kNumerical;
  if (text == "categorical") return ColumnKind::kCategorical;
  if (text == "datetime") return ColumnKind::kDatetime;
  throw ValidationError(where + ": unknown kind '" + text + "'");
}

inline ColumnRole parse_role(const std::string& text, const std::string& where) {
  if (text == "primary_key") return ColumnRole::kPrimaryKey;
  if (text == "foreign_key") return ColumnRole::kForeignKey;
  if (text == "attribute") return ColumnRole::kAttribute;
  throw ValidationError(where + ": unknown role '" + text + "'");
}

inline std::string line_context(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  const std::size_t line = 1 + std::count(text.begin(), text.begin() + byte, '\n');
  const std::size_t begin = text.rfind('\n', byte == 0 ? 0 : byte - 1);
  const std::size_t start = begin == std::string::npos ? 0 : begin + 1;
  const std::size_t stop = text.find('\n', start);
  return "line " + std::to_string(line) + ": " +
         text.substr(start, stop == std::string::npos ? std::string::npos : stop - start);
}

}  // namespace detail

inline DatabaseSchema schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("tables") || !doc["tables"].is_array()) {
    throw ValidationError("schema: expected an object with a \"tables\" array");
  }
  std::vector<TableSchema> tables;
  for (const auto& jt : doc["tables"]) {
    if (!jt.is_object() || !jt.contains("name") || !jt["name"].is_string()) {
      throw ValidationError("schema: every table needs a string \"name\"");
    }
    TableSchema table;
    table.name = jt["name"].get<std::string>();
    if (!jt.contains("columns") || !jt["columns"].is_array()) {
      throw ValidationError("table '" + table.name + "': missing \"columns\" array");
    }
    for (const auto& jc : jt["columns"]) {
      ColumnSpec column;
      const std::string where = "table '" + table.name + "'";
      if (!jc.is_object() || !jc.contains("name") || !jc["name"].is_string()) {
        throw ValidationError(where + ": every column needs a string \"name\"");
      }
      column.name = jc["name"].get<std::string>();
      const std::string cwhere = table.name + "." + column.name;
      column.kind = detail::parse_kind(jc.value("kind", std::string("numerical")), cwhere);
      if (!jc.contains("role")) throw ValidationError(cwhere + ": missing \"role\"");
      column.role = detail::parse_role(jc["role"].get<std::string>(), cwhere);
      if (jc.contains("target_table") && !jc["target_table"].is_null()) {
        column.target_table = jc["target_table"].get<std::string>();
      }
      table.columns.push_back(std::move(column));
    }
    tables.push_back(std::move(table));
  }
  return DatabaseSchema(std::move(tables));
}

inline DatabaseSchema parse_schema(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("schema parse error at ") +
                     detail::line_context(text, e.byte == 0 ? 0 : e.byte - 1) + " (" + e.what() +
                     ")");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema parse error: ") + e.what());
  }
  try {
    return schema_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
}

inline DatabaseSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open schema " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_schema(buffer.str());
}

inline nlohmann::json schema_to_json(const DatabaseSchema& schema) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& table : schema.tables()) {
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& column : table.columns) {
      nlohmann::json jc{{"name", column.name},
                        {"kind", to_string(column.kind)},
                        {"role", to_string(column.role)}};
      if (column.role == ColumnRole::kForeignKey) jc["target_table"] = column.target_table;
      columns.push_back(std::move(jc));
    }
    tables.push_back({{"name", table.name}, {"columns", std::move(columns)}});
  }
  return {{"tables", std::move(tables)}};
}

/// Stable fingerprint used to tie checkpoints to the schema they were
/// trained on.
inline std::string schema_hash(const DatabaseSchema& schema) {
  std::ostringstream out;
  out << std::hex << fnv1a(schema_to_json(schema).dump());
  return out.str();
}

}  // namespace relsynth
