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

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "relsynth/csv.hpp"
#include "relsynth/error.hpp"
#include "relsynth/schema.hpp"

namespace relsynth {

/// Values of one attribute column. Continuous kinds (numerical, datetime as
/// epoch seconds) fill `numbers`, categorical columns fill `labels`.
struct AttributeColumn {
  ColumnKind kind = ColumnKind::kNumerical;
  std::vector<double> numbers;
  std::vector<std::string> labels;

  std::size_t size() const { return is_continuous(kind) ? numbers.size() : labels.size(); }

  /// Copy of the rows named by `rows`, in that order.
  AttributeColumn gather(const std::vector<std::size_t>& rows) const {
    AttributeColumn out{kind, {}, {}};
    if (is_continuous(kind)) {
      out.numbers.reserve(rows.size());
      for (std::size_t r : rows) out.numbers.push_back(numbers[r]);
    } else {
      out.labels.reserve(rows.size());
      for (std::size_t r : rows) out.labels.push_back(labels[r]);
    }
    return out;
  }

  bool operator==(const AttributeColumn&) const = default;
};

/// Column-major storage of one table. Keys are kept as their textual form.
struct Table {
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> foreign_keys;  // [fk slot][row]
  std::vector<AttributeColumn> attributes;             // [attribute][row]

  std::size_t rows() const { return keys.size(); }

  bool operator==(const Table&) const = default;
};

struct Database {
  DatabaseSchema schema;
  std::vector<Table> tables;  // aligned with schema.tables()

  const Table& table(const std::string& name) const { return tables.at(schema.table_index(name)); }

  bool operator==(const Database&) const = default;
};

/// Empty tables shaped after the schema.
inline Database empty_database(const DatabaseSchema& schema) {
  Database db{schema, {}};
  for (const auto& ts : schema.tables()) {
    Table table;
    table.foreign_keys.resize(ts.foreign_keys.size());
    for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
      table.attributes.push_back(AttributeColumn{ts.attribute(a).kind, {}, {}});
    }
    db.tables.push_back(std::move(table));
  }
  return db;
}

// ---------------------------------------------------------------------------
// Scalar text conversions.

inline std::string format_number(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buffer, end);
}

inline std::optional<double> parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

/// Accepts YYYY-MM-DD, optionally followed by 'T' or ' ' and HH:MM[:SS[.fff]]
/// and an optional trailing 'Z'. Returns seconds since the Unix epoch (UTC).
inline std::optional<double> parse_datetime(std::string_view text) {
  auto digits = [&](std::size_t pos, std::size_t count) -> std::optional<int> {
    if (pos + count > text.size()) return std::nullopt;
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      value = value * 10 + (text[i] - '0');
    }
    return value;
  };
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto year = digits(0, 4), month = digits(5, 2), day = digits(8, 2);
  if (!year || !month || !day) return std::nullopt;
  const std::chrono::year_month_day date{std::chrono::year{*year},
                                         std::chrono::month{static_cast<unsigned>(*month)},
                                         std::chrono::day{static_cast<unsigned>(*day)}};
  if (!date.ok()) return std::nullopt;
  double seconds = 0.0;
  if (text.size() > 10) {
    if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':') {
      return std::nullopt;
    }
    const auto hour = digits(11, 2), minute = digits(14, 2);
    if (!hour || !minute || *hour > 23 || *minute > 59) return std::nullopt;
    seconds = *hour * 3600.0 + *minute * 60.0;
    if (text.size() > 16) {
      if (text[16] != ':') return std::nullopt;
      const auto second = digits(17, 2);
      if (!second || *second > 60) return std::nullopt;
      seconds += *second;
      if (text.size() > 19) {
        if (text[19] != '.') return std::nullopt;
        auto fraction = parse_number(std::string("0") + std::string(text.substr(19)));
        if (!fraction) return std::nullopt;
        seconds += *fraction;
      }
    }
  }
  const auto days = std::chrono::sys_days(date).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + seconds;
}

/// Inverse of parse_datetime at whole-second resolution.
inline std::string format_datetime(double epoch_seconds) {
  const auto total = static_cast<long long>(std::llround(epoch_seconds));
  long long days = total / 86400;
  long long rem = total % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const std::chrono::year_month_day date{std::chrono::sys_days{std::chrono::days{days}}};
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%04d-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<int>(date.year()), static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()), rem / 3600, (rem / 60) % 60, rem % 60);
  return buffer;
}

// ---------------------------------------------------------------------------
// Validation.

/// Checks key uniqueness, attribute arity, and referential integrity.
/// Errors name the table, column, and zero-based data row.
inline void check_integrity(const Database& db) {
  const auto& schema = db.schema;
  if (db.tables.size() != schema.tables().size()) {
    throw ValidationError("database has " + std::to_string(db.tables.size()) +
                          " tables, schema declares " + std::to_string(schema.tables().size()));
  }
  std::vector<std::unordered_map<std::string, std::size_t>> key_index(db.tables.size());
  for (std::size_t t = 0; t < db.tables.size(); ++t) {
    const auto& ts = schema.table(t);
    const auto& table = db.tables[t];
    if (table.foreign_keys.size() != ts.foreign_keys.size() ||
        table.attributes.size() != ts.attributes.size()) {
      throw ValidationError("table '" + ts.name + "' does not match its schema");
    }
    for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
      const auto& column = table.attributes[a];
      if (column.kind != ts.attribute(a).kind || column.size() != table.rows()) {
        throw ValidationError("attribute '" + ts.name + "." + ts.attribute(a).name +
                              "' has wrong kind or length");
      }
    }
    for (std::size_t f = 0; f < ts.foreign_keys.size(); ++f) {
      if (table.foreign_keys[f].size() != table.rows()) {
        throw ValidationError("foreign key '" + ts.name + "." + ts.foreign_key(f).name +
                              "' has wrong length");
      }
    }
    auto& index = key_index[t];
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (!index.emplace(table.keys[r], r).second) {
        throw ValidationError("duplicate primary key '" + table.keys[r] + "' in table '" +
                              ts.name + "' at row " + std::to_string(r));
      }
    }
  }
  for (const auto& link : schema.links()) {
    const auto& child = db.tables[link.child];
    const auto& parents = key_index[link.parent];
    const auto& values = child.foreign_keys[link.fk_slot];
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (!parents.contains(values[r])) {
        throw ValidationError("referential integrity violation: " + link.child_table + "." +
                              link.fk_column + " = '" + values[r] + "' at row " +
                              std::to_string(r) + " has no match in " + link.parent_table);
      }
    }
  }
}

/// For every link, the parent row index referenced by each child row.
inline std::vector<std::vector<std::size_t>> resolve_links(const Database& db) {
  std::vector<std::unordered_map<std::string, std::size_t>> key_index(db.tables.size());
  for (std::size_t t = 0; t < db.tables.size(); ++t) {
    for (std::size_t r = 0; r < db.tables[t].rows(); ++r) key_index[t].emplace(db.tables[t].keys[r], r);
  }
  std::vector<std::vector<std::size_t>> out;
  for (const auto& link : db.schema.links()) {
    const auto& values = db.tables[link.child].foreign_keys[link.fk_slot];
    std::vector<std::size_t> parents(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) {
      const auto it = key_index[link.parent].find(values[r]);
      if (it == key_index[link.parent].end()) {
        throw ValidationError("referential integrity violation in " + link.child_table + "." +
                              link.fk_column + " at row " + std::to_string(r));
      }
      parents[r] = it->second;
    }
    out.push_back(std::move(parents));
  }
  return out;
}

/// True when `b` is `a` with primary keys renamed: same row order, equal
/// attributes, and every foreign key pointing at the corresponding row.
inline bool equivalent_up_to_keys(const Database& a, const Database& b) {
  if (!(a.schema == b.schema) || a.tables.size() != b.tables.size()) return false;
  for (std::size_t t = 0; t < a.tables.size(); ++t) {
    if (a.tables[t].rows() != b.tables[t].rows()) return false;
    if (!(a.tables[t].attributes == b.tables[t].attributes)) return false;
  }
  const auto pa = resolve_links(a);
  const auto pb = resolve_links(b);
  return pa == pb;
}

// ---------------------------------------------------------------------------
// CSV ingestion and export.

inline Table load_table(const TableSchema& ts, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing table file " + path.string());
  const csv::Document doc = csv::read(path);
  std::vector<std::size_t> position(ts.columns.size());
  if (doc.header.size() != ts.columns.size()) {
    throw ValidationError(path.string() + ": header has " + std::to_string(doc.header.size()) +
                          " columns, schema declares " + std::to_string(ts.columns.size()));
  }
  for (std::size_t c = 0; c < ts.columns.size(); ++c) {
    const auto it = std::find(doc.header.begin(), doc.header.end(), ts.columns[c].name);
    if (it == doc.header.end()) {
      throw ValidationError(path.string() + ": header mismatch, column '" + ts.columns[c].name +
                            "' not found");
    }
    position[c] = static_cast<std::size_t>(it - doc.header.begin());
  }

  Table table;
  table.foreign_keys.resize(ts.foreign_keys.size());
  for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
    table.attributes.push_back(AttributeColumn{ts.attribute(a).kind, {}, {}});
  }
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    auto cell = [&](std::size_t column) -> const std::string& {
      const std::string& value = row[position[column]];
      if (value.empty()) {
        throw ValidationError(path.string() + ": empty value in column '" +
                              ts.columns[column].name + "' at row " + std::to_string(r) +
                              " (missing values are unsupported)");
      }
      return value;
    };
    table.keys.push_back(cell(ts.primary_key));
    for (std::size_t f = 0; f < ts.foreign_keys.size(); ++f) {
      table.foreign_keys[f].push_back(cell(ts.foreign_keys[f]));
    }
    for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
      const std::size_t c = ts.attributes[a];
      const std::string& text = cell(c);
      auto& column = table.attributes[a];
      switch (column.kind) {
        case ColumnKind::kCategorical:
          column.labels.push_back(text);
          break;
        case ColumnKind::kNumerical: {
          const auto value = parse_number(text);
          if (!value) {
            throw ValidationError(path.string() + ": column '" + ts.columns[c].name +
                                  "' at row " + std::to_string(r) + ": not a number: '" + text +
                                  "'");
          }
          column.numbers.push_back(*value);
          break;
        }
        case ColumnKind::kDatetime: {
          const auto value = parse_datetime(text);
          if (!value) {
            throw ValidationError(path.string() + ": column '" + ts.columns[c].name +
                                  "' at row " + std::to_string(r) + ": not an ISO-8601 date: '" +
                                  text + "'");
          }
          column.numbers.push_back(*value);
          break;
        }
      }
    }
  }
  return table;
}

/// Reads <dir>/<table>.csv for every table and validates the result.
inline Database load_database(const DatabaseSchema& schema, const std::filesystem::path& dir) {
  Database db{schema, {}};
  for (const auto& ts : schema.tables()) db.tables.push_back(load_table(ts, dir / (ts.name + ".csv")));
  check_integrity(db);
  return db;
}

inline csv::Document table_to_csv(const TableSchema& ts, const Table& table) {
  csv::Document doc;
  for (const auto& column : ts.columns) doc.header.push_back(column.name);
  std::vector<std::size_t> fk_slot(ts.columns.size()), attr_slot(ts.columns.size());
  for (std::size_t f = 0; f < ts.foreign_keys.size(); ++f) fk_slot[ts.foreign_keys[f]] = f;
  for (std::size_t a = 0; a < ts.attributes.size(); ++a) attr_slot[ts.attributes[a]] = a;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(ts.columns.size());
    for (std::size_t c = 0; c < ts.columns.size(); ++c) {
      switch (ts.columns[c].role) {
        case ColumnRole::kPrimaryKey:
          row.push_back(table.keys[r]);
          break;
        case ColumnRole::kForeignKey:
          row.push_back(table.foreign_keys[fk_slot[c]][r]);
          break;
        case ColumnRole::kAttribute: {
          const auto& column = table.attributes[attr_slot[c]];
          switch (column.kind) {
            case ColumnKind::kCategorical: row.push_back(column.labels[r]); break;
            case ColumnKind::kNumerical: row.push_back(format_number(column.numbers[r])); break;
            case ColumnKind::kDatetime: row.push_back(format_datetime(column.numbers[r])); break;
          }
          break;
        }
      }
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

/// Writes one <table>.csv per table into `dir`, creating it if needed.
inline void export_database(const Database& db, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < db.tables.size(); ++t) {
    const auto& ts = db.schema.table(t);
    csv::write(dir / (ts.name + ".csv"), table_to_csv(ts, db.tables[t]));
  }
}

}  // namespace relsynth
