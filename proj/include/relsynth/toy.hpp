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
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "relsynth/database.hpp"
#include "relsynth/random.hpp"
#include "relsynth/schema.hpp"

// Small generated databases used by the bundled data, the tests, and the
// acceptance suite.
namespace relsynth::toy {

inline ColumnSpec pk(std::string name) { return {std::move(name), ColumnKind::kNumerical, ColumnRole::kPrimaryKey, ""}; }
inline ColumnSpec fk(std::string name, std::string target) {
  return {std::move(name), ColumnKind::kNumerical, ColumnRole::kForeignKey, std::move(target)};
}
inline ColumnSpec attr(std::string name, ColumnKind kind) { return {std::move(name), kind, ColumnRole::kAttribute, ""}; }

inline DatabaseSchema household_schema() {
  return DatabaseSchema({
      TableSchema{"household",
                  {pk("household_id"), attr("region", ColumnKind::kCategorical),
                   attr("income", ColumnKind::kNumerical), attr("founded", ColumnKind::kDatetime)}},
      TableSchema{"person",
                  {pk("person_id"), fk("household_id", "household"), attr("age", ColumnKind::kNumerical),
                   attr("employed", ColumnKind::kCategorical)}},
  });
}

/// Households with a planted income/region -> employment/age dependence.
/// Person counts per household are drawn uniformly from `sizes`.
inline Database household_database(int households, std::uint64_t seed,
                                   const std::vector<int>& sizes = {1, 2, 4}) {
  Database db = empty_database(household_schema());
  Rng rng(seed);
  auto& hh = db.tables[0];
  auto& people = db.tables[1];
  static const char* kRegions[] = {"north", "south", "east", "west"};
  int person = 0;
  for (int h = 0; h < households; ++h) {
    const double z = rng.normal();
    const int region = std::clamp(static_cast<int>(std::floor((z + 0.4 * rng.normal()) * 1.2 + 2.0)), 0, 3);
    hh.keys.push_back(std::to_string(100 + h));
    hh.attributes[0].labels.push_back(kRegions[region]);
    hh.attributes[1].numbers.push_back(std::round(40000.0 + 12000.0 * z));
    hh.attributes[2].numbers.push_back(946684800.0 + 86400.0 * std::floor(3650.0 * rng.uniform()));
    const int n = sizes[rng.below(sizes.size())];
    for (int i = 0; i < n; ++i) {
      const double w = 0.8 * z + 0.6 * rng.normal();
      people.keys.push_back("p" + std::to_string(person++));
      people.foreign_keys[0].push_back(hh.keys.back());
      people.attributes[0].numbers.push_back(std::round(std::clamp(40.0 + 12.0 * w, 18.0, 90.0)));
      people.attributes[1].labels.push_back(w + 0.3 * rng.normal() > -0.2 ? "yes" : "no");
    }
  }
  return db;
}

inline DatabaseSchema chain_schema() {
  return DatabaseSchema({
      TableSchema{"district",
                  {pk("district_id"), attr("region", ColumnKind::kCategorical),
                   attr("population", ColumnKind::kNumerical)}},
      TableSchema{"account",
                  {pk("account_id"), fk("district_id", "district"), attr("balance", ColumnKind::kNumerical),
                   attr("tier", ColumnKind::kCategorical)}},
      TableSchema{"transaction",
                  {pk("transaction_id"), fk("account_id", "account"), attr("amount", ColumnKind::kNumerical),
                   attr("direction", ColumnKind::kCategorical)}},
  });
}

/// Three-level chain district <- account <- transaction. A latent factor
/// flows down the chain (each level keeps ~0.85 of its parent's factor), so
/// attributes correlate across one and two hops.
inline Database chain_database(int districts, std::uint64_t seed) {
  Database db = empty_database(chain_schema());
  Rng rng(seed);
  auto& d = db.tables[0];
  auto& a = db.tables[1];
  auto& x = db.tables[2];
  static const char* kRegions[] = {"north", "south", "east", "west"};
  static const char* kTiers[] = {"basic", "plus", "premium"};
  static const int kAccountsPerDistrict[] = {2, 4, 6};
  static const int kTransactionsPerAccount[] = {1, 3, 5};
  int account = 0, transaction = 0;
  for (int i = 0; i < districts; ++i) {
    const double zd = rng.normal();
    const int region = std::clamp(static_cast<int>(std::floor((zd + 0.3 * rng.normal()) * 1.3 + 2.0)), 0, 3);
    d.keys.push_back(std::to_string(i + 1));
    d.attributes[0].labels.push_back(kRegions[region]);
    d.attributes[1].numbers.push_back(std::round(50000.0 + 15000.0 * zd));
    const int na = kAccountsPerDistrict[rng.below(3)];
    for (int j = 0; j < na; ++j) {
      const double za = 0.85 * zd + 0.5 * rng.normal();
      const int tier = std::clamp(static_cast<int>(std::floor((za + 0.3 * rng.normal()) * 1.2 + 1.5)), 0, 2);
      a.keys.push_back(std::to_string(1000 + account++));
      a.foreign_keys[0].push_back(d.keys.back());
      a.attributes[0].numbers.push_back(std::round(100.0 * (5000.0 + 2000.0 * za)) / 100.0);
      a.attributes[1].labels.push_back(kTiers[tier]);
      const int nx = kTransactionsPerAccount[rng.below(3)];
      for (int k = 0; k < nx; ++k) {
        const double zx = 0.85 * za + 0.5 * rng.normal();
        x.keys.push_back("t" + std::to_string(transaction++));
        x.foreign_keys[0].push_back(a.keys.back());
        x.attributes[0].numbers.push_back(std::round(100.0 * (200.0 + 60.0 * zx)) / 100.0);
        x.attributes[1].labels.push_back(zx + 0.3 * rng.normal() > 0.0 ? "credit" : "debit");
      }
    }
  }
  return db;
}

/// Random schema and data: 2-4 tables, each non-first table holding 1-2
/// foreign keys to earlier tables (possibly the same one twice), 0-3
/// attributes of random kinds, at most `max_rows` rows per table. Keys are
/// shuffled non-contiguous strings so that relabeling is observable.
inline Database random_database(Rng& rng, std::size_t max_rows = 200) {
  const int tables = 2 + static_cast<int>(rng.below(3));
  std::vector<TableSchema> specs;
  for (int t = 0; t < tables; ++t) {
    TableSchema ts;
    ts.name = "t" + std::to_string(t);
    ts.columns.push_back(pk("id"));
    if (t > 0) {
      const int fks = 1 + static_cast<int>(rng.below(2));
      for (int f = 0; f < fks; ++f) {
        ts.columns.push_back(fk("ref" + std::to_string(f), "t" + std::to_string(rng.below(static_cast<std::uint64_t>(t)))));
      }
    }
    const int attrs = static_cast<int>(rng.below(4));
    for (int c = 0; c < attrs; ++c) {
      static const ColumnKind kinds[] = {ColumnKind::kNumerical, ColumnKind::kCategorical, ColumnKind::kDatetime};
      ts.columns.push_back(attr("a" + std::to_string(c), kinds[rng.below(3)]));
    }
    specs.push_back(std::move(ts));
  }
  DatabaseSchema schema(std::move(specs));
  Database db = empty_database(schema);
  for (int t = 0; t < tables; ++t) {
    const auto& ts = schema.table(static_cast<std::size_t>(t));
    auto& table = db.tables[static_cast<std::size_t>(t)];
    const std::size_t rows = 1 + rng.below(t == 0 ? 40 : max_rows);
    std::vector<std::uint64_t> ids(rows);
    for (std::size_t r = 0; r < rows; ++r) ids[r] = 3 * r + 7;
    rng.shuffle(std::span<std::uint64_t>(ids));
    for (std::size_t r = 0; r < rows; ++r) table.keys.push_back("k" + std::to_string(ids[r]));
    for (std::size_t f = 0; f < ts.foreign_keys.size(); ++f) {
      const auto parent = schema.table_index(ts.foreign_key(f).target_table);
      const auto& parent_keys = db.tables[parent].keys;
      for (std::size_t r = 0; r < rows; ++r) table.foreign_keys[f].push_back(parent_keys[rng.below(parent_keys.size())]);
    }
    for (std::size_t a = 0; a < ts.attributes.size(); ++a) {
      auto& column = table.attributes[a];
      const bool constant = rng.below(10) == 0;
      const std::uint64_t distinct = 1 + rng.below(40);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::uint64_t bucket = constant ? 0 : rng.below(distinct);
        switch (column.kind) {
          case ColumnKind::kCategorical:
            column.labels.push_back("c" + std::to_string(bucket));
            break;
          case ColumnKind::kNumerical:
            column.numbers.push_back(constant ? 3.25 : rng.normal() * 17.3 + static_cast<double>(bucket));
            break;
          case ColumnKind::kDatetime:
            column.numbers.push_back(1.6e9 + 3600.0 * static_cast<double>(rng.below(100000)));
            break;
        }
      }
    }
  }
  return db;
}

}  // namespace relsynth::toy
