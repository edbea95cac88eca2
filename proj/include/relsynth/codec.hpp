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
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "relsynth/database.hpp"
#include "relsynth/error.hpp"

namespace relsynth {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Columns with at least this many distinct values get a quantile
/// transform; fewer fall back to z-scoring.
inline constexpr std::size_t kQuantileMinDistinct = 20;

/// Maps one attribute column to a scalar in the diffusion space and back.
///
/// Categorical columns are label encoded in first-appearance order and the
/// codes are then standardized. Continuous columns use a quantile transform
/// onto a standard normal (piecewise linear between the training values) or
/// plain z-scoring; constant columns are only shifted.
class ColumnCodec {
 public:
  enum class Transform { kLabel, kShift, kZScore, kQuantile };

  ColumnCodec() = default;

  static ColumnCodec fit(const AttributeColumn& column) {
    ColumnCodec codec;
    codec.kind_ = column.kind;
    if (!is_continuous(column.kind)) {
      codec.transform_ = Transform::kLabel;
      std::vector<double> codes;
      codes.reserve(column.labels.size());
      for (const auto& label : column.labels) {
        auto [it, inserted] = codec.code_of_.emplace(label, codec.categories_.size());
        if (inserted) codec.categories_.push_back(label);
        codes.push_back(static_cast<double>(it->second));
      }
      codec.fit_moments(codes);
      return codec;
    }

    std::map<double, std::size_t> counts;
    for (double x : column.numbers) ++counts[x];
    codec.distinct_.reserve(counts.size());
    for (const auto& [x, c] : counts) codec.distinct_.push_back(x);

    if (counts.size() <= 1) {
      codec.transform_ = Transform::kShift;
      codec.mean_ = counts.empty() ? 0.0 : counts.begin()->first;
      codec.scale_ = 1.0;
      return codec;
    }
    if (counts.size() < kQuantileMinDistinct) {
      codec.transform_ = Transform::kZScore;
      codec.fit_moments(column.numbers);
      return codec;
    }
    codec.transform_ = Transform::kQuantile;
    const double n = static_cast<double>(column.numbers.size());
    const boost::math::normal_distribution<double> standard;
    double below = 0.0;
    for (const auto& [x, c] : counts) {
      const double p = (below + 0.5 * static_cast<double>(c)) / n;
      codec.knots_.push_back(boost::math::quantile(standard, p));
      below += static_cast<double>(c);
    }
    return codec;
  }

  ColumnKind kind() const { return kind_; }
  Transform transform() const { return transform_; }
  std::size_t cardinality() const { return categories_.size(); }
  const std::vector<std::string>& categories() const { return categories_; }

  std::size_t code(const std::string& label) const {
    const auto it = code_of_.find(label);
    if (it == code_of_.end()) throw DataError("unknown category '" + label + "'");
    return it->second;
  }

  double encode_label(const std::string& label) const {
    return (static_cast<double>(code(label)) - mean_) / scale_;
  }

  /// Nearest code, clamped to [0, n-1].
  std::size_t decode_code(double y) const {
    if (categories_.empty()) throw DataError("cannot decode a category with no training values");
    const double raw = std::round(y * scale_ + mean_);
    const double clamped = std::clamp(raw, 0.0, static_cast<double>(categories_.size() - 1));
    return static_cast<std::size_t>(clamped);
  }

  const std::string& decode_label(double y) const { return categories_[decode_code(y)]; }

  double encode_number(double x) const {
    switch (transform_) {
      case Transform::kShift:
        return x - mean_;
      case Transform::kZScore:
        return (x - mean_) / scale_;
      case Transform::kQuantile:
        return interpolate(distinct_, knots_, x, true);
      case Transform::kLabel:
        break;
    }
    throw DataError("encode_number on a categorical codec");
  }

  double decode_number(double y) const {
    switch (transform_) {
      case Transform::kShift:
        return y + mean_;
      case Transform::kZScore:
        return snap(y * scale_ + mean_);
      case Transform::kQuantile:
        return interpolate(knots_, distinct_, y, false);
      case Transform::kLabel:
        break;
    }
    throw DataError("decode_number on a categorical codec");
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", to_string(kind_)}, {"mean", mean_}, {"scale", scale_}};
    switch (transform_) {
      case Transform::kLabel: j["transform"] = "label"; j["categories"] = categories_; break;
      case Transform::kShift: j["transform"] = "shift"; j["values"] = distinct_; break;
      case Transform::kZScore: j["transform"] = "zscore"; j["values"] = distinct_; break;
      case Transform::kQuantile:
        j["transform"] = "quantile";
        j["values"] = distinct_;
        j["knots"] = knots_;
        break;
    }
    return j;
  }

  static ColumnCodec from_json(const nlohmann::json& j) {
    ColumnCodec codec;
    const std::string kind = j.at("kind").get<std::string>();
    codec.kind_ = kind == "categorical" ? ColumnKind::kCategorical
                  : kind == "datetime"  ? ColumnKind::kDatetime
                                        : ColumnKind::kNumerical;
    codec.mean_ = j.at("mean").get<double>();
    codec.scale_ = j.at("scale").get<double>();
    const std::string transform = j.at("transform").get<std::string>();
    if (transform == "label") {
      codec.transform_ = Transform::kLabel;
      codec.categories_ = j.at("categories").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < codec.categories_.size(); ++i) {
        codec.code_of_.emplace(codec.categories_[i], i);
      }
    } else if (transform == "shift") {
      codec.transform_ = Transform::kShift;
      codec.distinct_ = j.value("values", std::vector<double>{});
    } else if (transform == "zscore") {
      codec.transform_ = Transform::kZScore;
      codec.distinct_ = j.at("values").get<std::vector<double>>();
    } else if (transform == "quantile") {
      codec.transform_ = Transform::kQuantile;
      codec.distinct_ = j.at("values").get<std::vector<double>>();
      codec.knots_ = j.at("knots").get<std::vector<double>>();
    } else {
      throw DataError("unknown codec transform '" + transform + "'");
    }
    return codec;
  }

  bool operator==(const ColumnCodec&) const = default;

 private:
  template <typename Values>
  void fit_moments(const Values& values) {
    if (values.empty()) {
      mean_ = 0.0;
      scale_ = 1.0;
      return;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    mean_ = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean_) * (v - mean_);
    scale_ = std::sqrt(sq / static_cast<double>(values.size()));
    if (!(scale_ > 0.0)) scale_ = 1.0;
  }

  /// Undo rounding from the affine map so training values decode exactly.
  double snap(double x) const {
    const auto it = std::lower_bound(distinct_.begin(), distinct_.end(), x);
    double best = x;
    double gap = 1e-12 * std::max(1.0, std::abs(x));
    for (auto cand : {it, it == distinct_.begin() ? it : std::prev(it)}) {
      if (cand == distinct_.end()) continue;
      if (std::abs(*cand - x) <= gap) {
        gap = std::abs(*cand - x);
        best = *cand;
      }
    }
    return best;
  }

  /// Piecewise-linear map through (from[i], to[i]); both strictly
  /// increasing. Out-of-range inputs extrapolate with the end slopes when
  /// `extrapolate`, otherwise they clamp to the end values.
  static double interpolate(const std::vector<double>& from, const std::vector<double>& to,
                            double x, bool extrapolate) {
    const std::size_t n = from.size();
    auto segment = [&](std::size_t i) {
      const double w = (x - from[i]) / (from[i + 1] - from[i]);
      return to[i] + w * (to[i + 1] - to[i]);
    };
    if (x <= from.front()) return x == from.front() || !extrapolate ? to.front() : segment(0);
    if (x >= from.back()) return x == from.back() || !extrapolate ? to.back() : segment(n - 2);
    const auto it = std::lower_bound(from.begin(), from.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - from.begin());
    if (*it == x) return to[hi];
    return segment(hi - 1);
  }

  ColumnKind kind_ = ColumnKind::kNumerical;
  Transform transform_ = Transform::kZScore;
  double mean_ = 0.0;
  double scale_ = 1.0;
  std::vector<std::string> categories_;
  std::unordered_map<std::string, std::size_t> code_of_;
  std::vector<double> distinct_;  // sorted training values (continuous kinds)
  std::vector<double> knots_;     // normal scores of distinct_ (quantile)
};

struct TableCodec {
  std::vector<ColumnCodec> columns;  // one per attribute column, schema order

  std::size_t dim() const { return columns.size(); }
  bool operator==(const TableCodec&) const = default;
};

using CodecBundle = std::vector<TableCodec>;  // aligned with schema tables

inline CodecBundle fit_codecs(const Database& db) {
  CodecBundle bundle;
  for (const auto& table : db.tables) {
    TableCodec codec;
    for (const auto& column : table.attributes) codec.columns.push_back(ColumnCodec::fit(column));
    bundle.push_back(std::move(codec));
  }
  return bundle;
}

/// Encoded attributes of one table: rows x attribute columns.
inline Matrix encode_table(const Table& table, const TableCodec& codec) {
  Matrix out(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(codec.dim()));
  for (std::size_t a = 0; a < codec.dim(); ++a) {
    const auto& column = table.attributes[a];
    const auto& cc = codec.columns[a];
    for (std::size_t r = 0; r < table.rows(); ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) =
          is_continuous(column.kind) ? cc.encode_number(column.numbers[r])
                                     : cc.encode_label(column.labels[r]);
    }
  }
  return out;
}

inline std::vector<Matrix> encode_features(const Database& db, const CodecBundle& codecs) {
  std::vector<Matrix> out;
  for (std::size_t t = 0; t < db.tables.size(); ++t) out.push_back(encode_table(db.tables[t], codecs.at(t)));
  return out;
}

/// Inverse of encode_table. Total on finite inputs; datetime values are
/// rounded to whole seconds.
inline std::vector<AttributeColumn> decode_table(const Matrix& features, const TableCodec& codec) {
  if (static_cast<std::size_t>(features.cols()) != codec.dim()) {
    throw DataError("feature width " + std::to_string(features.cols()) + " does not match codec width " +
                    std::to_string(codec.dim()));
  }
  std::vector<AttributeColumn> out;
  for (std::size_t a = 0; a < codec.dim(); ++a) {
    const auto& cc = codec.columns[a];
    AttributeColumn column{cc.kind(), {}, {}};
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
      const double y = features(r, static_cast<Eigen::Index>(a));
      if (!std::isfinite(y)) throw NumericError("cannot decode a non-finite feature value");
      if (cc.kind() == ColumnKind::kCategorical) {
        column.labels.push_back(cc.decode_label(y));
      } else {
        double x = cc.decode_number(y);
        if (cc.kind() == ColumnKind::kDatetime) x = std::round(x);
        column.numbers.push_back(x);
      }
    }
    out.push_back(std::move(column));
  }
  return out;
}

inline std::vector<std::vector<AttributeColumn>> decode_features(const std::vector<Matrix>& features,
                                                                 const CodecBundle& codecs) {
  std::vector<std::vector<AttributeColumn>> out;
  for (std::size_t t = 0; t < features.size(); ++t) out.push_back(decode_table(features[t], codecs.at(t)));
  return out;
}

inline nlohmann::json codecs_to_json(const CodecBundle& codecs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& table : codecs) {
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& column : table.columns) columns.push_back(column.to_json());
    out.push_back(std::move(columns));
  }
  return out;
}

inline CodecBundle codecs_from_json(const nlohmann::json& j) {
  CodecBundle bundle;
  for (const auto& jt : j) {
    TableCodec table;
    for (const auto& jc : jt) table.columns.push_back(ColumnCodec::from_json(jc));
    bundle.push_back(std::move(table));
  }
  return bundle;
}

}  // namespace relsynth
