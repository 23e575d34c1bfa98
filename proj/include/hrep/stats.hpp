#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/schema.hpp"
#include "hrep/value.hpp"

namespace hrep {

/// Exact empirical distribution of one clustering column.
///
/// `values` is sorted and distinct; `counts[i]` is the number of rows holding
/// `values[i]`; `below[i]` is the number of rows holding a value strictly less
/// than `values[i]`. The distribution function follows the strict-lower
/// convention F(v) = P[x < v], so a half-open range [s, e) has mass F(e) - F(s).
struct ColumnDistribution {
  std::string name;
  Datatype type = Datatype::Int64;
  std::vector<Value> values;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> below;
  std::uint64_t total = 0;

  std::uint64_t count_of(const Value& v) const {
    auto it = std::lower_bound(values.begin(), values.end(), v);
    if (it == values.end() || *it != v) return 0;
    return counts[static_cast<std::size_t>(it - values.begin())];
  }

  /// Rows with x < v.
  std::uint64_t count_below(const Value& v) const {
    auto it = std::lower_bound(values.begin(), values.end(), v);
    if (it == values.end()) return total;
    return below[static_cast<std::size_t>(it - values.begin())];
  }

  /// Rows with s <= x < e.
  std::uint64_t count_in(const Value& s, const Value& e) const {
    auto lo = count_below(s);
    auto hi = count_below(e);
    return hi > lo ? hi - lo : 0;
  }

  double pmf(const Value& v) const { return static_cast<double>(count_of(v)) / total; }
  double cdf(const Value& v) const { return static_cast<double>(count_below(v)) / total; }

  const Value& min() const { return values.front(); }
  const Value& max() const { return values.back(); }

  /// The value at position `rank` of the sorted column, 0 <= rank < total.
  const Value& value_at_rank(std::uint64_t rank) const {
    auto it = std::upper_bound(below.begin(), below.end(), rank);
    return values[static_cast<std::size_t>(it - below.begin()) - 1];
  }

  void rebuild_cumulative() {
    below.resize(counts.size());
    std::uint64_t run = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      below[i] = run;
      run += counts[i];
    }
    total = run;
  }
};

class ColumnStats {
 public:
  ColumnStats() = default;
  ColumnStats(std::uint64_t total_rows, std::vector<ColumnDistribution> columns)
      : total_rows_(total_rows), columns_(std::move(columns)) {}

  std::uint64_t total_rows() const { return total_rows_; }
  const std::vector<ColumnDistribution>& columns() const { return columns_; }

  const ColumnDistribution* find(std::string_view name) const {
    for (const auto& c : columns_)
      if (c.name == name) return &c;
    return nullptr;
  }

  const ColumnDistribution& column(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw Error(ErrorCode::UnknownColumn, "no statistics for '" + std::string(name) + "'",
                std::string(name));
  }

 private:
  std::uint64_t total_rows_ = 0;
  std::vector<ColumnDistribution> columns_;
};

/// Streaming accumulator for ColumnStats; feed rows, then call build().
class StatsBuilder {
 public:
  explicit StatsBuilder(const Schema& schema) : schema_(&schema) {
    counts_.resize(schema.key_count());
  }

  void add(const Row& row) {
    schema_->validate_row(row);
    add_unchecked(row);
  }

  void add_unchecked(const Row& row) {
    const auto& keys = schema_->clustering_indices();
    for (std::size_t k = 0; k < keys.size(); ++k) ++counts_[k][row[keys[k]]];
    ++rows_;
  }

  std::uint64_t rows() const { return rows_; }

  ColumnStats build() const {
    if (rows_ == 0) throw Error(ErrorCode::EmptyDataset, "no rows to build statistics from");
    std::vector<ColumnDistribution> cols;
    const auto& keys = schema_->clustering_indices();
    for (std::size_t k = 0; k < keys.size(); ++k) {
      ColumnDistribution d;
      d.name = schema_->column(keys[k]).name;
      d.type = schema_->column(keys[k]).type;
      std::vector<std::pair<Value, std::uint64_t>> entries(counts_[k].begin(), counts_[k].end());
      std::sort(entries.begin(), entries.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [v, n] : entries) {
        d.values.push_back(v);
        d.counts.push_back(n);
      }
      d.rebuild_cumulative();
      cols.push_back(std::move(d));
    }
    return ColumnStats(rows_, std::move(cols));
  }

 private:
  const Schema* schema_;
  std::vector<std::unordered_map<Value, std::uint64_t>> counts_;
  std::uint64_t rows_ = 0;
};

template <typename Rows>
ColumnStats build_stats(const Rows& rows, const Schema& schema) {
  StatsBuilder builder(schema);
  for (const auto& row : rows) builder.add(row);
  return builder.build();
}

inline double pmf(const ColumnStats& stats, std::string_view column, const Value& value) {
  return stats.column(column).pmf(value);
}

inline double cdf(const ColumnStats& stats, std::string_view column, const Value& value) {
  return stats.column(column).cdf(value);
}

}  // namespace hrep
