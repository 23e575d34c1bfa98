#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/value.hpp"

namespace hrep {

enum class ColumnKind { PartitionKey, ClusteringKey, Value };

constexpr std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::PartitionKey: return "partition-key";
    case ColumnKind::ClusteringKey: return "clustering-key";
    case ColumnKind::Value: return "value";
  }
  return "?";
}

inline ColumnKind parse_column_kind(std::string_view text) {
  if (text == "partition-key") return ColumnKind::PartitionKey;
  if (text == "clustering-key") return ColumnKind::ClusteringKey;
  if (text == "value") return ColumnKind::Value;
  throw Error(ErrorCode::InvalidSchema, "unknown column kind '" + std::string(text) + "'");
}

struct ColumnDef {
  std::string name;
  ColumnKind kind = ColumnKind::Value;
  Datatype type = Datatype::Int64;

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

/// A row holds one value per schema column, in schema column order.
using Row = std::vector<Value>;

class Schema {
 public:
  Schema() = default;

  Schema(std::string table, std::vector<ColumnDef> columns)
      : table_(std::move(table)), columns_(std::move(columns)) {
    std::unordered_set<std::string> seen;
    std::size_t partitions = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      const auto& c = columns_[i];
      if (c.name.empty()) throw Error(ErrorCode::InvalidSchema, "empty column name");
      if (!seen.insert(c.name).second)
        throw Error(ErrorCode::InvalidSchema, "duplicate column '" + c.name + "'", c.name);
      switch (c.kind) {
        case ColumnKind::ClusteringKey: clustering_.push_back(i); break;
        case ColumnKind::PartitionKey:
          ++partitions;
          partition_ = i;
          break;
        case ColumnKind::Value: values_.push_back(i); break;
      }
    }
    if (clustering_.empty())
      throw Error(ErrorCode::InvalidSchema, "schema needs at least one clustering key");
    if (partitions > 1)
      throw Error(ErrorCode::InvalidSchema, "schema allows at most one partition key");
  }

  const std::string& table() const { return table_; }
  const std::vector<ColumnDef>& columns() const { return columns_; }
  const ColumnDef& column(std::size_t i) const { return columns_.at(i); }

  std::size_t key_count() const { return clustering_.size(); }

  /// Column indices of the clustering keys, in declaration order.
  const std::vector<std::size_t>& clustering_indices() const { return clustering_; }
  /// Column indices of every non-clustering column (partition + values), in order.
  std::vector<std::size_t> payload_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].kind != ColumnKind::ClusteringKey) out.push_back(i);
    return out;
  }
  const std::vector<std::size_t>& value_indices() const { return values_; }
  std::optional<std::size_t> partition_index() const { return partition_; }

  std::vector<std::string> clustering_keys() const {
    std::vector<std::string> out;
    for (auto i : clustering_) out.push_back(columns_[i].name);
    return out;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error(ErrorCode::UnknownColumn, "unknown column '" + std::string(name) + "'",
                std::string(name));
  }

  bool is_clustering(std::string_view name) const {
    auto i = find(name);
    return i && columns_[*i].kind == ColumnKind::ClusteringKey;
  }

  void validate_row(const Row& row) const {
    if (row.size() != columns_.size())
      throw Error(ErrorCode::TypeMismatch, "row has " + std::to_string(row.size()) +
                                               " values, schema has " +
                                               std::to_string(columns_.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
      if (!conforms(columns_[i].type, row[i]))
        throw Error(ErrorCode::TypeMismatch,
                    "column '" + columns_[i].name + "' expects " +
                        std::string(to_string(columns_[i].type)),
                    columns_[i].name);
  }

  friend bool operator==(const Schema& a, const Schema& b) {
    return a.table_ == b.table_ && a.columns_ == b.columns_;
  }

 private:
  std::string table_;
  std::vector<ColumnDef> columns_;
  std::vector<std::size_t> clustering_;
  std::vector<std::size_t> values_;
  std::optional<std::size_t> partition_;
};

/// The on-disk structure of one replica: the order its clustering keys sort in.
struct ReplicaLayout {
  std::size_t replica_id = 0;
  std::vector<std::string> order;

  friend bool operator==(const ReplicaLayout&, const ReplicaLayout&) = default;
};

/// Throws UnknownKey, DuplicateKey or MissingKey (in that precedence) naming the
/// offending column unless `layout.order` is a permutation of the clustering keys.
inline void validate_layout(const Schema& schema, const ReplicaLayout& layout) {
  std::unordered_set<std::string> seen;
  for (const auto& name : layout.order) {
    if (!schema.is_clustering(name))
      throw Error(ErrorCode::UnknownKey, "'" + name + "' is not a clustering key", name);
    if (!seen.insert(name).second)
      throw Error(ErrorCode::DuplicateKey, "'" + name + "' appears twice", name);
  }
  for (const auto& name : schema.clustering_keys())
    if (!seen.contains(name))
      throw Error(ErrorCode::MissingKey, "layout lacks '" + name + "'", name);
}

/// Schema column indices of the layout's keys, in layout order.
inline std::vector<std::size_t> resolve_layout(const Schema& schema, const ReplicaLayout& layout) {
  validate_layout(schema, layout);
  std::vector<std::size_t> out;
  out.reserve(layout.order.size());
  for (const auto& name : layout.order) out.push_back(schema.index_of(name));
  return out;
}

inline ReplicaLayout identity_layout(const Schema& schema, std::size_t replica_id = 0) {
  return {replica_id, schema.clustering_keys()};
}

inline std::string layout_string(const ReplicaLayout& layout) {
  std::string out = "(";
  for (std::size_t i = 0; i < layout.order.size(); ++i) {
    if (i) out += ",";
    out += layout.order[i];
  }
  return out + ")";
}

}  // namespace hrep
