#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/schema.hpp"
#include "hrep/value.hpp"

namespace hrep {

enum class FilterKind { Equality, Range, Global };

/// Predicate on one clustering key. Ranges are half-open: lo <= x < hi.
struct Filter {
  std::string column;
  FilterKind kind = FilterKind::Global;
  Value lo;  // equality value, or range start
  Value hi;  // range end (exclusive)

  static Filter eq(std::string column, Value v) {
    return {std::move(column), FilterKind::Equality, std::move(v), {}};
  }
  static Filter range(std::string column, Value lo, Value hi) {
    return {std::move(column), FilterKind::Range, std::move(lo), std::move(hi)};
  }
  static Filter global(std::string column) { return {std::move(column), FilterKind::Global, {}, {}}; }

  bool accepts(const Value& v) const {
    switch (kind) {
      case FilterKind::Equality: return v == lo;
      case FilterKind::Range: return !(v < lo) && v < hi;
      case FilterKind::Global: return true;
    }
    return false;
  }

  friend bool operator==(const Filter&, const Filter&) = default;
};

struct Query {
  std::vector<Filter> filters;
  std::vector<std::string> projection;
  std::optional<std::string> sum_column;

  const Filter* filter_for(std::string_view column) const {
    for (const auto& f : filters)
      if (f.column == column) return &f;
    return nullptr;
  }

  friend bool operator==(const Query&, const Query&) = default;
};

/// Gives every clustering key exactly one filter (missing keys become global),
/// ordered as the schema declares its clustering keys.
inline Query normalize(const Query& query, const Schema& schema) {
  std::unordered_set<std::string> seen;
  for (const auto& f : query.filters) {
    if (!schema.is_clustering(f.column))
      throw Error(ErrorCode::UnknownColumn, "'" + f.column + "' is not a clustering key", f.column);
    if (!seen.insert(f.column).second)
      throw Error(ErrorCode::DuplicateFilter, "two filters on '" + f.column + "'", f.column);
    auto type = schema.column(schema.index_of(f.column)).type;
    if (f.kind == FilterKind::Equality && !conforms(type, f.lo))
      throw Error(ErrorCode::TypeMismatch, "filter literal type for '" + f.column + "'", f.column);
    if (f.kind == FilterKind::Range) {
      if (!conforms(type, f.lo) || !conforms(type, f.hi))
        throw Error(ErrorCode::TypeMismatch, "range literal type for '" + f.column + "'", f.column);
      if (!(f.lo < f.hi))
        throw Error(ErrorCode::EmptyRange, "range on '" + f.column + "' has start >= end", f.column);
    }
  }
  for (const auto& p : query.projection) schema.index_of(p);
  if (query.sum_column) {
    auto type = schema.column(schema.index_of(*query.sum_column)).type;
    if (type == Datatype::String)
      throw Error(ErrorCode::TypeMismatch, "cannot sum a string column", *query.sum_column);
  }

  Query out;
  out.projection = query.projection;
  out.sum_column = query.sum_column;
  for (const auto& key : schema.clustering_keys()) {
    if (const auto* f = query.filter_for(key))
      out.filters.push_back(*f);
    else
      out.filters.push_back(Filter::global(key));
  }
  return out;
}

inline bool is_normalized(const Query& query, const Schema& schema) {
  auto keys = schema.clustering_keys();
  if (query.filters.size() != keys.size()) return false;
  for (const auto& k : keys)
    if (!query.filter_for(k)) return false;
  return true;
}

/// Full predicate evaluation over a schema-ordered row.
inline bool matches(const Query& query, const Schema& schema, const Row& row) {
  for (const auto& f : query.filters)
    if (!f.accepts(row[schema.index_of(f.column)])) return false;
  return true;
}

}  // namespace hrep
