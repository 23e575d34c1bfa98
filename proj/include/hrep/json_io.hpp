#pragma once

// JSON documents: schema.json, layouts.json, stats.json, costmodel.json,
// workload.json. Values are written as JSON numbers or strings according to
// the column datatype, so reading needs the schema.

#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrep/cost_model.hpp"
#include "hrep/error.hpp"
#include "hrep/query.hpp"
#include "hrep/schema.hpp"
#include "hrep/stats.hpp"
#include "hrep/workload.hpp"

namespace hrep::json {

using nlohmann::json;

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
    if (len == 0 || i + len > s.size()) return false;
    std::uint32_t cp = len == 1 ? c : c & (0x7f >> len);
    for (std::size_t k = 1; k < len; ++k) {
      auto d = static_cast<unsigned char>(s[i + k]);
      if ((d >> 6) != 0x2) return false;
      cp = (cp << 6) | (d & 0x3f);
    }
    static constexpr std::uint32_t min_cp[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += len;
  }
  return true;
}

// Strings that are not valid UTF-8 are written as {"hex": "..."}; infinities
// and NaN as the strings "inf", "-inf", "nan".
inline json value_to_json(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::isfinite(*d)) return *d;
    return std::isnan(*d) ? "nan" : *d > 0 ? "inf" : "-inf";
  }
  const auto& s = std::get<std::string>(v);
  if (valid_utf8(s)) return s;
  static constexpr char digits[] = "0123456789abcdef";
  std::string hex;
  for (unsigned char c : s) hex += {digits[c >> 4], digits[c & 15]};
  return json{{"hex", hex}};
}

inline Value value_from_json(Datatype type, const json& j) {
  switch (type) {
    case Datatype::Int64:
    case Datatype::Date:
      if (!j.is_number_integer()) throw Error(ErrorCode::TypeMismatch, "expected an integer, got " + j.dump());
      return j.get<std::int64_t>();
    case Datatype::Float64:
      if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
      }
      if (!j.is_number()) throw Error(ErrorCode::TypeMismatch, "expected a number, got " + j.dump());
      return j.get<double>();
    case Datatype::String:
      if (j.is_object() && j.contains("hex") && j.at("hex").is_string()) {
        auto hex = j.at("hex").get<std::string>();
        auto nibble = [&](char c) -> int {
          if (c >= '0' && c <= '9') return c - '0';
          if (c >= 'a' && c <= 'f') return c - 'a' + 10;
          throw Error(ErrorCode::TypeMismatch, "bad hex string " + j.dump());
        };
        if (hex.size() % 2) throw Error(ErrorCode::TypeMismatch, "bad hex string " + j.dump());
        std::string out;
        for (std::size_t i = 0; i < hex.size(); i += 2) out.push_back(static_cast<char>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
        return out;
      }
      if (!j.is_string()) throw Error(ErrorCode::TypeMismatch, "expected a string, got " + j.dump());
      return j.get<std::string>();
  }
  return {};
}

inline json to_json(const Schema& s) {
  json cols = json::array();
  for (const auto& c : s.columns())
    cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}, {"datatype", to_string(c.type)}});
  return {{"table", s.table()}, {"columns", cols}};
}

inline Schema schema_from_json(const json& j) {
  std::vector<ColumnDef> cols;
  for (const auto& c : j.at("columns"))
    cols.push_back({c.at("name").get<std::string>(), parse_column_kind(c.at("kind").get<std::string>()),
                    parse_datatype(c.at("datatype").get<std::string>())});
  return Schema(j.at("table").get<std::string>(), std::move(cols));
}

inline json to_json(const std::vector<ReplicaLayout>& layouts) {
  json arr = json::array();
  for (const auto& l : layouts) arr.push_back({{"replica_id", l.replica_id}, {"order", l.order}});
  return arr;
}

inline std::vector<ReplicaLayout> layouts_from_json(const json& j) {
  const json& arr = j.is_object() ? j.at("layouts") : j;
  std::vector<ReplicaLayout> out;
  for (const auto& l : arr)
    out.push_back({l.at("replica_id").get<std::size_t>(), l.at("order").get<std::vector<std::string>>()});
  return out;
}

/// pmf is stored as sorted [value, count] pairs so the file stays exact.
inline json to_json(const ColumnStats& s) {
  json cols = json::array();
  for (const auto& c : s.columns()) {
    json pmf = json::array();
    for (std::size_t i = 0; i < c.values.size(); ++i) pmf.push_back({value_to_json(c.values[i]), c.counts[i]});
    cols.push_back({{"name", c.name},
                    {"datatype", to_string(c.type)},
                    {"min", value_to_json(c.min())},
                    {"max", value_to_json(c.max())},
                    {"pmf", pmf}});
  }
  return {{"total_rows", s.total_rows()}, {"columns", cols}};
}

inline ColumnStats stats_from_json(const json& j) {
  std::vector<ColumnDistribution> cols;
  const auto total = j.at("total_rows").get<std::uint64_t>();
  for (const auto& c : j.at("columns")) {
    ColumnDistribution d;
    d.name = c.at("name").get<std::string>();
    d.type = parse_datatype(c.at("datatype").get<std::string>());
    for (const auto& pair : c.at("pmf")) {
      d.values.push_back(value_from_json(d.type, pair.at(0)));
      d.counts.push_back(pair.at(1).get<std::uint64_t>());
    }
    if (!std::is_sorted(d.values.begin(), d.values.end()) ||
        std::adjacent_find(d.values.begin(), d.values.end()) != d.values.end())
      throw Error(ErrorCode::InvalidArgument, "pmf values of '" + d.name + "' are not strictly sorted", d.name);
    d.rebuild_cumulative();
    if (d.total != total)
      throw Error(ErrorCode::InvalidArgument, "counts of '" + d.name + "' do not sum to total_rows", d.name);
    cols.push_back(std::move(d));
  }
  return ColumnStats(total, std::move(cols));
}

inline json to_json(const LatencyModel& m) {
  json arr = json::array();
  for (const auto& [keys, f] : m.fits())
    arr.push_back({{"key_count", keys},
                   {"slope", f.slope},
                   {"intercept", f.intercept},
                   {"r2", f.r2},
                   {"residual_variance", f.residual_variance},
                   {"samples", f.samples}});
  return {{"models", arr}};
}

inline LatencyModel latency_model_from_json(const json& j) {
  std::map<std::size_t, LinearFit> fits;
  for (const auto& e : j.at("models")) {
    LinearFit f;
    f.slope = e.at("slope").get<double>();
    f.intercept = e.at("intercept").get<double>();
    f.r2 = e.value("r2", 0.0);
    f.residual_variance = e.value("residual_variance", 0.0);
    f.samples = e.value("samples", std::size_t{0});
    fits[e.at("key_count").get<std::size_t>()] = f;
  }
  return LatencyModel(std::move(fits));
}

inline json to_json(const Query& q) {
  json filters = json::array();
  for (const auto& f : q.filters) {
    json e{{"column", f.column}};
    switch (f.kind) {
      case FilterKind::Equality:
        e["kind"] = "eq";
        e["value"] = value_to_json(f.lo);
        break;
      case FilterKind::Range:
        e["kind"] = "range";
        e["start"] = value_to_json(f.lo);
        e["end"] = value_to_json(f.hi);
        break;
      case FilterKind::Global: e["kind"] = "global"; break;
    }
    filters.push_back(e);
  }
  json out{{"filters", filters}, {"projection", q.projection}};
  if (q.sum_column) out["aggregate"] = {{"sum", *q.sum_column}};
  return out;
}

inline Query query_from_json(const json& j, const Schema& schema) {
  Query q;
  for (const auto& e : j.at("filters")) {
    auto column = e.at("column").get<std::string>();
    auto type = schema.column(schema.index_of(column)).type;
    auto kind = e.at("kind").get<std::string>();
    if (kind == "eq")
      q.filters.push_back(Filter::eq(column, value_from_json(type, e.at("value"))));
    else if (kind == "range")
      q.filters.push_back(Filter::range(column, value_from_json(type, e.at("start")), value_from_json(type, e.at("end"))));
    else if (kind == "global")
      q.filters.push_back(Filter::global(column));
    else
      throw Error(ErrorCode::InvalidArgument, "unknown filter kind '" + kind + "'", column);
  }
  if (j.contains("projection")) q.projection = j.at("projection").get<std::vector<std::string>>();
  if (j.contains("aggregate")) q.sum_column = j.at("aggregate").at("sum").get<std::string>();
  return normalize(q, schema);
}

inline json to_json(const Workload& w) {
  json qs = json::array();
  for (const auto& q : w.queries) qs.push_back(to_json(q));
  return {{"template", w.template_name}, {"seed", w.seed}, {"queries", qs}};
}

inline Workload workload_from_json(const json& j, const Schema& schema) {
  Workload w;
  w.template_name = j.value("template", std::string("custom"));
  w.seed = j.value("seed", std::uint64_t{0});
  for (const auto& q : j.at("queries")) w.queries.push_back(query_from_json(q, schema));
  if (w.queries.empty()) throw Error(ErrorCode::EmptyWorkload, "workload file has no queries");
  return w;
}

inline json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

inline void write_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

}  // namespace hrep::json
