#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <variant>

#include "hrep/error.hpp"

namespace hrep {

enum class Datatype { Int64, Date, String, Float64 };

/// A single scalar cell. Dates are int64 days since 1970-01-01.
using Value = std::variant<std::int64_t, double, std::string>;

constexpr std::string_view to_string(Datatype type) {
  switch (type) {
    case Datatype::Int64: return "int64";
    case Datatype::Date: return "date";
    case Datatype::String: return "utf8";
    case Datatype::Float64: return "float64";
  }
  return "?";
}

inline Datatype parse_datatype(std::string_view text) {
  if (text == "int64") return Datatype::Int64;
  if (text == "date") return Datatype::Date;
  if (text == "utf8" || text == "string") return Datatype::String;
  if (text == "float64" || text == "double") return Datatype::Float64;
  throw Error(ErrorCode::InvalidSchema, "unknown datatype '" + std::string(text) + "'");
}

/// Index of the Value alternative used to carry a datatype.
constexpr std::size_t storage_index(Datatype type) {
  switch (type) {
    case Datatype::Int64:
    case Datatype::Date: return 0;
    case Datatype::Float64: return 1;
    case Datatype::String: return 2;
  }
  return 0;
}

inline bool conforms(Datatype type, const Value& v) {
  if (v.index() != storage_index(type)) return false;
  if (const auto* d = std::get_if<double>(&v)) return !std::isnan(*d);
  return true;
}

inline std::string format_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", *d);
    return buf;
  }
  return std::get<std::string>(v);
}

inline Value parse_value(Datatype type, std::string_view text) {
  switch (type) {
    case Datatype::Int64:
    case Datatype::Date: {
      std::int64_t out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error(ErrorCode::TypeMismatch, "not an int64: '" + std::string(text) + "'");
      return out;
    }
    case Datatype::Float64: {
      std::string tmp(text);
      char* end = nullptr;
      double out = std::strtod(tmp.c_str(), &end);
      if (tmp.empty() || end != tmp.c_str() + tmp.size() || std::isnan(out))
        throw Error(ErrorCode::TypeMismatch, "not a float64: '" + tmp + "'");
      return out;
    }
    case Datatype::String: return std::string(text);
  }
  return std::string(text);
}

/// Three-way comparison of two values of the same datatype.
inline int compare_values(const Value& a, const Value& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace hrep
