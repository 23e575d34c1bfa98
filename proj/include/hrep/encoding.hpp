#pragma once

// Memcomparable key encoding: byte-lexicographic order of an encoded tuple
// equals the typed lexicographic order of the tuple.
//
//   int64 / date : 8 bytes big-endian, sign bit flipped
//   float64      : 8 bytes big-endian; positives get the sign bit set,
//                  negatives are bitwise inverted; -0.0 encodes as +0.0
//   utf8         : raw bytes with 0x00 escaped as 0x00 0xFF, terminated by 0x00 0x01
//   sequence     : trailing 8 bytes big-endian, breaks ties between equal tuples

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/schema.hpp"
#include "hrep/value.hpp"

namespace hrep {

namespace enc {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

constexpr std::uint64_t kSignBit = std::uint64_t{1} << 63;

inline void put_int64(std::string& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v) ^ kSignBit);
}

inline void put_float64(std::string& out, double v) {
  if (v == 0.0) v = 0.0;
  auto bits = std::bit_cast<std::uint64_t>(v);
  bits = (bits & kSignBit) ? ~bits : (bits | kSignBit);
  put_u64(out, bits);
}

inline void put_string(std::string& out, std::string_view s) {
  for (char c : s) {
    out.push_back(c);
    if (c == '\0') out.push_back('\xFF');
  }
  out.push_back('\0');
  out.push_back('\x01');
}

inline void put_value(std::string& out, Datatype type, const Value& v) {
  if (!conforms(type, v))
    throw Error(ErrorCode::TypeMismatch,
                "value does not match key type " + std::string(to_string(type)));
  switch (type) {
    case Datatype::Int64:
    case Datatype::Date: put_int64(out, std::get<std::int64_t>(v)); break;
    case Datatype::Float64: put_float64(out, std::get<double>(v)); break;
    case Datatype::String: put_string(out, std::get<std::string>(v)); break;
  }
}

/// Reads one encoded component starting at `pos`, advancing it.
inline Value get_value(std::string_view bytes, std::size_t& pos, Datatype type) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  switch (type) {
    case Datatype::Int64:
    case Datatype::Date: {
      if (pos + 8 > bytes.size()) throw Error(ErrorCode::CorruptTable, "truncated int64 key part");
      auto v = static_cast<std::int64_t>(get_u64(p + pos) ^ kSignBit);
      pos += 8;
      return v;
    }
    case Datatype::Float64: {
      if (pos + 8 > bytes.size()) throw Error(ErrorCode::CorruptTable, "truncated float64 key part");
      auto bits = get_u64(p + pos);
      bits = (bits & kSignBit) ? (bits & ~kSignBit) : ~bits;
      pos += 8;
      return std::bit_cast<double>(bits);
    }
    case Datatype::String: {
      std::string s;
      while (true) {
        if (pos >= bytes.size())
          throw Error(ErrorCode::CorruptTable, "unterminated string key part");
        unsigned char c = p[pos];
        if (c != 0) {
          s.push_back(static_cast<char>(c));
          ++pos;
          continue;
        }
        if (pos + 1 >= bytes.size()) throw Error(ErrorCode::CorruptTable, "unterminated string key part");
        unsigned char next = p[pos + 1];
        pos += 2;
        if (next == 0x01) return s;
        if (next != 0xFF) throw Error(ErrorCode::CorruptTable, "bad string escape in key");
        s.push_back('\0');
      }
    }
  }
  return {};
}

/// Smallest byte string greater than every string that starts with `prefix`;
/// nullopt when no such bound exists (prefix empty or all 0xFF).
inline std::optional<std::string> prefix_successor(std::string prefix) {
  while (!prefix.empty()) {
    auto last = static_cast<unsigned char>(prefix.back());
    if (last != 0xFF) {
      prefix.back() = static_cast<char>(last + 1);
      return prefix;
    }
    prefix.pop_back();
  }
  return std::nullopt;
}

}  // namespace enc

/// Encodes and decodes composite keys for one replica layout.
class KeyCodec {
 public:
  KeyCodec() = default;
  KeyCodec(const Schema& schema, const ReplicaLayout& layout)
      : columns_(resolve_layout(schema, layout)) {
    for (auto c : columns_) types_.push_back(schema.column(c).type);
  }

  std::size_t width() const { return columns_.size(); }
  /// Schema column index of layout position i.
  const std::vector<std::size_t>& columns() const { return columns_; }
  const std::vector<Datatype>& types() const { return types_; }

  /// Key for a full schema-ordered row.
  std::string encode_row(const Row& row, std::uint64_t seq) const {
    std::string out;
    out.reserve(columns_.size() * 9 + 8);
    for (std::size_t i = 0; i < columns_.size(); ++i) enc::put_value(out, types_[i], row[columns_[i]]);
    enc::put_u64(out, seq);
    return out;
  }

  /// Encodes the first `values.size()` layout components (no sequence number).
  std::string encode_prefix(std::span<const Value> values) const {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) enc::put_value(out, types_[i], values[i]);
    return out;
  }

  /// Decodes a full key into layout-ordered values; returns the sequence number.
  std::uint64_t decode(std::string_view key, std::vector<Value>& values) const {
    values.resize(columns_.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) values[i] = enc::get_value(key, pos, types_[i]);
    if (pos + 8 != key.size()) throw Error(ErrorCode::CorruptTable, "bad key length");
    return enc::get_u64(reinterpret_cast<const unsigned char*>(key.data()) + pos);
  }

  /// Decodes only the first `count` layout components.
  void decode_prefix(std::string_view key, std::size_t count, std::vector<Value>& values) const {
    values.resize(count);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < count; ++i) values[i] = enc::get_value(key, pos, types_[i]);
  }

  static std::uint64_t sequence_of(std::string_view key) {
    if (key.size() < 8) throw Error(ErrorCode::CorruptTable, "key shorter than sequence number");
    return enc::get_u64(reinterpret_cast<const unsigned char*>(key.data()) + key.size() - 8);
  }

 private:
  std::vector<std::size_t> columns_;
  std::vector<Datatype> types_;
};

/// Composite key for clustering values given in schema clustering order.
inline std::string encode_key(const Schema& schema, const ReplicaLayout& layout,
                              std::span<const Value> clustering_values, std::uint64_t seq) {
  const auto& keys = schema.clustering_indices();
  if (clustering_values.size() != keys.size())
    throw Error(ErrorCode::TypeMismatch, "expected one value per clustering key");
  Row row(schema.columns().size());
  for (std::size_t k = 0; k < keys.size(); ++k) row[keys[k]] = clustering_values[k];
  return KeyCodec(schema, layout).encode_row(row, seq);
}

}  // namespace hrep
