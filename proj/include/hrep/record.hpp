#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "hrep/encoding.hpp"
#include "hrep/schema.hpp"

namespace hrep {

/// Serializes the non-clustering columns of a row (partition and values).
/// The clustering columns live in the composite key and are not repeated here.
class PayloadCodec {
 public:
  PayloadCodec() = default;
  explicit PayloadCodec(const Schema& schema) : columns_(schema.payload_indices()) {
    for (auto c : columns_) types_.push_back(schema.column(c).type);
  }

  std::string encode(const Row& row) const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      const auto& v = row[columns_[i]];
      switch (types_[i]) {
        case Datatype::Int64:
        case Datatype::Date:
          enc::put_u64(out, static_cast<std::uint64_t>(std::get<std::int64_t>(v)));
          break;
        case Datatype::Float64: enc::put_u64(out, std::bit_cast<std::uint64_t>(std::get<double>(v))); break;
        case Datatype::String: {
          const auto& s = std::get<std::string>(v);
          enc::put_u32(out, static_cast<std::uint32_t>(s.size()));
          out += s;
          break;
        }
      }
    }
    return out;
  }

  void decode(std::string_view bytes, Row& row) const {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) throw Error(ErrorCode::CorruptTable, "truncated payload");
    };
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      switch (types_[i]) {
        case Datatype::Int64:
        case Datatype::Date:
          need(8);
          row[columns_[i]] = static_cast<std::int64_t>(enc::get_u64(p + pos));
          pos += 8;
          break;
        case Datatype::Float64:
          need(8);
          row[columns_[i]] = std::bit_cast<double>(enc::get_u64(p + pos));
          pos += 8;
          break;
        case Datatype::String: {
          need(4);
          auto len = enc::get_u32(p + pos);
          pos += 4;
          need(len);
          row[columns_[i]] = std::string(bytes.substr(pos, len));
          pos += len;
          break;
        }
      }
    }
    if (pos != bytes.size()) throw Error(ErrorCode::CorruptTable, "payload has trailing bytes");
  }

 private:
  std::vector<std::size_t> columns_;
  std::vector<Datatype> types_;
};

/// Key + payload codec for one replica: turns rows into (key, value) records and back.
class RecordCodec {
 public:
  RecordCodec() = default;
  RecordCodec(const Schema& schema, const ReplicaLayout& layout)
      : width_(schema.columns().size()), keys_(schema, layout), payload_(schema) {}

  const KeyCodec& keys() const { return keys_; }
  const PayloadCodec& payload() const { return payload_; }

  std::string encode_key(const Row& row, std::uint64_t seq) const { return keys_.encode_row(row, seq); }
  std::string encode_value(const Row& row) const { return payload_.encode(row); }

  /// Decodes a stored record back into a schema-ordered row.
  Row decode(std::string_view key, std::string_view value, std::uint64_t* seq = nullptr) const {
    Row row(width_);
    std::vector<Value> parts;
    auto s = keys_.decode(key, parts);
    for (std::size_t i = 0; i < parts.size(); ++i) row[keys_.columns()[i]] = std::move(parts[i]);
    payload_.decode(value, row);
    if (seq) *seq = s;
    return row;
  }

 private:
  std::size_t width_ = 0;
  KeyCodec keys_;
  PayloadCodec payload_;
};

}  // namespace hrep
