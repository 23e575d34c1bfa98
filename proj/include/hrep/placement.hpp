#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hrep/encoding.hpp"
#include "hrep/error.hpp"
#include "hrep/value.hpp"

namespace hrep {

/// 64-bit FNV-1a; stable across platforms and runs.
inline std::uint64_t hash64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Logical node for one replica of a partition: (hash(partition) + replica_id) mod V.
/// Consecutive replica ids land on distinct nodes whenever V >= replica count.
/// A table without a partition key hashes the empty byte string.
inline std::size_t place_replica(std::size_t replica_id, const std::optional<Value>& partition,
                                 std::optional<Datatype> partition_type, std::size_t virtual_nodes) {
  if (virtual_nodes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one virtual node");
  std::string encoded;
  if (partition) {
    if (!partition_type) throw Error(ErrorCode::TypeMismatch, "partition value without a partition column");
    enc::put_value(encoded, *partition_type, *partition);
  }
  auto base = hash64(encoded) % virtual_nodes;
  return static_cast<std::size_t>((base + replica_id % virtual_nodes) % virtual_nodes);
}

}  // namespace hrep
