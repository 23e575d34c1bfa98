#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace hrep {

/// In-memory sorted buffer of encoded records. Not synchronized; the owning
/// store serializes access.
class MemTable {
 public:
  using Map = std::map<std::string, std::string, std::less<>>;

  void insert(std::string key, std::string value) {
    bytes_ += key.size() + value.size();
    entries_.insert_or_assign(std::move(key), std::move(value));
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t size_bytes() const { return bytes_; }
  const Map& entries() const { return entries_; }

  void clear() {
    entries_.clear();
    bytes_ = 0;
  }

 private:
  Map entries_;
  std::size_t bytes_ = 0;
};

}  // namespace hrep
