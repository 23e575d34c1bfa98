#pragma once

// SSTable file format (all integers big-endian):
//
//   header   "HRSS" | u16 version | u16 key count | { u16 len | key name }*
//   records  { u32 key len | key | u32 value len | value }*   strictly ascending by key
//   footer   u64 record count | u32 len | min key | u32 len | max key |
//            u32 index count | { u32 key len | key | u64 record offset }*
//   trailer  u64 footer offset | u32 crc32 of every preceding byte
//
// The sparse index holds every 64th record (records 0, 64, 128, ...).

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hrep/encoding.hpp"
#include "hrep/error.hpp"

namespace hrep {

inline constexpr char kSSTableMagic[4] = {'H', 'R', 'S', 'S'};
inline constexpr std::uint16_t kSSTableVersion = 1;
inline constexpr std::size_t kIndexInterval = 64;
inline constexpr std::size_t kTrailerSize = 12;

/// Read-only memory mapping of a whole file.
class MappedFile {
 public:
  MappedFile() = default;
  explicit MappedFile(const std::filesystem::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
      ::close(fd);
      throw Error(ErrorCode::IoFailure, "cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
      if (p == MAP_FAILED) {
        ::close(fd);
        throw Error(ErrorCode::IoFailure, "cannot map " + path.string());
      }
      ::madvise(p, size_, MADV_SEQUENTIAL);
      data_ = static_cast<const unsigned char*>(p);
    }
    ::close(fd);
  }
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;
  MappedFile(MappedFile&& o) noexcept : data_(o.data_), size_(o.size_) {
    o.data_ = nullptr;
    o.size_ = 0;
  }
  MappedFile& operator=(MappedFile&& o) noexcept {
    std::swap(data_, o.data_);
    std::swap(size_, o.size_);
    return *this;
  }
  ~MappedFile() {
    if (data_) ::munmap(const_cast<unsigned char*>(data_), size_);
  }

  const unsigned char* data() const { return data_; }
  std::size_t size() const { return size_; }
  std::string_view view() const { return {reinterpret_cast<const char*>(data_), size_}; }

 private:
  const unsigned char* data_ = nullptr;
  std::size_t size_ = 0;
};

struct IndexEntry {
  std::string key;
  std::uint64_t offset = 0;
};

/// Streams strictly ascending records into a new SSTable file. The file is
/// written under a temporary name and renamed into place by finish().
class SSTableWriter {
 public:
  SSTableWriter(std::filesystem::path path, std::vector<std::string> layout_order)
      : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
    file_ = std::fopen(tmp_.c_str(), "wb");
    if (!file_) throw Error(ErrorCode::IoFailure, "cannot create " + tmp_.string());
    buf_.append(kSSTableMagic, 4);
    enc::put_u16(buf_, kSSTableVersion);
    enc::put_u16(buf_, static_cast<std::uint16_t>(layout_order.size()));
    for (const auto& name : layout_order) {
      enc::put_u16(buf_, static_cast<std::uint16_t>(name.size()));
      buf_ += name;
    }
  }

  SSTableWriter(const SSTableWriter&) = delete;
  SSTableWriter& operator=(const SSTableWriter&) = delete;

  ~SSTableWriter() {
    if (file_) {
      std::fclose(file_);
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  void add(std::string_view key, std::string_view value) {
    if (count_ > 0 && !(last_key_ < key))
      throw Error(ErrorCode::CorruptTable, "records must be added in strictly ascending key order");
    std::uint64_t offset = written_ + buf_.size();
    if (count_ % kIndexInterval == 0) index_.push_back({std::string(key), offset});
    if (count_ == 0) min_key_ = key;
    last_key_.assign(key);
    enc::put_u32(buf_, static_cast<std::uint32_t>(key.size()));
    buf_ += key;
    enc::put_u32(buf_, static_cast<std::uint32_t>(value.size()));
    buf_ += value;
    ++count_;
    if (buf_.size() >= (1u << 20)) drain();
  }

  std::uint64_t count() const { return count_; }

  void finish() {
    std::uint64_t footer_offset = written_ + buf_.size();
    enc::put_u64(buf_, count_);
    enc::put_u32(buf_, static_cast<std::uint32_t>(min_key_.size()));
    buf_ += min_key_;
    enc::put_u32(buf_, static_cast<std::uint32_t>(last_key_.size()));
    buf_ += last_key_;
    enc::put_u32(buf_, static_cast<std::uint32_t>(index_.size()));
    for (const auto& e : index_) {
      enc::put_u32(buf_, static_cast<std::uint32_t>(e.key.size()));
      buf_ += e.key;
      enc::put_u64(buf_, e.offset);
    }
    enc::put_u64(buf_, footer_offset);
    drain();
    std::string crc;
    enc::put_u32(crc, static_cast<std::uint32_t>(crc_));
    write_raw(crc);
    bool ok = std::fflush(file_) == 0 && ::fsync(::fileno(file_)) == 0;
    ok = std::fclose(file_) == 0 && ok;
    file_ = nullptr;
    if (!ok) throw Error(ErrorCode::IoFailure, "cannot write " + tmp_.string());
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot rename into " + path_.string());
  }

 private:
  void drain() {
    crc_ = ::crc32(crc_, reinterpret_cast<const Bytef*>(buf_.data()), static_cast<uInt>(buf_.size()));
    write_raw(buf_);
    written_ += buf_.size();
    buf_.clear();
  }

  void write_raw(const std::string& bytes) {
    if (bytes.empty()) return;
    if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size())
      throw Error(ErrorCode::IoFailure, "short write to " + tmp_.string());
  }

  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::FILE* file_ = nullptr;
  std::string buf_;
  std::uint64_t written_ = 0;
  uLong crc_ = ::crc32(0L, Z_NULL, 0);
  std::uint64_t count_ = 0;
  std::string min_key_;
  std::string last_key_;
  std::vector<IndexEntry> index_;
};

class SSTable;

/// Forward cursor over the records of one SSTable. Detects ordering violations.
class TableCursor {
 public:
  TableCursor(const SSTable& table, std::uint64_t pos);

  bool valid() const { return valid_; }
  std::string_view key() const { return key_; }
  std::string_view value() const { return value_; }
  void next();

 private:
  const SSTable* table_;
  std::uint64_t pos_;
  bool valid_ = false;
  std::string_view key_;
  std::string_view value_;
};

/// An immutable, memory-mapped sorted run.
class SSTable {
 public:
  /// Opens and validates `path`. With `verify` the checksum, record order,
  /// record count and sparse index are checked in one pass over the file.
  static std::shared_ptr<const SSTable> open(const std::filesystem::path& path, bool verify = true) {
    auto t = std::shared_ptr<SSTable>(new SSTable(path));
    t->parse(verify);
    return t;
  }

  const std::filesystem::path& path() const { return path_; }
  std::uint64_t record_count() const { return count_; }
  const std::string& min_key() const { return min_key_; }
  const std::string& max_key() const { return max_key_; }
  const std::vector<std::string>& layout_order() const { return layout_; }
  const std::vector<IndexEntry>& index() const { return index_; }
  std::uint64_t file_size() const { return file_.size(); }

  /// Cursor positioned at the first record with key >= lower.
  TableCursor seek(std::string_view lower) const {
    std::uint64_t start = data_begin_;
    auto it = std::upper_bound(index_.begin(), index_.end(), lower,
                               [](std::string_view k, const IndexEntry& e) { return k < e.key; });
    if (it != index_.begin()) start = std::prev(it)->offset;
    TableCursor c(*this, start);
    while (c.valid() && c.key() < lower) c.next();
    return c;
  }

  TableCursor begin() const { return TableCursor(*this, data_begin_); }

 private:
  friend class TableCursor;

  explicit SSTable(std::filesystem::path path) : path_(std::move(path)), file_(path_) {}

  [[noreturn]] void corrupt(const std::string& why) const {
    throw Error(ErrorCode::CorruptTable, path_.string() + ": " + why);
  }

  void need(std::uint64_t pos, std::uint64_t n, std::uint64_t limit) const {
    if (pos + n > limit || pos + n < pos) corrupt("truncated");
  }

  std::string_view read_bytes(std::uint64_t& pos, std::uint64_t limit) const {
    need(pos, 4, limit);
    auto len = enc::get_u32(file_.data() + pos);
    pos += 4;
    need(pos, len, limit);
    std::string_view out(reinterpret_cast<const char*>(file_.data()) + pos, len);
    pos += len;
    return out;
  }

  void parse(bool verify) {
    const auto size = file_.size();
    const auto* p = file_.data();
    if (size < 8 + kTrailerSize || std::memcmp(p, kSSTableMagic, 4) != 0) corrupt("bad magic");
    if (enc::get_u16(p + 4) != kSSTableVersion) corrupt("unsupported version");
    std::uint64_t pos = 8;
    auto keys = enc::get_u16(p + 6);
    for (std::uint16_t i = 0; i < keys; ++i) {
      need(pos, 2, size);
      auto len = enc::get_u16(p + pos);
      pos += 2;
      need(pos, len, size);
      layout_.emplace_back(reinterpret_cast<const char*>(p + pos), len);
      pos += len;
    }
    data_begin_ = pos;

    const std::uint64_t trailer = size - kTrailerSize;
    footer_ = enc::get_u64(p + trailer);
    if (footer_ < data_begin_ || footer_ > trailer) corrupt("bad footer offset");
    std::uint64_t f = footer_;
    need(f, 8, trailer);
    count_ = enc::get_u64(p + f);
    f += 8;
    min_key_ = read_bytes(f, trailer);
    max_key_ = read_bytes(f, trailer);
    need(f, 4, trailer);
    auto entries = enc::get_u32(p + f);
    f += 4;
    index_.reserve(entries);
    for (std::uint32_t i = 0; i < entries; ++i) {
      IndexEntry e;
      e.key = read_bytes(f, trailer);
      need(f, 8, trailer);
      e.offset = enc::get_u64(p + f);
      f += 8;
      if (e.offset < data_begin_ || e.offset >= footer_) corrupt("index offset out of range");
      index_.push_back(std::move(e));
    }
    if (f != trailer) corrupt("footer size mismatch");
    if (index_.size() != (count_ + kIndexInterval - 1) / kIndexInterval) corrupt("index size mismatch");

    if (!verify) return;
    auto crc = ::crc32(0L, Z_NULL, 0);
    std::uint64_t done = 0;
    while (done < trailer + 8) {
      auto chunk = static_cast<uInt>(std::min<std::uint64_t>(trailer + 8 - done, 1u << 30));
      crc = ::crc32(crc, p + done, chunk);
      done += chunk;
    }
    if (static_cast<std::uint32_t>(crc) != enc::get_u32(p + trailer + 8)) corrupt("checksum mismatch");

    std::uint64_t n = 0;
    std::uint64_t at = data_begin_;
    std::string_view last;
    while (at < footer_) {
      if (n % kIndexInterval == 0) {
        const auto& e = index_[n / kIndexInterval];
        if (e.offset != at) corrupt("index offset is not a record boundary");
      }
      auto key = read_bytes(at, footer_);
      read_bytes(at, footer_);
      if (n > 0 && !(last < key)) corrupt("records out of order");
      if (n % kIndexInterval == 0 && index_[n / kIndexInterval].key != key) corrupt("index key mismatch");
      if (n == 0 && key != min_key_) corrupt("min key mismatch");
      last = key;
      ++n;
    }
    if (n != count_) corrupt("record count mismatch");
    if (n > 0 && last != max_key_) corrupt("max key mismatch");
  }

  std::filesystem::path path_;
  MappedFile file_;
  std::vector<std::string> layout_;
  std::uint64_t data_begin_ = 0;
  std::uint64_t footer_ = 0;
  std::uint64_t count_ = 0;
  std::string min_key_;
  std::string max_key_;
  std::vector<IndexEntry> index_;
};

inline TableCursor::TableCursor(const SSTable& table, std::uint64_t pos) : table_(&table), pos_(pos) {
  next();
}

inline void TableCursor::next() {
  if (pos_ >= table_->footer_) {
    valid_ = false;
    return;
  }
  auto prev = key_;
  bool had = valid_;
  key_ = table_->read_bytes(pos_, table_->footer_);
  value_ = table_->read_bytes(pos_, table_->footer_);
  if (had && !(prev < key_)) table_->corrupt("records out of order");
  valid_ = true;
}

}  // namespace hrep
