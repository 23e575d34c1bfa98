#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrep/memtable.hpp"
#include "hrep/sstable.hpp"

namespace hrep {

/// One sorted input to a k-way merge, bounded above by an exclusive key.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual bool valid() const = 0;
  virtual std::string_view key() const = 0;
  virtual std::string_view value() const = 0;
  virtual void next() = 0;
};

class TableSource final : public RecordSource {
 public:
  TableSource(const SSTable& table, std::string_view lower, std::optional<std::string_view> upper)
      : cursor_(table.seek(lower)), upper_(upper) {}

  bool valid() const override { return cursor_.valid() && (!upper_ || cursor_.key() < *upper_); }
  std::string_view key() const override { return cursor_.key(); }
  std::string_view value() const override { return cursor_.value(); }
  void next() override { cursor_.next(); }

 private:
  TableCursor cursor_;
  std::optional<std::string_view> upper_;
};

class MemSource final : public RecordSource {
 public:
  MemSource(const MemTable& mem, std::string_view lower, std::optional<std::string_view> upper)
      : it_(mem.entries().lower_bound(lower)), end_(mem.entries().end()), upper_(upper) {}

  bool valid() const override { return it_ != end_ && (!upper_ || std::string_view(it_->first) < *upper_); }
  std::string_view key() const override { return it_->first; }
  std::string_view value() const override { return it_->second; }
  void next() override { ++it_; }

 private:
  MemTable::Map::const_iterator it_;
  MemTable::Map::const_iterator end_;
  std::optional<std::string_view> upper_;
};

/// Min-heap merge over sorted sources. Equal keys come out in source order.
class MergingIterator {
 public:
  explicit MergingIterator(std::vector<std::unique_ptr<RecordSource>> sources)
      : sources_(std::move(sources)) {
    for (std::size_t i = 0; i < sources_.size(); ++i)
      if (sources_[i]->valid()) heap_.push_back(i);
    for (std::size_t i = heap_.size() / 2; i-- > 0;) sift_down(i);
  }

  bool valid() const { return !heap_.empty(); }
  std::string_view key() const { return sources_[heap_.front()]->key(); }
  std::string_view value() const { return sources_[heap_.front()]->value(); }

  void next() {
    auto& top = *sources_[heap_.front()];
    top.next();
    if (!top.valid()) {
      heap_.front() = heap_.back();
      heap_.pop_back();
    }
    if (!heap_.empty()) sift_down(0);
  }

 private:
  bool less(std::size_t a, std::size_t b) const {
    auto ka = sources_[a]->key();
    auto kb = sources_[b]->key();
    return ka < kb || (ka == kb && a < b);
  }

  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    while (true) {
      std::size_t best = i;
      std::size_t l = 2 * i + 1;
      std::size_t r = l + 1;
      if (l < n && less(heap_[l], heap_[best])) best = l;
      if (r < n && less(heap_[r], heap_[best])) best = r;
      if (best == i) return;
      std::swap(heap_[i], heap_[best]);
      i = best;
    }
  }

  std::vector<std::unique_ptr<RecordSource>> sources_;
  std::vector<std::size_t> heap_;
};

}  // namespace hrep
