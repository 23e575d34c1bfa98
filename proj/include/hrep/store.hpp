#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrep/encoding.hpp"
#include "hrep/memtable.hpp"
#include "hrep/merge_iterator.hpp"
#include "hrep/query.hpp"
#include "hrep/record.hpp"
#include "hrep/schema.hpp"
#include "hrep/sstable.hpp"

namespace hrep {

/// The contiguous key range a query must read on one replica, plus the
/// filters that can only be applied row by row inside that range.
struct KeyBounds {
  std::vector<Value> lower_prefix;
  std::vector<Value> upper_prefix;
  /// When set, the upper bound is "past every key starting with upper_prefix".
  bool upper_covers_prefix = false;
  std::string lower;
  std::optional<std::string> upper;  // nullopt: unbounded
  std::vector<Filter> residual;
};

/// Longest equality prefix of the layout, extended by the first range-filtered
/// key; every non-global filter after that point becomes residual.
inline KeyBounds key_bounds(const Schema& schema, const ReplicaLayout& layout, const Query& query) {
  KeyCodec codec(schema, layout);
  KeyBounds b;
  std::size_t i = 0;
  const auto& order = layout.order;
  auto filter_at = [&](std::size_t pos) -> const Filter& {
    const auto* f = query.filter_for(order[pos]);
    if (!f) throw Error(ErrorCode::InvalidArgument, "query is not normalized", order[pos]);
    return *f;
  };
  while (i < order.size() && filter_at(i).kind == FilterKind::Equality) b.lower_prefix.push_back(filter_at(i++).lo);

  if (i < order.size() && filter_at(i).kind == FilterKind::Range) {
    const auto& f = filter_at(i);
    b.upper_prefix = b.lower_prefix;
    b.lower_prefix.push_back(f.lo);
    b.upper_prefix.push_back(f.hi);
    b.lower = codec.encode_prefix(b.lower_prefix);
    b.upper = codec.encode_prefix(b.upper_prefix);
    ++i;
  } else {
    b.upper_prefix = b.lower_prefix;
    b.upper_covers_prefix = true;
    b.lower = codec.encode_prefix(b.lower_prefix);
    b.upper = enc::prefix_successor(b.lower);
  }
  for (; i < order.size(); ++i)
    if (filter_at(i).kind != FilterKind::Global) b.residual.push_back(filter_at(i));
  return b;
}

struct StoreOptions {
  std::size_t memtable_bytes = std::size_t{8} << 20;
  bool verify_on_open = true;
};

struct RunInfo {
  std::uint64_t file_number = 0;
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
};

struct ScanResult {
  std::vector<Row> rows;
  std::uint64_t rows_scanned = 0;
};

/// Counters from a scan that does not materialize rows.
struct ScanCounts {
  std::uint64_t rows_scanned = 0;
  std::uint64_t rows_matched = 0;
};

/// Single-replica LSM store: a memtable plus sorted runs, all under one
/// clustering-key permutation. One writer; any number of concurrent scanners.
///
/// Directory contents: `<n>.sst` run files and a MANIFEST listing the live ones.
class ReplicaStore {
 public:
  ReplicaStore(std::filesystem::path dir, Schema schema, ReplicaLayout layout, StoreOptions options = {})
      : dir_(std::move(dir)),
        schema_(std::move(schema)),
        layout_(std::move(layout)),
        options_(options),
        codec_(schema_, layout_) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw Error(ErrorCode::IoFailure, "cannot create store directory " + dir_.string());
    load_manifest();
  }

  ReplicaStore(const ReplicaStore&) = delete;
  ReplicaStore& operator=(const ReplicaStore&) = delete;

  const Schema& schema() const { return schema_; }
  const ReplicaLayout& layout() const { return layout_; }
  const RecordCodec& codec() const { return codec_; }
  const std::filesystem::path& directory() const { return dir_; }

  void insert(const Row& row, std::uint64_t seq) {
    auto key = codec_.encode_key(row, seq);
    auto value = codec_.encode_value(row);
    std::unique_lock lock(mu_);
    mem_.insert(std::move(key), std::move(value));
  }

  /// Inserts already-encoded records (key bytes must come from this layout).
  void insert_encoded(std::vector<std::pair<std::string, std::string>>&& records) {
    std::unique_lock lock(mu_);
    for (auto& [k, v] : records) mem_.insert(std::move(k), std::move(v));
  }

  bool should_flush() const {
    std::shared_lock lock(mu_);
    return mem_.size_bytes() >= options_.memtable_bytes;
  }

  /// Writes the memtable as a new run and clears it. No-op on an empty memtable.
  std::optional<RunInfo> flush() {
    std::unique_lock lock(mu_);
    if (mem_.empty()) return std::nullopt;
    auto number = next_file_++;
    {
      SSTableWriter writer(run_path(number), layout_.order);
      for (const auto& [k, v] : mem_.entries()) writer.add(k, v);
      writer.finish();
    }
    auto table = SSTable::open(run_path(number), false);
    runs_.push_back({number, table});
    save_manifest();
    mem_.clear();
    return info(runs_.back());
  }

  /// Full merge of every live run into one. Readers keep scanning the old
  /// runs until the new run is swapped in. No-op with fewer than two runs.
  std::optional<RunInfo> compact() {
    std::vector<Run> inputs;
    std::uint64_t number = 0;
    {
      std::unique_lock lock(mu_);
      if (runs_.size() < 2) return std::nullopt;
      inputs = runs_;
      number = next_file_++;
    }
    {
      std::vector<std::unique_ptr<RecordSource>> sources;
      for (const auto& r : inputs) sources.push_back(std::make_unique<TableSource>(*r.table, "", std::nullopt));
      MergingIterator it(std::move(sources));
      SSTableWriter writer(run_path(number), layout_.order);
      for (; it.valid(); it.next()) writer.add(it.key(), it.value());
      writer.finish();
    }
    auto table = SSTable::open(run_path(number), false);
    std::unique_lock lock(mu_);
    std::erase_if(runs_, [&](const Run& r) {
      return std::any_of(inputs.begin(), inputs.end(), [&](const Run& in) { return in.number == r.number; });
    });
    runs_.insert(runs_.begin(), Run{number, table});
    save_manifest();
    for (const auto& r : inputs) {
      std::error_code ec;
      std::filesystem::remove(run_path(r.number), ec);
    }
    return info(runs_.front());
  }

  std::vector<RunInfo> runs() const {
    std::shared_lock lock(mu_);
    std::vector<RunInfo> out;
    for (const auto& r : runs_) out.push_back(info(r));
    return out;
  }

  std::size_t memtable_rows() const {
    std::shared_lock lock(mu_);
    return mem_.size();
  }

  std::uint64_t row_count() const {
    std::shared_lock lock(mu_);
    std::uint64_t n = mem_.size();
    for (const auto& r : runs_) n += r.table->record_count();
    return n;
  }

  /// Raw merged iteration over keys in [lower, upper) across the memtable and
  /// every run. `fn(key, value)` returns false to stop early.
  template <typename Fn>
  void visit(std::string_view lower, std::optional<std::string_view> upper, Fn&& fn) const {
    std::shared_lock lock(mu_);
    std::vector<std::unique_ptr<RecordSource>> sources;
    for (const auto& r : runs_) sources.push_back(std::make_unique<TableSource>(*r.table, lower, upper));
    sources.push_back(std::make_unique<MemSource>(mem_, lower, upper));
    MergingIterator it(std::move(sources));
    for (; it.valid(); it.next())
      if (!fn(it.key(), it.value())) return;
  }

  /// Scans [lower, upper), applies the residual filters and calls
  /// `on_match(key, value)` for each surviving record.
  template <typename OnMatch>
  ScanCounts scan_each(const KeyBounds& bounds, OnMatch&& on_match) const {
    std::vector<std::pair<std::size_t, const Filter*>> residual;
    std::size_t depth = 0;
    for (const auto& f : bounds.residual) {
      auto pos = static_cast<std::size_t>(
          std::find(layout_.order.begin(), layout_.order.end(), f.column) - layout_.order.begin());
      if (pos == layout_.order.size())
        throw Error(ErrorCode::UnknownColumn, "residual filter on non-key column", f.column);
      residual.emplace_back(pos, &f);
      depth = std::max(depth, pos + 1);
    }
    ScanCounts counts;
    std::vector<Value> parts;
    std::optional<std::string_view> upper;
    if (bounds.upper) upper = *bounds.upper;
    if (upper && !(std::string_view(bounds.lower) < *upper)) return counts;
    visit(bounds.lower, upper, [&](std::string_view key, std::string_view value) {
      ++counts.rows_scanned;
      if (depth > 0) {
        codec_.keys().decode_prefix(key, depth, parts);
        for (const auto& [pos, f] : residual)
          if (!f->accepts(parts[pos])) return true;
      }
      ++counts.rows_matched;
      on_match(key, value);
      return true;
    });
    return counts;
  }

  ScanResult scan(const KeyBounds& bounds) const {
    ScanResult out;
    auto counts = scan_each(bounds, [&](std::string_view k, std::string_view v) {
      out.rows.push_back(codec_.decode(k, v));
    });
    out.rows_scanned = counts.rows_scanned;
    return out;
  }

  ScanResult scan(const Query& query) const { return scan(key_bounds(schema_, layout_, query)); }

  std::vector<Row> full_scan() const {
    std::vector<Row> rows;
    visit("", std::nullopt, [&](std::string_view k, std::string_view v) {
      rows.push_back(codec_.decode(k, v));
      return true;
    });
    return rows;
  }

  /// Every stored key in order; used to check on-disk order per layout.
  std::vector<std::string> dump_keys() const {
    std::vector<std::string> keys;
    visit("", std::nullopt, [&](std::string_view k, std::string_view) {
      keys.emplace_back(k);
      return true;
    });
    return keys;
  }

 private:
  struct Run {
    std::uint64_t number = 0;
    std::shared_ptr<const SSTable> table;
  };

  static RunInfo info(const Run& r) { return {r.number, r.table->record_count(), r.table->file_size()}; }

  std::filesystem::path run_path(std::uint64_t number) const {
    return dir_ / (std::to_string(number) + ".sst");
  }

  std::filesystem::path manifest_path() const { return dir_ / "MANIFEST"; }

  void load_manifest() {
    if (!std::filesystem::exists(manifest_path())) {
      save_manifest();
      return;
    }
    nlohmann::json j;
    try {
      std::ifstream in(manifest_path());
      in >> j;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ManifestMismatch, manifest_path().string() + ": " + e.what());
    }
    if (j.at("layout").get<std::vector<std::string>>() != layout_.order)
      throw Error(ErrorCode::ManifestMismatch, "store layout differs from " + layout_string(layout_));
    next_file_ = j.at("next_file").get<std::uint64_t>();
    for (auto n : j.at("runs").get<std::vector<std::uint64_t>>()) {
      auto table = SSTable::open(run_path(n), options_.verify_on_open);
      if (table->layout_order() != layout_.order)
        throw Error(ErrorCode::CorruptTable, run_path(n).string() + ": layout mismatch");
      runs_.push_back({n, table});
    }
  }

  void save_manifest() const {
    nlohmann::json j;
    j["layout"] = layout_.order;
    j["next_file"] = next_file_;
    std::vector<std::uint64_t> live;
    for (const auto& r : runs_) live.push_back(r.number);
    j["runs"] = live;
    auto tmp = manifest_path();
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << j.dump(2) << "\n";
      if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, manifest_path(), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot replace " + manifest_path().string());
  }

  std::filesystem::path dir_;
  Schema schema_;
  ReplicaLayout layout_;
  StoreOptions options_;
  RecordCodec codec_;

  mutable std::shared_mutex mu_;
  MemTable mem_;
  std::vector<Run> runs_;
  std::uint64_t next_file_ = 1;
};

}  // namespace hrep
