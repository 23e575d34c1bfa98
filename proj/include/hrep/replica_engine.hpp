#pragma once

// The replica engine owns N single-replica stores holding the same rows under
// different clustering-key permutations. Writes fan out to every replica;
// reads go to the replica the cost model says is cheapest; a lost replica is
// rebuilt by replaying a survivor's rows through its own write path.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "hrep/cost_model.hpp"
#include "hrep/json_io.hpp"
#include "hrep/placement.hpp"
#include "hrep/query.hpp"
#include "hrep/schema.hpp"
#include "hrep/stats.hpp"
#include "hrep/store.hpp"

namespace hrep {

enum class ReplicaMode { HR, TR };

inline std::string_view to_string(ReplicaMode m) { return m == ReplicaMode::HR ? "HR" : "TR"; }

inline ReplicaMode parse_mode(std::string_view s) {
  if (s == "HR" || s == "hr") return ReplicaMode::HR;
  if (s == "TR" || s == "tr") return ReplicaMode::TR;
  throw Error(ErrorCode::InvalidArgument, "unknown replica mode '" + std::string(s) + "'");
}

struct EngineOptions {
  StoreOptions store;
  std::size_t virtual_nodes = 6;
};

struct ExecuteOptions {
  /// Route to this replica instead of asking the cost model.
  std::optional<std::size_t> replica;
  /// When false, matching rows are counted (and summed) but not returned.
  bool materialize = true;
};

struct QueryResult {
  std::vector<Row> rows;
  std::size_t replica_used = 0;
  std::uint64_t rows_scanned = 0;
  std::uint64_t rows_matched = 0;
  double estimate = 0.0;
  double latency = 0.0;  // seconds
  std::optional<double> sum;
};

struct RecoveryReport {
  std::size_t replica = 0;
  std::size_t donor = 0;
  std::uint64_t rows = 0;
  double seconds = 0.0;
};

class ReplicaSet {
 public:
  static constexpr const char* kManifest = "manifest.json";

  /// Creates empty per-replica stores under `dir` and persists the manifest.
  static std::unique_ptr<ReplicaSet> create(const std::filesystem::path& dir, Schema schema,
                                            std::vector<ReplicaLayout> layouts, ReplicaMode mode,
                                            EngineOptions options = {}) {
    if (layouts.empty()) throw Error(ErrorCode::InvalidLayout, "need at least one replica");
    for (std::size_t i = 0; i < layouts.size(); ++i) {
      try {
        validate_layout(schema, layouts[i]);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidLayout, "replica " + std::to_string(i) + ": " + e.what(), e.column());
      }
      layouts[i].replica_id = i;
    }
    if (mode == ReplicaMode::TR)
      for (const auto& l : layouts)
        if (l.order != layouts.front().order)
          throw Error(ErrorCode::InvalidLayout, "TR mode requires identical layouts");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
      throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
    if (std::filesystem::exists(dir / kManifest))
      throw Error(ErrorCode::ManifestMismatch, dir.string() + " already holds a store");
    auto set = std::unique_ptr<ReplicaSet>(new ReplicaSet(dir, std::move(schema), std::move(layouts), mode, options));
    set->open_stores();
    set->save_manifest();
    return set;
  }

  static std::unique_ptr<ReplicaSet> open(const std::filesystem::path& dir, EngineOptions options = {}) {
    if (!std::filesystem::exists(dir / kManifest))
      throw Error(ErrorCode::StoreMissing, "no manifest in " + dir.string());
    auto j = json::read_file(dir / kManifest);
    Schema schema;
    std::vector<ReplicaLayout> layouts;
    ReplicaMode mode{};
    try {
      schema = json::schema_from_json(j.at("schema"));
      layouts = json::layouts_from_json(j.at("layouts"));
      mode = parse_mode(j.at("mode").get<std::string>());
      options.virtual_nodes = j.value("virtual_nodes", options.virtual_nodes);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ManifestMismatch, std::string("malformed manifest: ") + e.what());
    }
    auto set = std::unique_ptr<ReplicaSet>(new ReplicaSet(dir, std::move(schema), std::move(layouts), mode, options));
    set->next_seq_ = j.value("next_seq", std::uint64_t{0});
    if (j.contains("metrics")) set->metrics_ = j.at("metrics");
    set->open_stores();
    if (std::filesystem::exists(dir / "stats.json")) {
      auto stats = json::stats_from_json(json::read_file(dir / "stats.json"));
      set->builder_.seed(stats);
    }
    if (std::filesystem::exists(dir / "costmodel.json"))
      set->model_ = json::latency_model_from_json(json::read_file(dir / "costmodel.json"));
    return set;
  }

  ReplicaSet(const ReplicaSet&) = delete;
  ReplicaSet& operator=(const ReplicaSet&) = delete;

  ~ReplicaSet() {
    try {
      close();
    } catch (...) {
    }
  }

  const Schema& schema() const { return schema_; }
  const std::vector<ReplicaLayout>& layouts() const { return layouts_; }
  ReplicaMode mode() const { return mode_; }
  std::size_t size() const { return layouts_.size(); }
  const std::filesystem::path& directory() const { return dir_; }
  std::size_t virtual_nodes() const { return options_.virtual_nodes; }

  std::shared_ptr<ReplicaStore> replica(std::size_t i) const {
    std::shared_lock lock(stores_mu_);
    return stores_.at(i);
  }

  /// Node id holding replica `replica_id` of `partition`.
  std::size_t place(std::size_t replica_id, const std::optional<Value>& partition = std::nullopt) const {
    std::optional<Datatype> type;
    if (auto p = schema_.partition_index()) type = schema_.column(*p).type;
    return place_replica(replica_id, partition, type, options_.virtual_nodes);
  }

  void set_latency_model(std::optional<LatencyModel> model) {
    std::unique_lock lock(stats_mu_);
    model_ = std::move(model);
  }

  /// Statistics over every row written so far.
  std::shared_ptr<const ColumnStats> stats() const {
    std::unique_lock lock(stats_mu_);
    if (!stats_cache_) stats_cache_ = std::make_shared<const ColumnStats>(builder_.build());
    return stats_cache_;
  }

  /// Applies a batch to every replica before returning. Rows are validated up
  /// front, so a malformed batch changes nothing.
  void write(std::span<const Row> rows) {
    ensure_open();
    if (rows.empty()) return;
    for (const auto& r : rows) schema_.validate_row(r);
    std::unique_lock wlock(write_mu_);
    drain_locked();
    auto first = reserve(rows);
    auto stores = snapshot();
    for (auto& store : stores) apply(*store, rows, first);
  }

  /// Enqueues a batch for every replica and returns; call drain() to reach quiescence.
  void write_async(std::vector<Row> rows) {
    ensure_open();
    if (rows.empty()) return;
    for (const auto& r : rows) schema_.validate_row(r);
    std::unique_lock wlock(write_mu_);
    start_workers();
    auto batch = std::make_shared<const std::vector<Row>>(std::move(rows));
    auto first = reserve(*batch);
    for (auto& w : workers_) w->push({batch, first});
  }

  /// Waits until every enqueued batch is applied; rethrows the first apply failure.
  void drain() {
    std::unique_lock wlock(write_mu_);
    drain_locked();
  }

  void flush_all() {
    std::unique_lock wlock(write_mu_);
    drain_locked();
    for (auto& s : snapshot()) s->flush();
    persist();
  }

  void compact_all() {
    std::unique_lock wlock(write_mu_);
    drain_locked();
    for (auto& s : snapshot()) {
      s->flush();
      s->compact();
    }
    persist();
  }

  /// The replica a query would be routed to.
  std::size_t route(const Query& query) const {
    auto recovering = recovering_.load();
    if (mode_ == ReplicaMode::TR) {
      auto n = layouts_.size();
      auto pick = rr_.fetch_add(1) % n;
      if (pick == recovering) pick = (pick + 1) % n;
      return pick;
    }
    std::vector<ReplicaLayout> candidates;
    for (const auto& l : layouts_)
      if (l.replica_id != recovering) candidates.push_back(l);
    if (candidates.empty()) throw Error(ErrorCode::StoreClosed, "no replica available");
    auto stats_ptr = stats();
    std::optional<LatencyModel> model;
    {
      std::unique_lock lock(stats_mu_);
      model = model_;
    }
    ReplicaChoice choice = (model && model->has(schema_.key_count()))
                               ? cost_min(*model, *stats_ptr, candidates, query)
                               : rows_min(*stats_ptr, candidates, query);
    return candidates[choice.index].replica_id;
  }

  QueryResult execute(const Query& query, const ExecuteOptions& opts = {}) const {
    ensure_open();
    if (!is_normalized(query, schema_)) throw Error(ErrorCode::InvalidArgument, "query is not normalized");
    QueryResult result;
    result.replica_used = opts.replica ? *opts.replica : route(query);
    if (result.replica_used >= layouts_.size())
      throw Error(ErrorCode::InvalidArgument, "no replica " + std::to_string(result.replica_used));
    if (result.replica_used == recovering_.load())
      throw Error(ErrorCode::StoreClosed, "replica " + std::to_string(result.replica_used) + " is recovering");
    auto store = replica(result.replica_used);
    const auto& layout = layouts_[result.replica_used];
    auto stats_ptr = stats();
    result.estimate = estimate_rows(*stats_ptr, layout, query).rows;

    std::optional<std::size_t> sum_col;
    if (query.sum_column) {
      sum_col = schema_.index_of(*query.sum_column);
      result.sum = 0.0;
    }
    const bool decode = opts.materialize || sum_col;
    const auto& codec = store->codec();
    auto start = std::chrono::steady_clock::now();
    auto bounds = key_bounds(schema_, layout, query);
    auto counts = store->scan_each(bounds, [&](std::string_view k, std::string_view v) {
      if (!decode) return;
      Row row = codec.decode(k, v);
      if (sum_col) {
        const auto& cell = row[*sum_col];
        *result.sum += cell.index() == 0 ? static_cast<double>(std::get<std::int64_t>(cell)) : std::get<double>(cell);
      }
      if (opts.materialize) result.rows.push_back(std::move(row));
    });
    result.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.rows_scanned = counts.rows_scanned;
    result.rows_matched = counts.rows_matched;
    return result;
  }

  std::vector<Row> full_scan(std::size_t replica_index) const { return replica(replica_index)->full_scan(); }

  /// Deletes replica `lost` and rebuilds it from the lowest-index survivor by
  /// re-inserting every row under the lost replica's own layout.
  RecoveryReport recover(std::size_t lost) {
    ensure_open();
    if (layouts_.size() < 2) throw Error(ErrorCode::NoSurvivingReplica, "no other replica to recover from");
    if (lost >= layouts_.size()) throw Error(ErrorCode::InvalidArgument, "no replica " + std::to_string(lost));
    std::unique_lock wlock(write_mu_);
    drain_locked();
    auto start = std::chrono::steady_clock::now();
    RecoveryReport report;
    report.replica = lost;
    report.donor = lost == 0 ? 1 : 0;
    recovering_.store(lost);
    struct Reset {
      std::atomic<std::size_t>& flag;
      ~Reset() { flag.store(kNone); }
    } reset{recovering_};

    auto donor = replica(report.donor);
    auto path = store_path(lost);
    {
      std::unique_lock lock(stores_mu_);
      stores_[lost].reset();
    }
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot delete " + path.string());
    auto rebuilt = std::make_shared<ReplicaStore>(path, schema_, layouts_[lost], options_.store);

    const auto& from = donor->codec();
    const auto& to = rebuilt->codec();
    std::vector<std::pair<std::string, std::string>> batch;
    auto push = [&] {
      rebuilt->insert_encoded(std::move(batch));
      batch.clear();
      if (rebuilt->should_flush()) rebuilt->flush();
    };
    donor->visit("", std::nullopt, [&](std::string_view k, std::string_view v) {
      std::uint64_t seq = 0;
      Row row = from.decode(k, v, &seq);
      batch.emplace_back(to.encode_key(row, seq), std::string(v));
      ++report.rows;
      if (batch.size() >= 4096) push();
      return true;
    });
    push();
    rebuilt->flush();
    rebuilt->compact();
    {
      std::unique_lock lock(stores_mu_);
      stores_[lost] = rebuilt;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    persist();
    return report;
  }

  /// Free-form numbers recorded in the manifest (load time, recovery time).
  void set_metric(const std::string& name, double value) {
    std::unique_lock lock(stats_mu_);
    metrics_[name] = value;
  }

  std::optional<double> metric(const std::string& name) const {
    std::unique_lock lock(stats_mu_);
    if (!metrics_.contains(name)) return std::nullopt;
    return metrics_.at(name).get<double>();
  }

  /// Flushes memtables and persists manifest and statistics. Further use fails with StoreClosed.
  void close() {
    if (closed_) return;
    flush_all();
    stop_workers();
    closed_ = true;
  }

  void save_manifest() const {
    nlohmann::json j;
    j["format"] = 1;
    j["schema"] = json::to_json(schema_);
    j["mode"] = to_string(mode_);
    j["virtual_nodes"] = options_.virtual_nodes;
    j["layouts"] = json::to_json(layouts_);
    j["next_seq"] = next_seq_;
    nlohmann::json replicas = nlohmann::json::array();
    {
      std::shared_lock lock(stores_mu_);
      for (std::size_t i = 0; i < layouts_.size(); ++i) {
        nlohmann::json r{{"replica_id", i},
                         {"node", place(i)},
                         {"path", std::filesystem::relative(store_path(i), dir_).string()}};
        nlohmann::json runs = nlohmann::json::array();
        if (stores_.size() > i && stores_[i])
          for (const auto& run : stores_[i]->runs())
            runs.push_back({{"file", std::to_string(run.file_number) + ".sst"}, {"records", run.records}, {"bytes", run.bytes}});
        r["runs"] = runs;
        replicas.push_back(r);
      }
    }
    j["replicas"] = replicas;
    {
      std::unique_lock lock(stats_mu_);
      j["metrics"] = metrics_;
    }
    json::write_file(dir_ / kManifest, j);
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Pending {
    std::shared_ptr<const std::vector<Row>> rows;
    std::uint64_t first_seq = 0;
  };

  /// Per-replica apply thread for the asynchronous write path.
  class ApplyWorker {
   public:
    explicit ApplyWorker(std::shared_ptr<ReplicaStore> store) : store_(std::move(store)) {
      thread_ = std::thread([this] { run(); });
    }
    ~ApplyWorker() {
      {
        std::lock_guard lock(mu_);
        stop_ = true;
      }
      cv_.notify_all();
      thread_.join();
    }
    void push(Pending p) {
      {
        std::lock_guard lock(mu_);
        queue_.push_back(std::move(p));
      }
      cv_.notify_all();
    }
    void wait_idle() {
      std::unique_lock lock(mu_);
      idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
      if (error_) {
        auto e = error_;
        error_ = nullptr;
        std::rethrow_exception(e);
      }
    }

   private:
    void run() {
      std::unique_lock lock(mu_);
      while (true) {
        cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
        if (queue_.empty()) return;
        auto p = std::move(queue_.front());
        queue_.pop_front();
        busy_ = true;
        lock.unlock();
        try {
          apply(*store_, *p.rows, p.first_seq);
        } catch (...) {
          std::lock_guard g(mu_);
          if (!error_) error_ = std::current_exception();
        }
        lock.lock();
        busy_ = false;
        idle_cv_.notify_all();
      }
    }

    std::shared_ptr<ReplicaStore> store_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<Pending> queue_;
    bool busy_ = false;
    bool stop_ = false;
    std::exception_ptr error_;
    std::thread thread_;
  };

  /// Sequence numbers are shared by all replicas so a row has the same key
  /// suffix everywhere; recovery relies on that.
  class SeededStats {
   public:
    explicit SeededStats(const Schema& schema) : schema_(&schema) { reset(); }
    void reset() {
      counts_.assign(schema_->key_count(), {});
      rows_ = 0;
    }
    void seed(const ColumnStats& stats) {
      reset();
      const auto keys = schema_->clustering_keys();
      for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto& d = stats.column(keys[k]);
        for (std::size_t i = 0; i < d.values.size(); ++i) counts_[k][d.values[i]] += d.counts[i];
      }
      rows_ = stats.total_rows();
    }
    void add(const Row& row) {
      const auto& keys = schema_->clustering_indices();
      for (std::size_t k = 0; k < keys.size(); ++k) ++counts_[k][row[keys[k]]];
      ++rows_;
    }
    ColumnStats build() const {
      if (rows_ == 0) throw Error(ErrorCode::EmptyDataset, "store holds no rows");
      std::vector<ColumnDistribution> cols;
      const auto& keys = schema_->clustering_indices();
      for (std::size_t k = 0; k < keys.size(); ++k) {
        ColumnDistribution d;
        d.name = schema_->column(keys[k]).name;
        d.type = schema_->column(keys[k]).type;
        std::vector<std::pair<Value, std::uint64_t>> entries(counts_[k].begin(), counts_[k].end());
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [v, n] : entries) {
          d.values.push_back(v);
          d.counts.push_back(n);
        }
        d.rebuild_cumulative();
        cols.push_back(std::move(d));
      }
      return ColumnStats(rows_, std::move(cols));
    }
    std::uint64_t rows() const { return rows_; }

   private:
    const Schema* schema_;
    std::vector<std::unordered_map<Value, std::uint64_t>> counts_;
    std::uint64_t rows_ = 0;
  };

  ReplicaSet(std::filesystem::path dir, Schema schema, std::vector<ReplicaLayout> layouts, ReplicaMode mode,
             EngineOptions options)
      : dir_(std::move(dir)),
        schema_(std::move(schema)),
        layouts_(std::move(layouts)),
        mode_(mode),
        options_(options),
        builder_(schema_) {
    if (options_.virtual_nodes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one virtual node");
  }

  std::filesystem::path store_path(std::size_t i) const {
    return dir_ / "store" / std::to_string(i) / schema_.table();
  }

  void open_stores() {
    std::unique_lock lock(stores_mu_);
    for (std::size_t i = 0; i < layouts_.size(); ++i)
      stores_.push_back(std::make_shared<ReplicaStore>(store_path(i), schema_, layouts_[i], options_.store));
  }

  std::vector<std::shared_ptr<ReplicaStore>> snapshot() const {
    std::shared_lock lock(stores_mu_);
    return stores_;
  }

  void ensure_open() const {
    if (closed_) throw Error(ErrorCode::StoreClosed, "replica set is closed");
  }

  /// Assigns sequence numbers to a validated batch and folds it into the statistics.
  std::uint64_t reserve(std::span<const Row> rows) {
    auto first = next_seq_;
    next_seq_ += rows.size();
    std::unique_lock lock(stats_mu_);
    for (const auto& r : rows) builder_.add(r);
    stats_cache_.reset();
    return first;
  }

  static void apply(ReplicaStore& store, std::span<const Row> rows, std::uint64_t first_seq) {
    std::vector<std::pair<std::string, std::string>> records;
    records.reserve(rows.size());
    const auto& codec = store.codec();
    for (std::size_t i = 0; i < rows.size(); ++i)
      records.emplace_back(codec.encode_key(rows[i], first_seq + i), codec.encode_value(rows[i]));
    store.insert_encoded(std::move(records));
    if (store.should_flush()) store.flush();
  }

  void start_workers() {
    if (!workers_.empty()) return;
    for (auto& s : snapshot()) workers_.push_back(std::make_unique<ApplyWorker>(s));
  }

  void drain_locked() {
    std::exception_ptr first;
    for (auto& w : workers_) {
      try {
        w->wait_idle();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    workers_.clear();
    if (first) std::rethrow_exception(first);
  }

  void stop_workers() {
    std::unique_lock wlock(write_mu_);
    workers_.clear();
  }

  void persist() {
    save_manifest();
    std::unique_lock lock(stats_mu_);
    if (builder_.rows() > 0) json::write_file(dir_ / "stats.json", json::to_json(builder_.build()));
  }

  std::filesystem::path dir_;
  Schema schema_;
  std::vector<ReplicaLayout> layouts_;
  ReplicaMode mode_;
  EngineOptions options_;

  mutable std::shared_mutex stores_mu_;
  std::vector<std::shared_ptr<ReplicaStore>> stores_;

  std::mutex write_mu_;
  std::vector<std::unique_ptr<ApplyWorker>> workers_;
  std::uint64_t next_seq_ = 0;

  mutable std::mutex stats_mu_;
  SeededStats builder_;
  mutable std::shared_ptr<const ColumnStats> stats_cache_;
  std::optional<LatencyModel> model_;
  nlohmann::json metrics_ = nlohmann::json::object();

  mutable std::atomic<std::size_t> rr_{0};
  std::atomic<std::size_t> recovering_{kNone};
  std::atomic<bool> closed_{false};
};

}  // namespace hrep
