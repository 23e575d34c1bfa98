#pragma once

// Drivers shared by the CLI and the acceptance binary: bulk loading,
// calibration scans, query runs and the HR-vs-TR report.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hrep/cost_model.hpp"
#include "hrep/replica_engine.hpp"
#include "hrep/workload.hpp"

namespace hrep {

struct LoadReport {
  std::uint64_t rows = 0;
  double write_seconds = 0.0;    // batches applied to every replica, memtables flushed
  double compact_seconds = 0.0;  // merging each replica down to one run
  double seconds() const { return write_seconds + compact_seconds; }
  double rows_per_second() const { return write_seconds > 0 ? rows / write_seconds : 0.0; }
};

struct LoadOptions {
  std::size_t batch_rows = 1 << 16;
  /// Replicas apply batches on their own threads; otherwise one after another.
  bool parallel = true;
  bool compact = true;
};

inline LoadReport load_rows(ReplicaSet& set, RowGenerator& gen, const LoadOptions& opts = {}) {
  LoadReport report;
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Row> batch;
  batch.reserve(opts.batch_rows);
  Row row;
  auto push = [&] {
    report.rows += batch.size();
    if (opts.parallel) {
      set.write_async(std::move(batch));
      batch = {};
      batch.reserve(opts.batch_rows);
    } else {
      set.write(batch);
      batch.clear();
    }
  };
  while (gen.next(row)) {
    batch.push_back(row);
    if (batch.size() >= opts.batch_rows) push();
  }
  if (!batch.empty()) push();
  set.flush_all();
  auto t1 = std::chrono::steady_clock::now();
  if (opts.compact) set.compact_all();
  auto t2 = std::chrono::steady_clock::now();
  report.write_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.compact_seconds = std::chrono::duration<double>(t2 - t1).count();
  set.set_metric("load_rows", static_cast<double>(report.rows));
  set.set_metric("load_write_seconds", report.write_seconds);
  set.set_metric("load_compact_seconds", report.compact_seconds);
  set.save_manifest();
  return report;
}

inline LoadReport load_rows(ReplicaSet& set, std::span<const Row> rows, const LoadOptions& opts = {}) {
  struct SpanSource final : RowGenerator {
    const Schema* s;
    std::span<const Row> rows;
    std::size_t i = 0;
    const Schema& schema() const override { return *s; }
    std::uint64_t size() const override { return rows.size(); }
    bool next(Row& r) override {
      if (i >= rows.size()) return false;
      r = rows[i++];
      return true;
    }
  } src;
  src.s = &set.schema();
  src.rows = rows;
  return load_rows(set, src, opts);
}

// ---------------------------------------------------------------- queries

struct QueryRecord {
  std::size_t query_id = 0;
  std::string mode;
  std::size_t replica_used = 0;
  double estimate = 0.0;
  std::uint64_t rows_scanned = 0;
  std::uint64_t result_rows = 0;
  double latency = 0.0;
};

/// Runs every query once, `threads` at a time. Records come back in query order.
inline std::vector<QueryRecord> run_queries(const ReplicaSet& set, std::span<const Query> queries,
                                            std::size_t threads = 1, bool materialize = false) {
  std::vector<QueryRecord> out(queries.size());
  const std::string mode(to_string(set.mode()));
  auto run_one = [&](std::size_t i) {
    ExecuteOptions eo;
    eo.materialize = materialize;
    auto r = set.execute(queries[i], eo);
    out[i] = {i, mode, r.replica_used, r.estimate, r.rows_scanned, r.rows_matched, r.latency};
  };
  threads = std::max<std::size_t>(1, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < queries.size();) {
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard g(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

inline void write_query_csv(const std::filesystem::path& path, std::span<const QueryRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "query_id,mode,replica_used,estimate,rows_scanned,result_rows,latency_s\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.estimate);
    out << r.query_id << ',' << r.mode << ',' << r.replica_used << ',' << buf << ',' << r.rows_scanned << ','
        << r.result_rows << ',';
    std::snprintf(buf, sizeof buf, "%.9f", r.latency);
    out << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

// ---------------------------------------------------------------- bench

struct BenchReport {
  std::vector<QueryRecord> queries;  // HR records first, then TR
  double hr_mean_latency = 0.0;
  double tr_mean_latency = 0.0;
  double hr_mean_rows = 0.0;
  double tr_mean_rows = 0.0;
  double latency_improvement = 0.0;  // (TR - HR) / HR
  double rows_improvement = 0.0;
  std::optional<double> hr_write_rows_per_s;
  std::optional<double> tr_write_rows_per_s;
  std::optional<double> hr_recovery_seconds;
  std::optional<double> tr_recovery_seconds;
};

/// Runs the same workload against an HR set and a TR set holding the same rows.
inline BenchReport run_bench(const ReplicaSet& hr, const ReplicaSet& tr, std::span<const Query> workload,
                             std::size_t threads = 1) {
  if (workload.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no queries");
  if (!(hr.schema() == tr.schema())) throw Error(ErrorCode::ManifestMismatch, "HR and TR stores have different schemas");
  if (hr.stats()->total_rows() != tr.stats()->total_rows())
    throw Error(ErrorCode::ManifestMismatch, "HR and TR stores hold different row counts");
  BenchReport rep;
  auto h = run_queries(hr, workload, threads);
  auto t = run_queries(tr, workload, threads);
  double hl = 0, tl = 0, hrw = 0, trw = 0;
  for (const auto& r : h) hl += r.latency, hrw += static_cast<double>(r.rows_scanned);
  for (const auto& r : t) tl += r.latency, trw += static_cast<double>(r.rows_scanned);
  const double n = static_cast<double>(workload.size());
  rep.hr_mean_latency = hl / n;
  rep.tr_mean_latency = tl / n;
  rep.hr_mean_rows = hrw / n;
  rep.tr_mean_rows = trw / n;
  rep.latency_improvement = improvement(rep.tr_mean_latency, rep.hr_mean_latency);
  rep.rows_improvement = rep.hr_mean_rows > 0 ? improvement(rep.tr_mean_rows, rep.hr_mean_rows) : 0.0;
  auto throughput = [](const ReplicaSet& s) -> std::optional<double> {
    auto rows = s.metric("load_rows");
    auto secs = s.metric("load_write_seconds");
    if (!rows || !secs || *secs <= 0) return std::nullopt;
    return *rows / *secs;
  };
  rep.hr_write_rows_per_s = throughput(hr);
  rep.tr_write_rows_per_s = throughput(tr);
  rep.hr_recovery_seconds = hr.metric("recovery_seconds");
  rep.tr_recovery_seconds = tr.metric("recovery_seconds");
  rep.queries = std::move(h);
  rep.queries.insert(rep.queries.end(), t.begin(), t.end());
  return rep;
}

/// metric,value rows; absent metrics are left out.
inline void write_bench_summary(const std::filesystem::path& path, const BenchReport& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.precision(9);
  out << "metric,value\n";
  out << "hr_mean_latency_s," << r.hr_mean_latency << '\n';
  out << "tr_mean_latency_s," << r.tr_mean_latency << '\n';
  out << "hr_mean_rows_scanned," << r.hr_mean_rows << '\n';
  out << "tr_mean_rows_scanned," << r.tr_mean_rows << '\n';
  out << "latency_improvement," << r.latency_improvement << '\n';
  out << "rows_improvement," << r.rows_improvement << '\n';
  if (r.hr_write_rows_per_s) out << "hr_write_rows_per_s," << *r.hr_write_rows_per_s << '\n';
  if (r.tr_write_rows_per_s) out << "tr_write_rows_per_s," << *r.tr_write_rows_per_s << '\n';
  if (r.hr_recovery_seconds) out << "hr_recovery_s," << *r.hr_recovery_seconds << '\n';
  if (r.tr_recovery_seconds) out << "tr_recovery_s," << *r.tr_recovery_seconds << '\n';
}

// ---------------------------------------------------------------- calibration

struct CalibrationOptions {
  std::vector<std::size_t> key_counts{2, 3, 4, 5, 6};
  std::uint64_t target_rows = 1'000'000;  // dataset size per key count; scans go up to this
  std::size_t repeats = 3;                // latency is the median of this many runs
  std::uint64_t seed = 1;
};

/// A query on an exact d^m grid whose scan touches roughly `target` rows:
/// equality on the leading keys, then a range on the next one.
inline Query calibration_query(const Schema& schema, std::uint64_t d, std::uint64_t target) {
  const auto keys = schema.clustering_keys();
  const std::size_t m = keys.size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < m; ++i) total *= d;
  Query q;
  std::uint64_t block = total;  // rows under one value of the current key prefix
  std::size_t depth = 0;
  while (depth < m && block / d >= target) {
    block /= d;
    q.filters.push_back(Filter::eq(keys[depth], std::int64_t{0}));
    ++depth;
  }
  if (depth < m) {
    auto per_value = block / d;
    auto width = std::clamp<std::uint64_t>((target + per_value - 1) / per_value, 1, d);
    q.filters.push_back(Filter::range(keys[depth], std::int64_t{0}, static_cast<std::int64_t>(width)));
  }
  return normalize(q, schema);
}

inline std::vector<std::uint64_t> calibration_targets(std::uint64_t max_rows) {
  std::vector<std::uint64_t> out;
  for (double e = 2.0; std::pow(10.0, e) <= static_cast<double>(max_rows) * 1.0001; e += 0.4)
    out.push_back(static_cast<std::uint64_t>(std::llround(std::pow(10.0, e))));
  return out;
}

/// Builds one exact-grid store per key count under `work_dir` and times scans
/// of graduated sizes against it.
inline std::vector<CalibrationSample> run_calibration(const std::filesystem::path& work_dir,
                                                      const CalibrationOptions& opts) {
  if (opts.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
  std::vector<CalibrationSample> samples;
  for (auto m : opts.key_counts) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "key count must be positive");
    auto d = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(opts.target_rows), 1.0 / m)));
    d = std::max<std::uint64_t>(d, 2);
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < m; ++i) n *= d;
    auto dir = work_dir / ("m" + std::to_string(m));
    std::filesystem::remove_all(dir);
    UniformGenerator gen(n, m, opts.seed);
    auto set = ReplicaSet::create(dir, gen.schema(), {identity_layout(gen.schema())}, ReplicaMode::TR);
    load_rows(*set, gen);
    ExecuteOptions eo;
    eo.replica = 0;
    eo.materialize = true;
    for (auto target : calibration_targets(std::min(n, opts.target_rows))) {
      auto q = calibration_query(set->schema(), d, target);
      std::vector<double> lat;
      std::uint64_t scanned = 0;
      set->execute(q, eo);  // warm the page cache
      for (std::size_t r = 0; r < opts.repeats; ++r) {
        auto res = set->execute(q, eo);
        lat.push_back(res.latency);
        scanned = res.rows_scanned;
      }
      std::nth_element(lat.begin(), lat.begin() + lat.size() / 2, lat.end());
      samples.push_back({static_cast<double>(scanned), lat[lat.size() / 2], m});
    }
  }
  return samples;
}

inline void write_calibration_csv(const std::filesystem::path& path, std::span<const CalibrationSample> samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.precision(9);
  out << "key_count,rows_scanned,latency_s\n";
  for (const auto& s : samples) out << s.key_count << ',' << static_cast<std::uint64_t>(s.rows_scanned) << ',' << s.latency << '\n';
}

}  // namespace hrep
