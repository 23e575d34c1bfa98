// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--criterion N]... [--work DIR]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrep/hrep.hpp"

namespace fs = std::filesystem;
using namespace hrep;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string summary;
};

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  std::fputs("    ", stdout);
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(stdout, fmt, ap);
  va_end(ap);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

fs::path fresh(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Exact statistics of a generator's stream without keeping the rows.
ColumnStats stream_stats(RowGenerator&& gen) {
  StatsBuilder b(gen.schema());
  Row r;
  while (gen.next(r)) b.add_unchecked(r);
  return b.build();
}

/// Every row of a replica, encoded canonically (identity key order plus the
/// shared sequence number, then payload) and sorted: equal vectors mean equal
/// row multisets.
std::vector<std::string> canonical_rows(const ReplicaSet& set, std::size_t replica) {
  const auto& schema = set.schema();
  RecordCodec canon(schema, identity_layout(schema));
  auto store = set.replica(replica);
  const auto& codec = store->codec();
  std::vector<std::string> out;
  store->visit("", std::nullopt, [&](std::string_view k, std::string_view v) {
    std::uint64_t seq = 0;
    Row row = codec.decode(k, v, &seq);
    out.push_back(canon.encode_key(row, seq) + canon.encode_value(row));
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

// ----------------------------------------------------------------------------
// 1. Estimates equal scanned rows on the uniform dataset (N = 100,000, m = 3).

Outcome criterion1(const fs::path& work) {
  auto t = Clock::now();
  UniformGenerator gen(100'000, 3, 1);
  const auto schema = gen.schema();
  auto orders = all_orders(schema.clustering_keys());
  std::vector<ReplicaLayout> layouts;
  for (std::size_t i = 0; i < orders.size(); ++i) layouts.push_back({i, orders[i]});
  auto set = ReplicaSet::create(fresh(work / "c1"), schema, layouts, ReplicaMode::HR);
  load_rows(*set, gen);
  auto stats = set->stats();
  auto w = gen_queries(QueryTemplate::Random, 500, 1, *stats, schema);

  std::uint64_t checks = 0, exact = 0;
  double worst = 0;
  std::map<std::string, std::uint64_t> misses_by_prefix;  // which query shape misses
  for (const auto& q : w.queries) {
    for (std::size_t r = 0; r < layouts.size(); ++r) {
      ExecuteOptions o;
      o.replica = r;
      o.materialize = false;
      auto res = set->execute(q, o);
      ++checks;
      if (res.estimate == static_cast<double>(res.rows_scanned)) {
        ++exact;
      } else {
        worst = std::max(worst, std::abs(res.estimate - static_cast<double>(res.rows_scanned)));
        std::string shape;
        for (const auto& key : layouts[r].order) {
          auto k = q.filter_for(key)->kind;
          shape += k == FilterKind::Equality ? 'E' : k == FilterKind::Range ? 'R' : 'G';
          if (k != FilterKind::Equality) break;
        }
        ++misses_by_prefix[shape];
      }
    }
  }
  double secs = since(t);
  note("domain d = %llu per key, d^3 = %llu cells for %llu rows", static_cast<unsigned long long>(gen.domain()),
       static_cast<unsigned long long>(gen.domain() * gen.domain() * gen.domain()), 100'000ULL);
  note("%llu / %llu (query, layout) pairs exact; worst |estimate - scanned| = %.3f rows",
       static_cast<unsigned long long>(exact), static_cast<unsigned long long>(checks), worst);
  for (const auto& [shape, n] : misses_by_prefix) note("mismatches with leading filter shape %s: %llu", shape.c_str(),
                                                       static_cast<unsigned long long>(n));
  note("runtime %.1f s (limit 60 s)", secs);
  return {exact == checks && secs < 60,
          fmt("%llu/%llu estimates exact, runtime %.1f s", static_cast<unsigned long long>(exact),
              static_cast<unsigned long long>(checks), secs)};
}

// ----------------------------------------------------------------------------
// 2. Scan results equal the full-scan filter oracle.

Outcome criterion2(const fs::path& work) {
  auto t = Clock::now();
  std::uint64_t queries = 0, comparisons = 0, mismatches = 0;
  // 1,000 queries split over m = 1, 2, 3; every query runs on every layout.
  const std::size_t per_m[] = {333, 333, 334};
  for (std::size_t m = 1; m <= 3; ++m) {
    std::mt19937_64 rng(100 + m);
    const std::vector<ColumnDef> pool{{"ki", ColumnKind::ClusteringKey, Datatype::Int64},
                                      {"ks", ColumnKind::ClusteringKey, Datatype::String},
                                      {"kf", ColumnKind::ClusteringKey, Datatype::Float64}};
    std::vector<ColumnDef> cols(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    cols.push_back({"v", ColumnKind::Value, Datatype::Int64});
    Schema schema("t", cols);
    std::vector<Row> rows;
    for (std::int64_t i = 0; i < 10'000; ++i) {
      Row r;
      r.push_back(static_cast<std::int64_t>(rng() % 40) - 20);
      if (m >= 2) {
        std::string s;
        for (auto n = rng() % 3; n > 0; --n) s.push_back("\x00\x01" "ab\xff"[rng() % 5]);
        r.push_back(s);
      }
      if (m >= 3) r.push_back(static_cast<double>(static_cast<std::int64_t>(rng() % 30) - 15) / 4.0);
      r.push_back(i);
      rows.push_back(std::move(r));
    }
    auto orders = all_orders(schema.clustering_keys());
    std::vector<ReplicaLayout> layouts;
    for (std::size_t i = 0; i < orders.size(); ++i) layouts.push_back({i, orders[i]});
    EngineOptions eo;
    eo.store.memtable_bytes = 64 * 1024;  // several runs per replica
    auto set = ReplicaSet::create(fresh(work / ("c2_m" + std::to_string(m))), schema, layouts, ReplicaMode::HR, eo);
    LoadOptions lo;
    lo.batch_rows = 1500;
    lo.compact = false;
    load_rows(*set, rows, lo);
    set->write(std::span(rows).first(500));  // duplicates, left in the memtable
    std::vector<Row> all = rows;
    all.insert(all.end(), rows.begin(), rows.begin() + 500);

    auto stats = set->stats();
    auto w = gen_queries(QueryTemplate::Random, per_m[m - 1], 200 + m, *stats, schema);
    for (const auto& q : w.queries) {
      std::vector<Row> expect;
      for (const auto& r : all)
        if (matches(q, schema, r)) expect.push_back(r);
      std::sort(expect.begin(), expect.end());
      for (std::size_t r = 0; r < layouts.size(); ++r) {
        ExecuteOptions o;
        o.replica = r;
        auto got = set->execute(q, o).rows;
        std::sort(got.begin(), got.end());
        ++comparisons;
        mismatches += got != expect;
      }
      ++queries;
    }
  }
  double secs = since(t);
  note("%llu queries, %llu (query, layout) comparisons, %llu mismatches", static_cast<unsigned long long>(queries),
       static_cast<unsigned long long>(comparisons), static_cast<unsigned long long>(mismatches));
  note("runtime %.1f s (limit 60 s)", secs);
  return {mismatches == 0 && queries == 1000 && secs < 60,
          fmt("%llu mismatches over %llu comparisons, runtime %.1f s", static_cast<unsigned long long>(mismatches),
              static_cast<unsigned long long>(comparisons), secs)};
}

// ----------------------------------------------------------------------------
// 3. Annealing versus exhaustive search.

Outcome criterion3(const fs::path&) {
  auto t = Clock::now();
  bool ok = true;
  std::string summary;
  for (std::size_t n = 1; n <= 3; ++n) {
    int within = 0;
    bool counts_ok = true;
    double worst_gap = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
      UniformGenerator gen(20'000, 3, 1000 + trial);
      auto stats = stream_stats(std::move(gen));
      auto w = gen_queries(QueryTemplate::Random, 100, 5000 + trial, stats, uniform_schema(3));
      auto exact = brute_force(w.queries, stats, n);
      counts_ok &= exact.enumerated == multiset_count(3, n);
      AnnealParams p;
      p.seed = trial;
      auto r = anneal(w.queries, stats, n, p);
      double gap = exact.cost > 0 ? (r.cost - exact.cost) / exact.cost : 0.0;
      worst_gap = std::max(worst_gap, gap);
      within += r.cost <= exact.cost * 1.05 + 1e-9;
    }
    note("n=%zu: %d/100 trials within 5%% of the optimum (worst gap %.2f%%); enumeration count %s C(%llu,%zu) = %llu", n,
         within, worst_gap * 100, counts_ok ? "equals" : "DIFFERS FROM", static_cast<unsigned long long>(6 + n - 1), n,
         static_cast<unsigned long long>(multiset_count(3, n)));
    ok &= within >= 95 && counts_ok;
    summary += fmt("n=%zu %d/100; ", n, within);
  }
  double secs = since(t);
  note("runtime %.1f s (limit 300 s)", secs);
  return {ok && secs < 300, summary + fmt("runtime %.1f s", secs)};
}

// ----------------------------------------------------------------------------
// 4 and 5 share the 10M-row, 4-key uniform dataset.

constexpr std::uint64_t kBigRows = 10'000'000;
constexpr std::size_t kBigKeys = 4;
constexpr std::uint64_t kBigSeed = 4;

struct BigSetup {
  Schema schema = uniform_schema(kBigKeys);
  std::shared_ptr<ColumnStats> stats;
  Workload workload;
  std::vector<ReplicaLayout> tr;  // best single layout
};

BigSetup big_setup() {
  BigSetup s;
  auto t = Clock::now();
  s.stats = std::make_shared<ColumnStats>(stream_stats(UniformGenerator(kBigRows, kBigKeys, kBigSeed)));
  s.workload = gen_queries(QueryTemplate::Random, 500, 4, *s.stats, s.schema);
  s.tr = brute_force(s.workload.queries, *s.stats, 1).layouts;
  note("dataset statistics and workload ready in %.1f s; best single layout %s", since(t),
       layout_string(s.tr[0]).c_str());
  return s;
}

Outcome criterion4(const fs::path& work) {
  auto t = Clock::now();
  auto s = big_setup();
  AnnealParams p;
  p.seed = 1;
  auto hr_layouts = anneal(s.workload.queries, *s.stats, 3, p).layouts;
  for (const auto& l : hr_layouts) note("HR replica %zu: %s", l.replica_id, layout_string(l).c_str());
  note("estimated mean rows: HR %.1f, TR %.1f", workload_rows(*s.stats, hr_layouts, s.workload.queries),
       workload_rows(*s.stats, s.tr, s.workload.queries));
  // exhaustive optimum over all 3-multisets, to separate optimizer gaps from the workload's ceiling
  auto exact = brute_force(s.workload.queries, *s.stats, 3);
  note("exhaustive optimum for n=3: mean estimated rows %.1f over %llu multisets", exact.cost,
       static_cast<unsigned long long>(exact.enumerated));

  auto hr = ReplicaSet::create(fresh(work / "c4_hr"), s.schema, hr_layouts, ReplicaMode::HR);
  {
    UniformGenerator gen(kBigRows, kBigKeys, kBigSeed);
    auto rep = load_rows(*hr, gen);
    note("HR load: %.1f s write, %.1f s compact", rep.write_seconds, rep.compact_seconds);
  }
  // Every TR replica holds identical bytes, so one replica answers for all of them.
  auto tr = ReplicaSet::create(fresh(work / "c4_tr"), s.schema, s.tr, ReplicaMode::TR);
  {
    UniformGenerator gen(kBigRows, kBigKeys, kBigSeed);
    auto rep = load_rows(*tr, gen);
    note("TR load: %.1f s write, %.1f s compact", rep.write_seconds, rep.compact_seconds);
  }
  auto rep = run_bench(*hr, *tr, s.workload.queries);
  double ratio = rep.tr_mean_rows / rep.hr_mean_rows;
  double secs = since(t);
  note("mean rows_scanned: HR %.1f, TR %.1f; TR/HR = %.2f, improvement = %.2f (needs >= 9)", rep.hr_mean_rows,
       rep.tr_mean_rows, ratio, rep.rows_improvement);
  note("mean latency: HR %.6f s, TR %.6f s, latency improvement %.2f (reported, not gated)", rep.hr_mean_latency,
       rep.tr_mean_latency, rep.latency_improvement);
  note("runtime %.1f s (limit 900 s)", secs);
  fs::remove_all(work / "c4_hr");
  fs::remove_all(work / "c4_tr");
  return {rep.rows_improvement >= 9.0 && secs < 900,
          fmt("improvement %.2f on rows_scanned (TR/HR %.2f), runtime %.1f s", rep.rows_improvement, ratio, secs)};
}

Outcome criterion5(const fs::path& work) {
  auto t = Clock::now();
  auto s = big_setup();
  CalibrationOptions co;
  co.key_counts = {kBigKeys};
  auto model = calibrate(run_calibration(fresh(work / "c5_cal"), co));
  fs::remove_all(work / "c5_cal");
  const auto& f = model.fit(kBigKeys);
  note("latency model for %zu keys: slope %.4g s/row, intercept %.4g s, r2 %.4f", kBigKeys, f.slope, f.intercept, f.r2);

  double tr_cost = workload_cost(model, *s.stats, s.tr, s.workload.queries);
  std::vector<double> hr_cost;
  for (std::size_t n = 1; n <= 3; ++n) {
    AnnealParams p;
    p.seed = 1;
    auto layouts = anneal(s.workload.queries, *s.stats, n, p).layouts;
    hr_cost.push_back(workload_cost(model, *s.stats, layouts, s.workload.queries));
    note("n=%zu: mean Cost_min(HR) = %.6g s (TR %.6g s)", n, hr_cost.back(), tr_cost);
  }
  bool monotone = hr_cost[1] <= hr_cost[0] && hr_cost[2] <= hr_cost[1];
  double gap = std::abs(hr_cost[0] - tr_cost) / tr_cost;
  double secs = since(t);
  note("non-increasing in n: %s; |HR - TR| / TR at n=1 = %.4f%% (limit 2%%)", monotone ? "yes" : "no", gap * 100);
  note("runtime %.1f s", secs);
  return {monotone && gap <= 0.02,
          fmt("Cost_min %.3g/%.3g/%.3g s for n=1/2/3, n=1 gap to TR %.2f%%", hr_cost[0], hr_cost[1], hr_cost[2],
              gap * 100)};
}

// ----------------------------------------------------------------------------
// 6. Write throughput: HR and TR loads of 2M rows into three replicas.

Outcome criterion6(const fs::path& work) {
  auto t = Clock::now();
  const std::uint64_t rows_n = 2'000'000;
  auto rows = UniformGenerator(rows_n, kBigKeys, 6).take_all();
  auto schema = uniform_schema(kBigKeys);
  auto stats = build_stats(rows, schema);
  auto w = gen_queries(QueryTemplate::Random, 500, 6, stats, schema);
  auto hr_layouts = anneal(w.queries, stats, 3, AnnealParams{}).layouts;
  auto tr_layouts = std::vector<ReplicaLayout>(3, brute_force(w.queries, stats, 1).layouts[0]);
  for (std::size_t i = 0; i < 3; ++i) tr_layouts[i].replica_id = i;

  double best_hr = INFINITY, best_tr = INFINITY;
  for (int round = 0; round < 2; ++round) {
    for (auto mode : {ReplicaMode::TR, ReplicaMode::HR}) {
      auto dir = fresh(work / "c6");
      auto set = ReplicaSet::create(dir, schema, mode == ReplicaMode::HR ? hr_layouts : tr_layouts, mode);
      auto rep = load_rows(*set, rows);
      double secs = rep.seconds();
      note("round %d %s: %.2f s (%.0f rows/s write, %.2f s compact)", round + 1, std::string(to_string(mode)).c_str(),
           secs, rep.rows_per_second(), rep.compact_seconds);
      (mode == ReplicaMode::HR ? best_hr : best_tr) = std::min(mode == ReplicaMode::HR ? best_hr : best_tr, secs);
      set.reset();
      fs::remove_all(dir);
    }
  }
  double ratio = std::max(best_hr, best_tr) / std::min(best_hr, best_tr);
  note("best of two: HR %.2f s, TR %.2f s, slower/faster = %.3f (limit 1.25)", best_hr, best_tr, ratio);
  note("runtime %.1f s", since(t));
  return {ratio <= 1.25, fmt("HR %.2f s vs TR %.2f s (ratio %.3f)", best_hr, best_tr, ratio)};
}

// ----------------------------------------------------------------------------
// 7. Recovery of one of three replicas holding 1M rows.

Outcome criterion7(const fs::path& work) {
  auto t = Clock::now();
  const std::uint64_t rows_n = 1'000'000;
  auto rows = UniformGenerator(rows_n, 3, 7).take_all();
  auto schema = uniform_schema(3);
  std::vector<ReplicaLayout> layouts{{0, {"k0", "k1", "k2"}}, {1, {"k1", "k2", "k0"}}, {2, {"k2", "k0", "k1"}}};

  // Initial per-replica load: the lost replica's layout loaded on its own.
  double single_load = 0;
  {
    auto dir = fresh(work / "c7_single");
    auto one = ReplicaSet::create(dir, schema, {{0, layouts[2].order}}, ReplicaMode::HR);
    single_load = load_rows(*one, rows).seconds();
    one.reset();
    fs::remove_all(dir);
  }
  auto set = ReplicaSet::create(fresh(work / "c7"), schema, layouts, ReplicaMode::HR);
  auto load = load_rows(*set, rows);
  rows.clear();
  rows.shrink_to_fit();
  note("initial loads: one replica %.2f s, three replicas %.2f s", single_load, load.seconds());

  auto before = canonical_rows(*set, 0);
  auto rep = set->recover(2);
  note("recover: %llu rows from replica %zu in %.2f s", static_cast<unsigned long long>(rep.rows), rep.donor,
       rep.seconds);

  bool equal = true;
  for (std::size_t r = 0; r < 3; ++r) {
    bool same = canonical_rows(*set, r) == before;
    note("replica %zu multiset %s replica 0 before recovery", r, same ? "equals" : "DIFFERS FROM");
    equal &= same;
  }
  // rebuilt replica: keys strictly ascending and decoded tuples ordered by its layout
  std::uint64_t order_violations = 0, seen = 0;
  {
    auto store = set->replica(2);
    const auto& keys = store->codec().keys();
    std::string prev_key;
    std::vector<Value> prev, cur;
    store->visit("", std::nullopt, [&](std::string_view k, std::string_view) {
      keys.decode(k, cur);
      if (seen > 0 && (!(prev_key < k) || cur < prev)) ++order_violations;
      prev_key.assign(k);
      std::swap(prev, cur);
      ++seen;
      return true;
    });
  }
  note("rebuilt replica: %llu rows, %llu order violations under %s", static_cast<unsigned long long>(seen),
       static_cast<unsigned long long>(order_violations), layout_string(layouts[2]).c_str());
  double factor = rep.seconds / single_load;
  note("recovery / per-replica load = %.2f (limit < 3)", factor);
  note("runtime %.1f s", since(t));
  set.reset();
  fs::remove_all(work / "c7");
  return {equal && order_violations == 0 && seen == rows_n && factor < 3.0,
          fmt("multisets %s, %llu order violations, recovery %.2fx per-replica load", equal ? "equal" : "differ",
              static_cast<unsigned long long>(order_violations), factor)};
}

// ----------------------------------------------------------------------------
// 8. Latency calibration over 10^2..10^6-row scans.

Outcome criterion8(const fs::path& work) {
  auto t = Clock::now();
  CalibrationOptions co;
  auto samples = run_calibration(fresh(work / "c8"), co);
  fs::remove_all(work / "c8");
  auto model = calibrate(samples);
  bool ok = true;
  double lo = INFINITY, hi = 0;
  for (const auto& s : samples) lo = std::min(lo, s.rows_scanned), hi = std::max(hi, s.rows_scanned);
  for (const auto& [k, f] : model.fits()) {
    note("keys=%zu: slope %.4g s/row, intercept %.4g s, R2 %.4f over %zu samples", k, f.slope, f.intercept, f.r2,
         f.samples);
    ok &= f.r2 >= 0.9;
  }
  bool slope_up = model.fit(6).slope > model.fit(2).slope;
  note("scan sizes %.0f .. %.0f rows; slope(6) %s slope(2)", lo, hi, slope_up ? ">" : "<=");
  note("runtime %.1f s", since(t));
  return {ok && slope_up && lo <= 100 && hi >= 1e6,
          fmt("min R2 ok: %s, slope(6)/slope(2) = %.2f", ok ? "yes" : "no", model.fit(6).slope / model.fit(2).slope)};
}

// ----------------------------------------------------------------------------
// 9. Encoding order property, 10^5 pairs per datatype.

Outcome criterion9(const fs::path&) {
  auto t = Clock::now();
  std::mt19937_64 rng(9);
  std::uint64_t total_violations = 0;
  std::string summary;
  const std::vector<std::int64_t> edge_ints{std::numeric_limits<std::int64_t>::min(), -1, 0, 1,
                                            std::numeric_limits<std::int64_t>::max()};
  const std::vector<double> edge_doubles{-INFINITY, -1e308, -1.0, -5e-324, -0.0, 0.0, 5e-324, 1.0, 1e308, INFINITY};
  auto rand_value = [&](Datatype type) -> Value {
    switch (type) {
      case Datatype::Int64:
      case Datatype::Date:
        switch (rng() % 4) {
          case 0: return edge_ints[rng() % edge_ints.size()];
          case 1: return static_cast<std::int64_t>(rng() % 7) - 3;
          default: return static_cast<std::int64_t>(rng());
        }
      case Datatype::Float64:
        switch (rng() % 4) {
          case 0: return edge_doubles[rng() % edge_doubles.size()];
          case 1: return static_cast<double>(static_cast<std::int64_t>(rng() % 7) - 3) * 0.5;
          default: {
            double d;
            do {
              std::uint64_t bits = rng();
              std::memcpy(&d, &bits, sizeof d);
            } while (std::isnan(d));
            return d;
          }
        }
      case Datatype::String: {
        static const char alphabet[] = {'\x00', '\x01', '\xfe', '\xff', 'a', 'b'};
        std::string s;
        for (auto n = rng() % 6; n > 0; --n) s.push_back(alphabet[rng() % sizeof alphabet]);
        return s;
      }
    }
    return {};
  };
  for (auto type : {Datatype::Int64, Datatype::Date, Datatype::Float64, Datatype::String}) {
    Schema schema("t", {{"x", ColumnKind::ClusteringKey, type},
                        {"y", ColumnKind::ClusteringKey, type},
                        {"z", ColumnKind::ClusteringKey, type}});
    KeyCodec codec(schema, {0, {"z", "x", "y"}});
    std::uint64_t violations = 0;
    for (int i = 0; i < 100'000; ++i) {
      Row a{rand_value(type), rand_value(type), rand_value(type)};
      Row b = a;
      // share a prefix often so later columns and the sequence number decide
      for (std::size_t c = rng() % 4; c < 3; ++c) b[c] = rand_value(type);
      std::uint64_t sa = rng() % 3, sb = rng() % 3;
      auto canon = [](const Value& v) -> Value {
        if (const auto* d = std::get_if<double>(&v); d && *d == 0.0) return 0.0;
        return v;
      };
      auto tuple = [&](const Row& r) { return std::vector<Value>{canon(r[2]), canon(r[0]), canon(r[1])}; };
      auto ta = tuple(a), tb = tuple(b);
      int logical = ta < tb ? -1 : tb < ta ? 1 : (sa < sb ? -1 : sa > sb ? 1 : 0);
      auto ka = codec.encode_row(a, sa), kb = codec.encode_row(b, sb);
      int bytes = ka < kb ? -1 : kb < ka ? 1 : 0;
      violations += bytes != logical;
    }
    note("%s: %llu violations in 100000 pairs", std::string(to_string(type)).c_str(),
         static_cast<unsigned long long>(violations));
    total_violations += violations;
    summary += fmt("%s %llu; ", std::string(to_string(type)).c_str(), static_cast<unsigned long long>(violations));
  }
  note("runtime %.1f s", since(t));
  return {total_violations == 0, "violations: " + summary};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  std::string work = (fs::temp_directory_path() / "hrep_acceptance").string();
  app.add_option("--criterion", selected, "criterion number (repeatable; default all)")->check(CLI::Range(1, 9));
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::map<int, std::function<Outcome(const fs::path&)>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  fs::create_directories(work);
  bool all = true;
  for (int c : selected) {
    std::printf("criterion %d: running\n", c);
    std::fflush(stdout);
    Outcome o;
    try {
      o = criteria.at(c)(work);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s\n", c, o.pass ? "PASS" : "FAIL", o.summary.c_str());
    std::fflush(stdout);
    all &= o.pass;
  }
  return all ? 0 : 1;
}
