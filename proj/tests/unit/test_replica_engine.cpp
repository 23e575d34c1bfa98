#include <set>
#include <sys/stat.h>
#include <unistd.h>

#include "test_util.hpp"

using namespace hrep;

namespace {

std::multiset<Row> as_multiset(const std::vector<Row>& rows) { return {rows.begin(), rows.end()}; }

Query q3(const Schema& s) {
  Query q;
  q.filters = {Filter::eq("a", std::int64_t{4}), Filter::range("b", std::int64_t{5}, std::int64_t{8}),
               Filter::range("c", std::int64_t{3}, std::int64_t{8})};
  return normalize(q, s);
}

std::vector<ReplicaLayout> three_layouts() {
  return {{0, {"a", "b", "c"}}, {1, {"c", "a", "b"}}, {2, {"b", "c", "a"}}};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("create_store") {
  auto s = testutil::abc_schema();
  auto dir = testutil::scratch("engine_create");
  auto set = ReplicaSet::create(dir / "hr", s, three_layouts(), ReplicaMode::HR);
  CHECK(set->size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(std::filesystem::is_directory(dir / "hr" / "store" / std::to_string(i) / "t"));
  CHECK(std::filesystem::exists(dir / "hr" / "manifest.json"));

  std::vector<ReplicaLayout> dup{{0, {"a", "b", "c"}}, {1, {"a", "b", "c"}}};
  CHECK_NOTHROW(ReplicaSet::create(dir / "dup", s, dup, ReplicaMode::HR));
  CHECK_NOTHROW(ReplicaSet::create(dir / "tr", s, dup, ReplicaMode::TR));
  CHECK(code_of([&] { ReplicaSet::create(dir / "tr2", s, three_layouts(), ReplicaMode::TR); }) ==
        ErrorCode::InvalidLayout);
  CHECK(code_of([&] { ReplicaSet::create(dir / "bad", s, {{0, {"a", "b"}}}, ReplicaMode::HR); }) ==
        ErrorCode::InvalidLayout);
  CHECK(code_of([&] { ReplicaSet::create(dir / "hr", s, three_layouts(), ReplicaMode::HR); }) ==
        ErrorCode::ManifestMismatch);
  CHECK(code_of([&] { ReplicaSet::open(dir / "missing"); }) == ErrorCode::StoreMissing);

  if (::geteuid() != 0) {
    auto ro = dir / "readonly";
    std::filesystem::create_directories(ro);
    ::chmod(ro.c_str(), 0500);
    CHECK(code_of([&] { ReplicaSet::create(ro / "x", s, three_layouts(), ReplicaMode::HR); }) == ErrorCode::IoFailure);
    ::chmod(ro.c_str(), 0700);
  }
  // a path below a regular file can never be created, even as root
  {
    std::ofstream(dir / "plainfile") << "x";
  }
  CHECK(code_of([&] { ReplicaSet::create(dir / "plainfile" / "x", s, three_layouts(), ReplicaMode::HR); }) ==
        ErrorCode::IoFailure);
}

TEST_CASE("writes reach every replica in its own order") {
  auto s = testutil::abc_schema();
  auto set = ReplicaSet::create(testutil::scratch("engine_write"), s, three_layouts(), ReplicaMode::HR);
  auto rows = testutil::grid10();
  std::shuffle(rows.begin(), rows.end(), std::mt19937_64(4));
  set->write(rows);
  set->write(std::span<const Row>{});
  set->flush_all();
  auto expected = as_multiset(rows);
  std::vector<std::vector<std::string>> dumps;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(as_multiset(set->full_scan(i)) == expected);
    dumps.push_back(set->replica(i)->dump_keys());
    CHECK(std::is_sorted(dumps.back().begin(), dumps.back().end()));
  }
  // same rows, different sequences of full rows
  CHECK(set->full_scan(0) != set->full_scan(1));
  CHECK(set->full_scan(1) != set->full_scan(2));

  // a malformed row aborts the whole batch
  std::vector<Row> bad{{std::int64_t{1}, std::int64_t{2}, std::int64_t{3}, std::int64_t{4}},
                       {std::int64_t{1}, std::string("x"), std::int64_t{3}, std::int64_t{4}}};
  CHECK(code_of([&] { set->write(bad); }) == ErrorCode::TypeMismatch);
  for (std::size_t i = 0; i < 3; ++i) CHECK(set->replica(i)->row_count() == 1000);
}

TEST_CASE("routing and execution") {
  auto s = testutil::abc_schema();
  std::vector<ReplicaLayout> two{{0, {"a", "b", "c"}}, {1, {"c", "a", "b"}}};
  auto set = ReplicaSet::create(testutil::scratch("engine_route"), s, two, ReplicaMode::HR);
  set->write(testutil::grid10());
  set->flush_all();
  CHECK(set->route(q3(s)) == 0);
  auto r = set->execute(q3(s));
  CHECK(r.replica_used == 0);
  CHECK(r.rows_scanned == 30);
  CHECK(r.estimate == 30.0);
  CHECK(r.rows.size() == 15);

  ExecuteOptions fixed;
  fixed.replica = 1;
  auto r1 = set->execute(q3(s), fixed);
  CHECK(r1.rows_scanned == 500);
  CHECK(as_multiset(r1.rows) == as_multiset(r.rows));

  set->set_latency_model(LatencyModel({{3, LinearFit{2e-6, 1e-3, 1, 0, 10}}}));
  CHECK(set->route(q3(s)) == 0);

  Query sum = q3(s);
  sum.sum_column = "v";
  auto rs = set->execute(sum);
  double expect = 0;
  for (const auto& row : r.rows) expect += static_cast<double>(std::get<std::int64_t>(row[3]));
  CHECK(rs.sum == expect);

  // auto-routing hits the replica with the fewest scanned rows
  auto stats = set->stats();
  auto w = gen_queries(QueryTemplate::Random, 200, 6, *stats, s);
  for (const auto& q : w.queries) {
    auto a = set->execute(q);
    std::uint64_t best = UINT64_MAX;
    std::multiset<Row> first;
    for (std::size_t i = 0; i < 2; ++i) {
      ExecuteOptions o;
      o.replica = i;
      auto x = set->execute(q, o);
      best = std::min(best, x.rows_scanned);
      if (i == 0) first = as_multiset(x.rows);
      CHECK(as_multiset(x.rows) == first);
    }
    CHECK(a.rows_scanned == best);
  }
}

TEST_CASE("TR mode routes round robin") {
  auto s = testutil::abc_schema();
  std::vector<ReplicaLayout> same(3, ReplicaLayout{0, {"a", "b", "c"}});
  auto set = ReplicaSet::create(testutil::scratch("engine_tr"), s, same, ReplicaMode::TR);
  set->write(testutil::grid10());
  std::vector<std::size_t> used;
  for (int i = 0; i < 6; ++i) used.push_back(set->execute(q3(s)).replica_used);
  CHECK(used == std::vector<std::size_t>{0, 1, 2, 0, 1, 2});
}

TEST_CASE("recover rebuilds a lost replica") {
  auto s = testutil::abc_schema();
  auto dir = testutil::scratch("engine_recover");
  EngineOptions opts;
  opts.store.memtable_bytes = 8192;
  auto set = ReplicaSet::create(dir, s, three_layouts(), ReplicaMode::HR, opts);
  auto rows = testutil::grid10();
  std::shuffle(rows.begin(), rows.end(), std::mt19937_64(8));
  set->write(std::span(rows).first(600));
  set->flush_all();
  set->write(std::span(rows).subspan(600));
  set->compact_all();

  auto stats = set->stats();
  auto w = gen_queries(QueryTemplate::Random, 50, 2, *stats, s);
  std::vector<std::multiset<Row>> before;
  for (const auto& q : w.queries) before.push_back(as_multiset(set->execute(q).rows));

  auto report = set->recover(2);
  CHECK(report.rows == 1000);
  CHECK(report.donor == 0);
  auto expected = as_multiset(set->full_scan(0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(as_multiset(set->full_scan(i)) == expected);
  auto keys = set->replica(2)->dump_keys();
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(keys == set->replica(2)->dump_keys());
  for (std::size_t i = 0; i < w.queries.size(); ++i) CHECK(as_multiset(set->execute(w.queries[i]).rows) == before[i]);

  // rebuilding the donor itself uses the next survivor
  CHECK(set->recover(0).donor == 1);
  CHECK(as_multiset(set->full_scan(0)) == expected);

  auto lone = ReplicaSet::create(dir / "lone", s, {{0, {"a", "b", "c"}}}, ReplicaMode::HR);
  CHECK(code_of([&] { lone->recover(0); }) == ErrorCode::NoSurvivingReplica);
}

TEST_CASE("async writes drain to the same state") {
  auto s = testutil::abc_schema();
  auto set = ReplicaSet::create(testutil::scratch("engine_async"), s, three_layouts(), ReplicaMode::HR);
  auto rows = testutil::grid10();
  for (std::size_t i = 0; i < rows.size(); i += 100)
    set->write_async(std::vector<Row>(rows.begin() + i, rows.begin() + i + 100));
  set->drain();
  for (std::size_t i = 0; i < 3; ++i) CHECK(as_multiset(set->full_scan(i)) == as_multiset(rows));
}

TEST_CASE("manifest persists across close and open") {
  auto s = testutil::abc_schema();
  auto dir = testutil::scratch("engine_reopen");
  std::vector<std::string> dump;
  {
    auto set = ReplicaSet::create(dir, s, three_layouts(), ReplicaMode::HR);
    set->write(testutil::grid10());
    set->close();
    CHECK(code_of([&] { set->execute(q3(s)); }) == ErrorCode::StoreClosed);
  }
  auto set = ReplicaSet::open(dir);
  CHECK(set->mode() == ReplicaMode::HR);
  CHECK(set->layouts()[1].order == std::vector<std::string>{"c", "a", "b"});
  CHECK(set->stats()->total_rows() == 1000);
  auto r = set->execute(q3(s));
  CHECK(r.rows_scanned == 30);
  // new writes continue the sequence instead of colliding with old keys
  set->write(testutil::grid10());
  CHECK(set->replica(0)->row_count() == 2000);
  auto manifest = json::read_file(dir / "manifest.json");
  CHECK(manifest.at("replicas").size() == 3);
  CHECK(manifest.at("virtual_nodes") == 6);
}

TEST_CASE("place_replica") {
  for (std::int64_t p = 0; p < 50; ++p) CHECK(place_replica(3, Value{p}, Datatype::Int64, 1) == 0);
  for (std::int64_t p = 0; p < 50; ++p) {
    std::set<std::size_t> nodes;
    for (std::size_t r = 0; r < 3; ++r) nodes.insert(place_replica(r, Value{p}, Datatype::Int64, 6));
    CHECK(nodes.size() == 3);
  }
  CHECK(place_replica(1, Value{std::string("x")}, Datatype::String, 6) ==
        place_replica(1, Value{std::string("x")}, Datatype::String, 6));
  // FNV-1a of the empty string, then the offset
  CHECK(place_replica(0, std::nullopt, std::nullopt, 7) == 0xcbf29ce484222325ULL % 7);
  CHECK_THROWS_AS(place_replica(0, std::nullopt, std::nullopt, 0), Error);
}
