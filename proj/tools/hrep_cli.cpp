// hrep: data generation, layout optimization, loading, querying and benchmarks
// for heterogeneous-replica stores.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrep/hrep.hpp"

namespace fs = std::filesystem;
using namespace hrep;

namespace {

struct Dataset {
  Schema schema;
  std::shared_ptr<const ColumnStats> stats;
};

/// Schema plus statistics of a dataset directory; stats.json is built on first use.
Dataset load_dataset_meta(const fs::path& dir) {
  Dataset d{read_dataset_schema(dir), nullptr};
  auto stats_path = dir / "stats.json";
  if (fs::exists(stats_path)) {
    d.stats = std::make_shared<const ColumnStats>(json::stats_from_json(json::read_file(stats_path)));
  } else {
    auto reader = open_dataset(dir);
    StatsBuilder b(d.schema);
    Row r;
    while (reader.next(r)) b.add(r);
    d.stats = std::make_shared<const ColumnStats>(b.build());
    json::write_file(stats_path, json::to_json(*d.stats));
  }
  return d;
}

void write_trace(const fs::path& path, const std::vector<TraceEntry>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.precision(12);
  out << "iteration,temperature,candidate_cost,current_cost,best_cost,accepted\n";
  for (const auto& e : trace)
    out << e.iteration << ',' << e.temperature << ',' << e.candidate << ',' << e.current << ',' << e.best << ','
        << (e.accepted ? 1 : 0) << '\n';
}

void print_layouts(const std::vector<ReplicaLayout>& layouts) {
  for (const auto& l : layouts) std::cout << "  replica " << l.replica_id << ": " << layout_string(l) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneous replica store toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Generate a dataset directory (schema.json, data.csv, stats.json)");
  std::string kind;
  double scale = 1.0;
  std::uint64_t rows = 1'000'000;
  std::size_t keys = 4;
  std::uint64_t seed = 1;
  std::string out;
  gen_data->add_option("--kind", kind, "tpch-orders | uniform")->required()->check(CLI::IsMember({"tpch-orders", "uniform"}));
  gen_data->add_option("--scale", scale, "orders scale factor (1.5M rows per unit)")->check(CLI::PositiveNumber);
  gen_data->add_option("--rows", rows, "uniform: row count")->check(CLI::PositiveNumber);
  gen_data->add_option("--keys", keys, "uniform: clustering key count")->check(CLI::PositiveNumber);
  gen_data->add_option("--seed", seed, "RNG seed");
  gen_data->add_option("--out", out, "output dataset directory")->required();

  // gen-workload
  auto* gen_workload = app.add_subcommand("gen-workload", "Generate a query workload from dataset statistics");
  std::string data_dir, tmpl = "random";
  std::size_t count = 500;
  gen_workload->add_option("--data", data_dir, "dataset directory")->required();
  gen_workload->add_option("--template", tmpl, "Q1 | Q2 | mix | random");
  gen_workload->add_option("--count", count, "number of queries")->check(CLI::PositiveNumber);
  gen_workload->add_option("--seed", seed, "RNG seed");
  gen_workload->add_option("--out", out, "workload.json path")->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Build exact column statistics for a dataset");
  stats_cmd->add_option("--data", data_dir, "dataset directory")->required();
  stats_cmd->add_option("--out", out, "stats.json path (default: <data>/stats.json)");

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Time graduated scans and fit the latency model");
  std::string work_dir, samples_out;
  std::vector<std::size_t> key_counts{2, 3, 4, 5, 6};
  std::uint64_t target_rows = 1'000'000;
  std::size_t repeats = 3;
  calibrate_cmd->add_option("--work", work_dir, "scratch directory for calibration stores")->required();
  calibrate_cmd->add_option("--keys", key_counts, "clustering key counts to calibrate")->delimiter(',');
  calibrate_cmd->add_option("--rows", target_rows, "rows per calibration store (largest scan)")->check(CLI::PositiveNumber);
  calibrate_cmd->add_option("--repeats", repeats, "timed runs per scan (median kept)")->check(CLI::PositiveNumber);
  calibrate_cmd->add_option("--seed", seed, "RNG seed");
  calibrate_cmd->add_option("--out", out, "costmodel.json path")->required();
  calibrate_cmd->add_option("--samples", samples_out, "write raw samples CSV here");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Search replica layouts for a workload");
  std::string workload_path, trace_out;
  std::size_t replicas = 3;
  std::optional<double> t0;
  double alpha = 0.995;
  std::size_t k_max = 10'000, restarts = 1;
  bool brute = false;
  optimize->add_option("--data", data_dir, "dataset directory (schema and statistics)")->required();
  optimize->add_option("--workload", workload_path, "workload.json")->required();
  optimize->add_option("--replicas", replicas, "replication factor n")->check(CLI::PositiveNumber);
  optimize->add_option("--t0", t0, "initial temperature (default: 10% of the initial cost)");
  optimize->add_option("--alpha", alpha, "geometric cooling factor");
  optimize->add_option("--k-max", k_max, "iterations")->check(CLI::PositiveNumber);
  optimize->add_option("--restarts", restarts, "independent searches (seeds seed, seed+1, ...)")->check(CLI::PositiveNumber);
  optimize->add_option("--seed", seed, "RNG seed");
  optimize->add_flag("--brute-force", brute, "enumerate every layout multiset instead of annealing");
  optimize->add_option("--out", out, "layouts.json path")->required();
  optimize->add_option("--trace", trace_out, "trace.csv path (annealing only)");

  // load
  auto* load = app.add_subcommand("load", "Create a replica store and load a dataset into it");
  std::string layouts_path, store_dir, mode_name = "HR";
  std::size_t memtable_mb = 8, virtual_nodes = 6;
  bool sequential = false, no_compact = false;
  load->add_option("--data", data_dir, "dataset directory")->required();
  load->add_option("--layouts", layouts_path, "layouts.json")->required();
  load->add_option("--store", store_dir, "store directory to create")->required();
  load->add_option("--mode", mode_name, "HR | TR")->check(CLI::IsMember({"HR", "TR", "hr", "tr"}));
  load->add_option("--replicas", replicas, "TR: copies of the first layout (default: layout count)");
  load->add_option("--memtable-mb", memtable_mb, "memtable flush threshold")->check(CLI::PositiveNumber);
  load->add_option("--virtual-nodes", virtual_nodes, "logical node count for placement")->check(CLI::PositiveNumber);
  load->add_flag("--sequential", sequential, "apply batches to replicas one after another");
  load->add_flag("--no-compact", no_compact, "leave the flushed runs unmerged");

  // query
  auto* query = app.add_subcommand("query", "Run a workload against a store and write per-query metrics");
  std::size_t threads = 1;
  std::optional<std::size_t> fixed_replica;
  std::string costmodel_path;
  query->add_option("--store", store_dir, "store directory")->required();
  query->add_option("--workload", workload_path, "workload.json")->required();
  query->add_option("--out", out, "metrics CSV path")->required();
  query->add_option("--threads", threads, "concurrent queries")->check(CLI::PositiveNumber);
  query->add_option("--replica", fixed_replica, "route every query to this replica");
  query->add_option("--costmodel", costmodel_path, "route with this latency model instead of row estimates");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a workload against an HR store and a TR store holding the same rows");
  std::string hr_dir, tr_dir, summary_out;
  bench->add_option("--hr", hr_dir, "HR store directory")->required();
  bench->add_option("--tr", tr_dir, "TR store directory")->required();
  bench->add_option("--workload", workload_path, "workload.json")->required();
  bench->add_option("--out", out, "per-query CSV path")->required();
  bench->add_option("--summary", summary_out, "aggregate CSV path");
  bench->add_option("--threads", threads, "concurrent queries")->check(CLI::PositiveNumber);
  bench->add_option("--costmodel", costmodel_path, "route HR queries with this latency model");

  // recover
  auto* recover = app.add_subcommand("recover", "Delete one replica and rebuild it from a survivor");
  std::size_t lost = 0;
  recover->add_option("--store", store_dir, "store directory")->required();
  recover->add_option("--replica", lost, "replica to rebuild")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_data) {
      std::unique_ptr<RowGenerator> gen;
      if (kind == "tpch-orders")
        gen = std::make_unique<OrdersGenerator>(scale, seed);
      else
        gen = std::make_unique<UniformGenerator>(rows, keys, seed);
      const auto& schema = gen->schema();
      fs::create_directories(out);
      json::write_file(fs::path(out) / "schema.json", json::to_json(schema));
      CsvWriter w(fs::path(out) / "data.csv", schema);
      StatsBuilder sb(schema);
      Row r;
      std::uint64_t n = 0;
      while (gen->next(r)) {
        w.write(r);
        sb.add_unchecked(r);
        ++n;
      }
      w.close();
      json::write_file(fs::path(out) / "stats.json", json::to_json(sb.build()));
      std::cout << "wrote " << n << " rows to " << out << "\n";
    } else if (*gen_workload) {
      auto d = load_dataset_meta(data_dir);
      auto w = gen_queries(parse_template(tmpl), count, seed, *d.stats, d.schema);
      json::write_file(out, json::to_json(w));
      std::cout << "wrote " << w.queries.size() << " queries to " << out << "\n";
    } else if (*stats_cmd) {
      auto schema = read_dataset_schema(data_dir);
      auto reader = open_dataset(data_dir);
      StatsBuilder sb(schema);
      Row r;
      while (reader.next(r)) sb.add(r);
      auto s = sb.build();
      auto path = out.empty() ? fs::path(data_dir) / "stats.json" : fs::path(out);
      json::write_file(path, json::to_json(s));
      std::cout << "stats over " << s.total_rows() << " rows written to " << path.string() << "\n";
    } else if (*calibrate_cmd) {
      CalibrationOptions opts;
      opts.key_counts = key_counts;
      opts.target_rows = target_rows;
      opts.repeats = repeats;
      opts.seed = seed;
      auto samples = run_calibration(work_dir, opts);
      if (!samples_out.empty()) write_calibration_csv(samples_out, samples);
      auto model = calibrate(samples);
      json::write_file(out, json::to_json(model));
      for (const auto& [k, f] : model.fits())
        std::printf("keys=%zu slope=%.4g s/row intercept=%.4g s r2=%.4f\n", k, f.slope, f.intercept, f.r2);
    } else if (*optimize) {
      auto d = load_dataset_meta(data_dir);
      auto w = json::workload_from_json(json::read_file(workload_path), d.schema);
      std::vector<ReplicaLayout> layouts;
      double cost_rows = 0;
      if (brute) {
        auto r = brute_force(w.queries, *d.stats, replicas);
        layouts = r.layouts;
        cost_rows = r.cost;
        std::cout << "enumerated " << r.enumerated << " layout multisets\n";
      } else {
        AnnealParams p;
        p.t0 = t0;
        p.alpha = alpha;
        p.k_max = k_max;
        p.seed = seed;
        p.restarts = restarts;
        auto r = anneal(w.queries, *d.stats, replicas, p);
        layouts = r.layouts;
        cost_rows = r.cost;
        if (!trace_out.empty()) write_trace(trace_out, r.trace);
        std::cout << "initial cost " << r.initial_cost << " rows/query\n";
      }
      nlohmann::json j{{"layouts", json::to_json(layouts)}, {"cost_rows", cost_rows}};
      json::write_file(out, j);
      std::cout << "best cost " << cost_rows << " rows/query\n";
      print_layouts(layouts);
    } else if (*load) {
      auto schema = read_dataset_schema(data_dir);
      auto layouts = json::layouts_from_json(json::read_file(layouts_path));
      auto mode = parse_mode(mode_name);
      if (mode == ReplicaMode::TR) {
        if (layouts.empty()) throw Error(ErrorCode::InvalidLayout, "no layouts");
        std::size_t n = load->count("--replicas") ? replicas : layouts.size();
        layouts.assign(n, layouts.front());
      }
      for (std::size_t i = 0; i < layouts.size(); ++i) layouts[i].replica_id = i;
      EngineOptions eo;
      eo.store.memtable_bytes = memtable_mb << 20;
      eo.virtual_nodes = virtual_nodes;
      auto set = ReplicaSet::create(store_dir, schema, layouts, mode, eo);
      auto reader = open_dataset(data_dir);
      LoadOptions lo;
      lo.parallel = !sequential;
      lo.compact = !no_compact;
      auto rep = load_rows(*set, reader, lo);
      set->close();
      std::printf("loaded %llu rows into %zu %s replicas: write %.3f s (%.0f rows/s), compact %.3f s\n",
                  static_cast<unsigned long long>(rep.rows), layouts.size(), std::string(to_string(mode)).c_str(),
                  rep.write_seconds, rep.rows_per_second(), rep.compact_seconds);
    } else if (*query) {
      auto set = ReplicaSet::open(store_dir);
      if (!costmodel_path.empty()) set->set_latency_model(json::latency_model_from_json(json::read_file(costmodel_path)));
      auto w = json::workload_from_json(json::read_file(workload_path), set->schema());
      std::vector<QueryRecord> records;
      if (fixed_replica) {
        for (std::size_t i = 0; i < w.queries.size(); ++i) {
          ExecuteOptions eo;
          eo.replica = *fixed_replica;
          eo.materialize = false;
          auto r = set->execute(w.queries[i], eo);
          records.push_back({i, std::string(to_string(set->mode())), r.replica_used, r.estimate, r.rows_scanned,
                             r.rows_matched, r.latency});
        }
      } else {
        records = run_queries(*set, w.queries, threads);
      }
      write_query_csv(out, records);
      double lat = 0, scanned = 0;
      for (const auto& r : records) lat += r.latency, scanned += static_cast<double>(r.rows_scanned);
      std::printf("%zu queries: mean rows_scanned %.1f, mean latency %.6f s\n", records.size(),
                  scanned / records.size(), lat / records.size());
    } else if (*bench) {
      auto hr = ReplicaSet::open(hr_dir);
      auto tr = ReplicaSet::open(tr_dir);
      if (hr->mode() != ReplicaMode::HR) throw Error(ErrorCode::ManifestMismatch, hr_dir + " is not an HR store");
      if (tr->mode() != ReplicaMode::TR) throw Error(ErrorCode::ManifestMismatch, tr_dir + " is not a TR store");
      if (!costmodel_path.empty()) hr->set_latency_model(json::latency_model_from_json(json::read_file(costmodel_path)));
      auto w = json::workload_from_json(json::read_file(workload_path), hr->schema());
      auto rep = run_bench(*hr, *tr, w.queries, threads);
      write_query_csv(out, rep.queries);
      if (!summary_out.empty()) write_bench_summary(summary_out, rep);
      std::printf("HR: mean rows_scanned %.1f, mean latency %.6f s\n", rep.hr_mean_rows, rep.hr_mean_latency);
      std::printf("TR: mean rows_scanned %.1f, mean latency %.6f s\n", rep.tr_mean_rows, rep.tr_mean_latency);
      std::printf("improvement: rows %.3f, latency %.3f\n", rep.rows_improvement, rep.latency_improvement);
    } else if (*recover) {
      auto set = ReplicaSet::open(store_dir);
      auto rep = set->recover(lost);
      set->set_metric("recovery_seconds", rep.seconds);
      set->close();
      std::printf("rebuilt replica %zu from replica %zu: %llu rows in %.3f s\n", rep.replica, rep.donor,
                  static_cast<unsigned long long>(rep.rows), rep.seconds);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
