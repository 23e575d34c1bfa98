#pragma once

// Dataset and query generators: a TPC-H-like `orders` table, the uniform
// simulation dataset, and query templates over them.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/query.hpp"
#include "hrep/schema.hpp"
#include "hrep/stats.hpp"

namespace hrep {

/// Pull-style row stream; next() returns false when exhausted.
class RowGenerator {
 public:
  virtual ~RowGenerator() = default;
  virtual const Schema& schema() const = 0;
  virtual std::uint64_t size() const = 0;
  virtual bool next(Row& row) = 0;

  std::vector<Row> take_all() {
    std::vector<Row> rows;
    rows.reserve(size());
    Row r;
    while (next(r)) rows.push_back(r);
    return rows;
  }
};

namespace detail {
inline std::string random_letters(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, 'a');
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 8 == 0) bits = rng();
    s[i] = static_cast<char>('a' + (bits & 0xFF) % 26);
    bits >>= 8;
  }
  return s;
}
}  // namespace detail

inline constexpr std::uint64_t kOrdersPerScale = 1'500'000;
inline constexpr std::int64_t kOrdersStartDate = 8035;  // 1992-01-01
inline constexpr std::int64_t kOrdersDateSpan = 7 * 365;

inline Schema orders_schema() {
  return Schema("orders", {
                              {"orderkey", ColumnKind::Value, Datatype::Int64},
                              {"custkey", ColumnKind::ClusteringKey, Datatype::Int64},
                              {"orderstatus", ColumnKind::Value, Datatype::String},
                              {"totalprice", ColumnKind::Value, Datatype::Float64},
                              {"orderdate", ColumnKind::ClusteringKey, Datatype::Date},
                              {"orderpriority", ColumnKind::Value, Datatype::String},
                              {"clerk", ColumnKind::ClusteringKey, Datatype::String},
                              {"shippriority", ColumnKind::Value, Datatype::Int64},
                              {"comment", ColumnKind::Value, Datatype::String},
                          });
}

inline std::string clerk_name(std::int64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "Clerk#%09lld", static_cast<long long>(id));
  return buf;
}

/// TPC-H `orders`-like rows: 1.5M x scale rows, custkey over 150,000 x scale
/// ids, orderdate over seven years of days, clerk over 1,000 x scale names.
class OrdersGenerator final : public RowGenerator {
 public:
  OrdersGenerator(double scale, std::uint64_t seed) : schema_(orders_schema()), rng_(seed) {
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
    rows_ = static_cast<std::uint64_t>(std::llround(static_cast<double>(kOrdersPerScale) * scale));
    customers_ = std::max<std::int64_t>(1, std::llround(150'000.0 * scale));
    clerks_ = std::max<std::int64_t>(1, std::llround(1'000.0 * scale));
  }

  const Schema& schema() const override { return schema_; }
  std::uint64_t size() const override { return rows_; }

  bool next(Row& row) override {
    static constexpr std::string_view kStatus[] = {"F", "O", "P"};
    static constexpr std::string_view kPriority[] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"};
    if (emitted_ >= rows_) return false;
    std::uniform_int_distribution<std::int64_t> cust(1, customers_);
    std::uniform_int_distribution<std::int64_t> day(0, kOrdersDateSpan - 1);
    std::uniform_int_distribution<std::int64_t> clerk(1, clerks_);
    std::uniform_int_distribution<std::int64_t> cents(85'000, 55'000'000);
    std::uniform_int_distribution<int> status(0, 2), priority(0, 4);
    std::uniform_int_distribution<std::size_t> comment_len(10, 30);
    row.resize(9);
    row[0] = static_cast<std::int64_t>(emitted_ + 1);
    row[1] = cust(rng_);
    row[2] = std::string(kStatus[status(rng_)]);
    row[3] = static_cast<double>(cents(rng_)) / 100.0;
    row[4] = kOrdersStartDate + day(rng_);
    row[5] = std::string(kPriority[priority(rng_)]);
    row[6] = clerk_name(clerk(rng_));
    row[7] = std::int64_t{0};
    row[8] = detail::random_letters(rng_, comment_len(rng_));
    ++emitted_;
    return true;
  }

 private:
  Schema schema_;
  std::mt19937_64 rng_;
  std::uint64_t rows_ = 0;
  std::int64_t customers_ = 0;
  std::int64_t clerks_ = 0;
  std::uint64_t emitted_ = 0;
};

inline Schema uniform_schema(std::size_t keys) {
  std::vector<ColumnDef> cols;
  for (std::size_t i = 0; i < keys; ++i)
    cols.push_back({"k" + std::to_string(i), ColumnKind::ClusteringKey, Datatype::Int64});
  cols.push_back({"payload", ColumnKind::Value, Datatype::String});
  return Schema("uniform", std::move(cols));
}

/// Smallest d with d^m >= n, i.e. ceil(n^(1/m)) without floating-point error.
inline std::uint64_t uniform_domain(std::uint64_t n, std::size_t m) {
  auto pow_at_least = [&](std::uint64_t d) {
    unsigned __int128 p = 1;
    for (std::size_t i = 0; i < m; ++i) {
      p *= d;
      if (p >= n) return true;
    }
    return p >= n;
  };
  auto d = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(m))));
  d = std::max<std::uint64_t>(d, 1);
  while (d > 1 && pow_at_least(d - 1)) --d;
  while (!pow_at_least(d)) ++d;
  return d;
}

inline constexpr std::size_t kUniformPayloadBytes = 50;

/// Simulation dataset: m independent integer keys, each uniform over
/// {0 .. d-1} with d = ceil(N^(1/m)), plus a 50-byte payload. Rows are N
/// distinct cells of the d^m grid drawn without replacement, in random order,
/// so N = d^m yields the complete grid.
class UniformGenerator final : public RowGenerator {
 public:
  UniformGenerator(std::uint64_t rows, std::size_t keys, std::uint64_t seed)
      : schema_(uniform_schema(keys == 0 ? 1 : keys)), rows_(rows), keys_(keys), rng_(seed) {
    if (rows < 1) throw Error(ErrorCode::InvalidArgument, "need at least one row");
    if (keys < 1) throw Error(ErrorCode::InvalidArgument, "need at least one key");
    domain_ = uniform_domain(rows, keys);
    unsigned __int128 cells = 1;
    for (std::size_t i = 0; i < keys; ++i) {
      cells *= domain_;
      if (cells > (unsigned __int128)(std::numeric_limits<std::uint64_t>::max() >> 1))
        throw Error(ErrorCode::InvalidArgument, "key space too large");
    }
    cells_ = static_cast<std::uint64_t>(cells);
    if (cells_ <= 4 * rows_) {
      pool_.resize(cells_);
      for (std::uint64_t i = 0; i < cells_; ++i) pool_[i] = i;
    }
  }

  const Schema& schema() const override { return schema_; }
  std::uint64_t size() const override { return rows_; }
  std::uint64_t domain() const { return domain_; }

  bool next(Row& row) override {
    if (emitted_ >= rows_) return false;
    std::uint64_t cell = 0;
    if (!pool_.empty()) {
      // Partial Fisher-Yates: position `emitted_` receives a uniform pick of the rest.
      std::uniform_int_distribution<std::uint64_t> pick(emitted_, cells_ - 1);
      auto j = pick(rng_);
      std::swap(pool_[emitted_], pool_[j]);
      cell = pool_[emitted_];
    } else {
      std::uniform_int_distribution<std::uint64_t> pick(0, cells_ - 1);
      do cell = pick(rng_);
      while (!seen_.insert(cell).second);
    }
    row.resize(keys_ + 1);
    for (std::size_t k = 0; k < keys_; ++k) {
      row[k] = static_cast<std::int64_t>(cell % domain_);
      cell /= domain_;
    }
    row[keys_] = detail::random_letters(rng_, kUniformPayloadBytes);
    ++emitted_;
    return true;
  }

 private:
  Schema schema_;
  std::uint64_t rows_;
  std::size_t keys_;
  std::mt19937_64 rng_;
  std::uint64_t domain_ = 0;
  std::uint64_t cells_ = 0;
  std::vector<std::uint64_t> pool_;
  std::unordered_set<std::uint64_t> seen_;
  std::uint64_t emitted_ = 0;
};

enum class QueryTemplate { Q1, Q2, Mix, Random };

inline std::string_view to_string(QueryTemplate t) {
  switch (t) {
    case QueryTemplate::Q1: return "Q1";
    case QueryTemplate::Q2: return "Q2";
    case QueryTemplate::Mix: return "mix";
    case QueryTemplate::Random: return "random";
  }
  return "?";
}

inline QueryTemplate parse_template(std::string_view s) {
  if (s == "Q1" || s == "q1") return QueryTemplate::Q1;
  if (s == "Q2" || s == "q2") return QueryTemplate::Q2;
  if (s == "mix") return QueryTemplate::Mix;
  if (s == "random") return QueryTemplate::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown query template '" + std::string(s) + "'");
}

struct Workload {
  std::string template_name;
  std::uint64_t seed = 0;
  std::vector<Query> queries;
};

/// Probabilities of the random template: equality, range, otherwise global.
inline constexpr double kRandomEqualityP = 0.4;
inline constexpr double kRandomRangeP = 0.3;
inline constexpr std::int64_t kQ2MaxRangeDays = 30;

namespace detail {

inline const Value& sample_observed(const ColumnDistribution& d, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint64_t> rank(0, d.total - 1);
  return d.value_at_rank(rank(rng));
}

inline const ColumnDistribution& need(const ColumnStats& stats, std::string_view column) {
  const auto* d = stats.find(column);
  if (!d || d->total == 0)
    throw Error(ErrorCode::InsufficientStats, "no statistics for '" + std::string(column) + "'",
                std::string(column));
  return *d;
}

inline Query q1(const ColumnStats& stats, std::mt19937_64& rng) {
  Query q;
  q.filters.push_back(Filter::eq("orderdate", sample_observed(need(stats, "orderdate"), rng)));
  q.filters.push_back(Filter::eq("clerk", sample_observed(need(stats, "clerk"), rng)));
  q.projection = {"totalprice"};
  return q;
}

inline Query q2(const ColumnStats& stats, std::mt19937_64& rng) {
  Query q;
  q.filters.push_back(Filter::eq("custkey", sample_observed(need(stats, "custkey"), rng)));
  q.filters.push_back(Filter::eq("clerk", sample_observed(need(stats, "clerk"), rng)));
  auto start = std::get<std::int64_t>(sample_observed(need(stats, "orderdate"), rng));
  std::uniform_int_distribution<std::int64_t> width(1, kQ2MaxRangeDays);
  q.filters.push_back(Filter::range("orderdate", start, start + width(rng)));
  q.sum_column = "totalprice";
  return q;
}

/// Uniformly random [a, b) with a < b: integers over [min, max+1], other types
/// over two distinct observed values. Nullopt when the column has one value.
inline std::optional<Filter> random_range(const ColumnDistribution& d, std::mt19937_64& rng) {
  if (d.type == Datatype::Int64 || d.type == Datatype::Date) {
    auto lo = std::get<std::int64_t>(d.min());
    auto hi = std::get<std::int64_t>(d.max()) + 1;
    std::uniform_int_distribution<std::int64_t> pick(lo, hi);
    std::int64_t a = pick(rng), b = pick(rng);
    while (a == b) b = pick(rng);
    if (a > b) std::swap(a, b);
    return Filter::range(d.name, a, b);
  }
  if (d.values.size() < 2) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, d.values.size() - 1);
  std::size_t a = pick(rng), b = pick(rng);
  while (a == b) b = pick(rng);
  if (a > b) std::swap(a, b);
  return Filter::range(d.name, d.values[a], d.values[b]);
}

inline Query random_query(const ColumnStats& stats, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Query q;
  for (const auto& d : stats.columns()) {
    double u = unit(rng);
    if (u < kRandomEqualityP) {
      q.filters.push_back(Filter::eq(d.name, sample_observed(d, rng)));
    } else if (u < kRandomEqualityP + kRandomRangeP) {
      if (auto f = random_range(d, rng)) q.filters.push_back(*f);
    }
  }
  return q;
}

}  // namespace detail

/// Instantiates `count` queries from a template, drawing literals from the
/// observed value distributions in `stats`. Every query comes back normalized.
inline Workload gen_queries(QueryTemplate tmpl, std::size_t count, std::uint64_t seed, const ColumnStats& stats,
                            const Schema& schema) {
  if (stats.total_rows() == 0) throw Error(ErrorCode::InsufficientStats, "statistics are empty");
  std::mt19937_64 rng(seed);
  Workload w{std::string(to_string(tmpl)), seed, {}};
  w.queries.reserve(count);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < count; ++i) {
    Query q;
    switch (tmpl) {
      case QueryTemplate::Q1: q = detail::q1(stats, rng); break;
      case QueryTemplate::Q2: q = detail::q2(stats, rng); break;
      case QueryTemplate::Mix: q = coin(rng) ? detail::q1(stats, rng) : detail::q2(stats, rng); break;
      case QueryTemplate::Random: q = detail::random_query(stats, rng); break;
    }
    w.queries.push_back(normalize(q, schema));
  }
  return w;
}

}  // namespace hrep
