#pragma once

// Replica layout search: simulated annealing over multisets of clustering-key
// permutations, with an exhaustive enumerator as the exact reference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hrep/cost_model.hpp"
#include "hrep/error.hpp"
#include "hrep/query.hpp"
#include "hrep/schema.hpp"
#include "hrep/stats.hpp"

namespace hrep {

struct AnnealParams {
  /// Initial temperature in cost units (estimated rows); defaults to 10% of the initial cost.
  std::optional<double> t0;
  double alpha = 0.995;
  std::size_t k_max = 10'000;
  std::uint64_t seed = 1;
  /// Independent searches with seeds seed, seed+1, ...; the cheapest wins.
  std::size_t restarts = 1;

  void validate() const {
    if (t0 && !(*t0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "t0 must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be at least 1");
    if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");
  }
};

struct AnnealState {
  std::vector<ReplicaLayout> layouts;
  double cost = 0.0;
};

struct TraceEntry {
  std::size_t iteration = 0;
  double temperature = 0.0;
  double candidate = 0.0;
  double current = 0.0;  // after the accept/reject decision
  double best = 0.0;
  bool accepted = false;
};

struct AnnealResult {
  std::vector<ReplicaLayout> layouts;
  double cost = 0.0;
  double initial_cost = 0.0;
  std::vector<TraceEntry> trace;
};

struct BruteForceResult {
  std::vector<ReplicaLayout> layouts;
  double cost = 0.0;
  std::uint64_t enumerated = 0;
};

using AnnealRng = std::mt19937_64;

/// Swaps positions i and j of one replica's layout.
inline AnnealState swap_keys(const AnnealState& state, std::size_t replica, std::size_t i, std::size_t j) {
  AnnealState out = state;
  auto& order = out.layouts.at(replica).order;
  if (i >= order.size() || j >= order.size() || i == j)
    throw Error(ErrorCode::InvalidArgument, "swap positions must be distinct and in range");
  std::swap(order[i], order[j]);
  return out;
}

/// Neighbour move: pick a replica uniformly, then a distinct position pair uniformly, and swap.
inline AnnealState new_state(const AnnealState& state, AnnealRng& rng) {
  if (state.layouts.empty()) throw Error(ErrorCode::InvalidArgument, "state has no replicas");
  const std::size_t m = state.layouts.front().order.size();
  if (m < 2) throw Error(ErrorCode::DegenerateSchema, "need at least two clustering keys to swap");
  std::uniform_int_distribution<std::size_t> pick_replica(0, state.layouts.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_pair(0, m * (m - 1) / 2 - 1);
  auto replica = pick_replica(rng);
  auto pair = pick_pair(rng);
  std::size_t i = 0;
  while (pair >= m - 1 - i) {
    pair -= m - 1 - i;
    ++i;
  }
  return swap_keys(state, replica, i, i + 1 + pair);
}

/// Workload cost in estimated rows with a per-layout cache of query estimates.
class WorkloadEvaluator {
 public:
  WorkloadEvaluator(std::span<const Query> workload, const ColumnStats& stats)
      : workload_(workload.begin(), workload.end()), stats_(&stats) {
    if (workload_.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no queries");
  }

  const std::vector<double>& rows_for(const ReplicaLayout& layout) {
    std::string key;
    for (const auto& k : layout.order) {
      key += k;
      key.push_back('\x1f');
    }
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<double> rows;
    rows.reserve(workload_.size());
    for (const auto& q : workload_) rows.push_back(estimate_rows(*stats_, layout, q).rows);
    return cache_.emplace(std::move(key), std::move(rows)).first->second;
  }

  double cost(std::span<const ReplicaLayout> layouts) {
    std::vector<const std::vector<double>*> cols;
    for (const auto& l : layouts) cols.push_back(&rows_for(l));
    double sum = 0;
    for (std::size_t q = 0; q < workload_.size(); ++q) {
      double best = (*cols[0])[q];
      for (std::size_t r = 1; r < cols.size(); ++r) best = std::min(best, (*cols[r])[q]);
      sum += best;
    }
    return sum / static_cast<double>(workload_.size());
  }

  std::size_t size() const { return workload_.size(); }

 private:
  std::vector<Query> workload_;
  const ColumnStats* stats_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

namespace detail {

inline std::vector<std::string> key_names(const ColumnStats& stats) {
  std::vector<std::string> out;
  for (const auto& c : stats.columns()) out.push_back(c.name);
  return out;
}

inline AnnealResult anneal_once(WorkloadEvaluator& eval, std::vector<ReplicaLayout> start,
                                const AnnealParams& params, std::uint64_t seed) {
  AnnealRng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AnnealState current{std::move(start), 0.0};
  current.cost = eval.cost(current.layouts);
  AnnealResult result;
  result.initial_cost = current.cost;
  result.layouts = current.layouts;
  result.cost = current.cost;
  result.trace.reserve(params.k_max);

  const std::size_t m = current.layouts.front().order.size();
  const double t0 = params.t0.value_or(std::max(current.cost * 0.1, 1e-9));
  double t = t0;
  for (std::size_t k = 1; k <= params.k_max; ++k) {
    t *= params.alpha;
    TraceEntry e{k, t, current.cost, current.cost, result.cost, false};
    if (m >= 2) {
      auto next = new_state(current, rng);
      next.cost = eval.cost(next.layouts);
      e.candidate = next.cost;
      if (next.cost < current.cost || std::exp((current.cost - next.cost) / t) > unit(rng)) {
        current = std::move(next);
        e.accepted = true;
      }
      if (current.cost < result.cost) {
        result.cost = current.cost;
        result.layouts = current.layouts;
      }
    }
    e.current = current.cost;
    e.best = result.cost;
    result.trace.push_back(e);
  }
  return result;
}

}  // namespace detail

/// Searches for the n-replica layout multiset with the lowest mean
/// cheapest-replica estimated rows over `workload`. Returns the best state
/// visited. Without `initial`, starts from n copies of the key order in `stats`.
inline AnnealResult anneal(std::span<const Query> workload, const ColumnStats& stats, std::size_t n_replicas,
                           const AnnealParams& params,
                           std::optional<std::vector<ReplicaLayout>> initial = std::nullopt) {
  params.validate();
  if (workload.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no queries");
  if (n_replicas < 1) throw Error(ErrorCode::InvalidArgument, "need at least one replica");
  std::vector<ReplicaLayout> start;
  if (initial) {
    start = *initial;
    if (start.size() != n_replicas)
      throw Error(ErrorCode::InvalidArgument, "initial state has the wrong replica count");
  } else {
    for (std::size_t i = 0; i < n_replicas; ++i) start.push_back({i, detail::key_names(stats)});
  }
  WorkloadEvaluator eval(workload, stats);
  std::optional<AnnealResult> best;
  for (std::size_t r = 0; r < params.restarts; ++r) {
    auto result = detail::anneal_once(eval, start, params, params.seed + r);
    if (!best || result.cost < best->cost) best = std::move(result);
  }
  for (std::size_t i = 0; i < best->layouts.size(); ++i) best->layouts[i].replica_id = i;
  return *best;
}

/// C(m! + n - 1, n), saturating at UINT64_MAX.
inline std::uint64_t multiset_count(std::size_t m, std::size_t n) {
  long double perms = 1;
  for (std::size_t i = 2; i <= m; ++i) perms *= static_cast<long double>(i);
  long double c = 1;
  for (std::size_t i = 1; i <= n; ++i) c = c * (perms + static_cast<long double>(n - i)) / static_cast<long double>(i);
  if (c >= 1.8e19L) return UINT64_MAX;
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(c)));
}

/// All permutations of `keys`, starting from the given order, in lexicographic
/// order of positions.
inline std::vector<std::vector<std::string>> all_orders(const std::vector<std::string>& keys) {
  std::vector<std::size_t> idx(keys.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<std::string>> out;
  do {
    std::vector<std::string> order;
    for (auto i : idx) order.push_back(keys[i]);
    out.push_back(std::move(order));
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

/// Calls `fn(indices)` for every non-decreasing n-tuple over [0, k).
inline void for_each_multiset(std::size_t k, std::size_t n, const std::function<void(std::span<const std::size_t>)>& fn) {
  std::vector<std::size_t> pick(n, 0);
  if (k == 0) return;
  while (true) {
    fn(pick);
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == k - 1) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[i - 1];
  }
}

inline constexpr std::uint64_t kBruteForceLimit = 1'000'000;

/// Exact optimum by enumerating every multiset of n permutations.
inline BruteForceResult brute_force(std::span<const Query> workload, const ColumnStats& stats, std::size_t n_replicas) {
  if (workload.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no queries");
  if (n_replicas < 1) throw Error(ErrorCode::InvalidArgument, "need at least one replica");
  auto keys = detail::key_names(stats);
  if (multiset_count(keys.size(), n_replicas) > kBruteForceLimit)
    throw Error(ErrorCode::SearchSpaceTooLarge,
                "C(m!+n-1, n) exceeds " + std::to_string(kBruteForceLimit) + " candidates");
  auto orders = all_orders(keys);
  WorkloadEvaluator eval(workload, stats);
  std::vector<const std::vector<double>*> cols;
  for (const auto& o : orders) cols.push_back(&eval.rows_for({0, o}));

  BruteForceResult best;
  best.cost = INFINITY;
  std::vector<std::size_t> best_pick;
  const std::size_t nq = workload.size();
  for_each_multiset(orders.size(), n_replicas, [&](std::span<const std::size_t> pick) {
    ++best.enumerated;
    double sum = 0;
    for (std::size_t q = 0; q < nq; ++q) {
      double b = (*cols[pick[0]])[q];
      for (std::size_t r = 1; r < pick.size(); ++r) b = std::min(b, (*cols[pick[r]])[q]);
      sum += b;
    }
    double c = sum / static_cast<double>(nq);
    if (c < best.cost) {
      best.cost = c;
      best_pick.assign(pick.begin(), pick.end());
    }
  });
  for (std::size_t i = 0; i < best_pick.size(); ++i) best.layouts.push_back({i, orders[best_pick[i]]});
  return best;
}

}  // namespace hrep
