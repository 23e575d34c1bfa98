#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/query.hpp"
#include "hrep/schema.hpp"
#include "hrep/stats.hpp"

namespace hrep {

/// Expected number of rows a replica reads from disk to answer a query.
struct RowEstimate {
  double rows = 0.0;
};

/// Walks the layout: every leading equality filter multiplies by its mass,
/// the first non-equality filter multiplies by its range mass and stops.
///
/// The running product is kept as `rows * count / N` so integer-valued
/// estimates (grids, exact tables) come out exactly.
inline RowEstimate estimate_rows(const ColumnStats& stats, const ReplicaLayout& layout, const Query& query) {
  const double n = static_cast<double>(stats.total_rows());
  double rows = n;
  for (const auto& key : layout.order) {
    const auto* dist = stats.find(key);
    if (!dist) throw Error(ErrorCode::StatsMissing, "no statistics for '" + key + "'", key);
    const auto* f = query.filter_for(key);
    if (!f) throw Error(ErrorCode::InvalidArgument, "query is not normalized", key);
    switch (f->kind) {
      case FilterKind::Equality: rows = rows * static_cast<double>(dist->count_of(f->lo)) / n; break;
      case FilterKind::Range: return {rows * static_cast<double>(dist->count_in(f->lo, f->hi)) / n};
      case FilterKind::Global: return {rows};
    }
  }
  return {rows};
}

struct LinearFit {
  double slope = 0.0;      // seconds per row
  double intercept = 0.0;  // seconds
  double r2 = 0.0;
  double residual_variance = 0.0;
  std::size_t samples = 0;

  double operator()(double rows) const { return slope * rows + intercept; }
};

struct CalibrationSample {
  double rows_scanned = 0.0;
  double latency = 0.0;  // seconds
  std::size_t key_count = 0;
};

/// Calibrated latency function: one affine fit per clustering-key count.
class LatencyModel {
 public:
  LatencyModel() = default;
  explicit LatencyModel(std::map<std::size_t, LinearFit> fits) : fits_(std::move(fits)) {
    for (const auto& [c, fit] : fits_)
      if (!(fit.slope > 0.0))
        throw Error(ErrorCode::InvalidModel, "slope for " + std::to_string(c) + " keys is not positive");
  }

  bool has(std::size_t key_count) const { return fits_.contains(key_count); }

  const LinearFit& fit(std::size_t key_count) const {
    auto it = fits_.find(key_count);
    if (it == fits_.end())
      throw Error(ErrorCode::ModelMissing, "no latency model for " + std::to_string(key_count) + " keys");
    return it->second;
  }

  const std::map<std::size_t, LinearFit>& fits() const { return fits_; }

  double seconds(std::size_t key_count, double rows) const { return fit(key_count)(rows); }

 private:
  std::map<std::size_t, LinearFit> fits_;
};

/// Ordinary least squares of latency on rows.
inline LinearFit fit_line(std::span<const CalibrationSample> samples) {
  const double n = static_cast<double>(samples.size());
  double mx = 0, my = 0;
  for (const auto& s : samples) {
    mx += s.rows_scanned;
    my += s.latency;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& s : samples) {
    double dx = s.rows_scanned - mx, dy = s.latency - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(ErrorCode::InsufficientSamples, "samples do not vary in rows");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (const auto& s : samples) {
    double e = s.latency - fit(s.rows_scanned);
    sse += e * e;
  }
  fit.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  fit.residual_variance = samples.size() > 2 ? sse / (n - 2) : 0.0;
  fit.samples = samples.size();
  return fit;
}

inline constexpr std::size_t kMinCalibrationSamples = 10;

/// Fits one line per key count. Each key count needs at least ten samples whose
/// positive row counts span two decades.
inline LatencyModel calibrate(std::span<const CalibrationSample> samples) {
  std::map<std::size_t, std::vector<CalibrationSample>> groups;
  for (const auto& s : samples) groups[s.key_count].push_back(s);
  if (groups.empty()) throw Error(ErrorCode::InsufficientSamples, "no calibration samples");
  std::map<std::size_t, LinearFit> fits;
  for (const auto& [keys, group] : groups) {
    if (group.size() < kMinCalibrationSamples)
      throw Error(ErrorCode::InsufficientSamples,
                  std::to_string(group.size()) + " samples for " + std::to_string(keys) + " keys");
    double lo = INFINITY, hi = 0;
    for (const auto& s : group) {
      if (s.rows_scanned > 0) lo = std::min(lo, s.rows_scanned);
      hi = std::max(hi, s.rows_scanned);
    }
    if (!(hi >= 100.0 * lo))
      throw Error(ErrorCode::InsufficientSamples,
                  "samples for " + std::to_string(keys) + " keys span less than two decades");
    fits[keys] = fit_line(group);
  }
  return LatencyModel(std::move(fits));
}

inline double cost(const LatencyModel& model, const ColumnStats& stats, const ReplicaLayout& layout,
                   const Query& query) {
  const auto& fit = model.fit(layout.order.size());
  return fit(estimate_rows(stats, layout, query).rows);
}

struct ReplicaChoice {
  double value = 0.0;  // seconds, or rows for the estimate-only variant
  std::size_t index = 0;
};

namespace detail {
template <typename CostOf>
ReplicaChoice argmin_replica(std::span<const ReplicaLayout> replicas, CostOf&& cost_of) {
  if (replicas.empty()) throw Error(ErrorCode::InvalidArgument, "no replicas");
  ReplicaChoice best{cost_of(replicas[0]), 0};
  for (std::size_t i = 1; i < replicas.size(); ++i) {
    double c = cost_of(replicas[i]);
    if (c < best.value || (c == best.value && replicas[i].replica_id < replicas[best.index].replica_id))
      best = {c, i};
  }
  return best;
}
}  // namespace detail

/// Cheapest replica under the calibrated latency model; ties go to the lowest replica id.
inline ReplicaChoice cost_min(const LatencyModel& model, const ColumnStats& stats,
                              std::span<const ReplicaLayout> replicas, const Query& query) {
  return detail::argmin_replica(replicas, [&](const ReplicaLayout& r) { return cost(model, stats, r, query); });
}

/// Cheapest replica by estimated rows. Same argmin as cost_min for any
/// strictly increasing latency function.
inline ReplicaChoice rows_min(const ColumnStats& stats, std::span<const ReplicaLayout> replicas, const Query& query) {
  return detail::argmin_replica(replicas,
                                [&](const ReplicaLayout& r) { return estimate_rows(stats, r, query).rows; });
}

/// Mean over the workload of each query's cheapest-replica latency.
inline double workload_cost(const LatencyModel& model, const ColumnStats& stats,
                            std::span<const ReplicaLayout> replicas, std::span<const Query> workload) {
  if (workload.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no queries");
  double sum = 0;
  for (const auto& q : workload) sum += cost_min(model, stats, replicas, q).value;
  return sum / static_cast<double>(workload.size());
}

/// workload_cost measured in estimated rows instead of seconds.
inline double workload_rows(const ColumnStats& stats, std::span<const ReplicaLayout> replicas,
                            std::span<const Query> workload) {
  if (workload.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no queries");
  double sum = 0;
  for (const auto& q : workload) sum += rows_min(stats, replicas, q).value;
  return sum / static_cast<double>(workload.size());
}

/// Relative gain of heterogeneous over traditional replicas: (tr - hr) / hr.
inline double improvement(double cost_tr, double cost_hr) {
  if (!(cost_hr > 0.0)) throw Error(ErrorCode::DivisionByZero, "heterogeneous cost must be positive");
  return (cost_tr - cost_hr) / cost_hr;
}

}  // namespace hrep
