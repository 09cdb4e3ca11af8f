#pragma once

#include <winfty/graph.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace winfty {

/// Is there a coupling whose cost never exceeds omega? Equivalent to the
/// omega-transport graph admitting a perfect matching.
inline bool decide(const Instance& inst, double omega) {
  return hall_feasible(build_graph(decompose(inst, omega), inst.target));
}

/// Coupling induced by a perfect matching: inside cell A a fraction
/// rows[A][i] of every sample's mass goes to target i.
struct TransportPlan {
  double omega = 0.0;
  CellDecomposition cells;
  std::map<TargetSet, std::vector<Rational>> rows;

  /// Fraction of sample k's mass sent to target i; zero on massless cells.
  Rational fraction(std::size_t sample, std::size_t i) const {
    auto it = rows.find(cells.labels[sample]);
    return it == rows.end() ? Rational(0) : it->second[i];
  }
};

inline TransportPlan plan_from_matching(const CellDecomposition& cells, const Matching& matching,
                                        const TargetMeasure& target) {
  const TransportGraph g = build_graph(cells, target);
  if (auto why = matching.perfect_violation(g)) throw Error("matching is not perfect: " + *why);
  TransportPlan plan;
  plan.omega = cells.omega;
  plan.cells = cells;
  for (const auto& [a, mass] : cells.masses) {
    if (mass == 0) continue;
    std::vector<Rational> row(cells.n_targets, Rational(0));
    for (std::size_t i = 0; i < cells.n_targets; ++i) row[i] = matching.at(a, i) / mass;
    plan.rows.emplace(a, std::move(row));
  }
  return plan;
}

/// M(A, i) = mass(A) * rows[A][i].
inline Matching matching_from_plan(const TransportPlan& plan, const CellDecomposition& cells) {
  Matching m;
  for (const auto& [a, row] : plan.rows) {
    if (row.size() != cells.n_targets) throw Error("plan row " + a.str() + " has the wrong length");
    Rational total = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] < 0) throw Error("plan row " + a.str() + " has a negative entry");
      if (row[i] > 0 && !a.contains(i))
        throw Error("plan sends cell " + a.str() + " to y" + std::to_string(i + 1) + ", whose cost exceeds omega");
      total += row[i];
    }
    if (total != 1) throw Error("plan row " + a.str() + " sums to " + to_string(total));
    const Rational mass = cells.mass_of(a);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] > 0) m.set(a, i, mass * row[i]);
  }
  return m;
}

/// Plan mass leaving sample k, i.e. the left marginal evaluated on {x_k}.
inline Rational plan_sample_marginal(const TransportPlan& plan, const SourceMeasure& source, std::size_t k) {
  Rational s = 0;
  for (std::size_t i = 0; i < plan.cells.n_targets; ++i) s += plan.fraction(k, i);
  return s * source.mass(k);
}

/// Plan mass arriving at the targets in b, i.e. the right marginal on b.
inline Rational plan_target_marginal(const TransportPlan& plan, TargetSet b) {
  Rational s = 0;
  for (const auto& [a, row] : plan.rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      if (b.contains(i)) s += plan.cells.mass_of(a) * row[i];
  return s;
}

/// Largest cost over the sample/target pairs that carry positive plan mass.
inline double plan_cost(const TransportPlan& plan, const Instance& inst) {
  double worst = 0.0;
  for (std::size_t k = 0; k < inst.source.size(); ++k) {
    if (inst.source.is_null(k)) continue;
    for (std::size_t i = 0; i < inst.target.size(); ++i)
      if (plan.fraction(k, i) > 0) worst = std::max(worst, inst.cost_of(k, i));
  }
  return worst;
}

enum class SolveMode { Bisect, Exact };

struct TraceStep {
  double omega;
  bool feasible;
};

struct SolveOptions {
  double tolerance = 1e-6;
  SolveMode mode = SolveMode::Bisect;
  std::optional<std::pair<double, double>> interval;
};

struct SolveReport {
  double lo = 0.0;
  double hi = 0.0;
  double omega = 0.0;  ///< accepted feasible threshold, equal to hi
  std::vector<TraceStep> trace;
  Matching matching;
  TransportPlan plan;

  std::size_t iterations() const { return trace.size(); }
};

namespace detail {
inline void finish(const Instance& inst, SolveReport& report) {
  report.omega = report.hi;
  const CellDecomposition cells = decompose(inst, report.hi);
  FlowMatching flow = max_flow_matching(build_graph(cells, inst.target));
  if (!flow.perfect) throw Error("internal error: no perfect matching at an omega the Hall check accepted");
  report.matching = std::move(flow.matching);
  report.plan = plan_from_matching(cells, report.matching, inst.target);
}
}  // namespace detail

/// Interval halving on decide(). Starts from [min c, max c] unless an
/// interval is given, and stops once hi - lo <= tolerance, which takes
/// ceil(log2((hi0 - lo0) / tolerance)) steps.
inline SolveReport bisect(const Instance& inst, double tolerance,
                          std::optional<std::pair<double, double>> interval = std::nullopt) {
  if (!(tolerance > 0)) throw Error("tolerance must be positive");
  SolveReport report;
  if (interval) {
    std::tie(report.lo, report.hi) = *interval;
    if (!(report.lo <= report.hi)) throw Error("initial interval is empty");
    if (!decide(inst, report.hi))
      throw Error("no plan exists below upper bound " + std::to_string(report.hi));
  } else {
    std::tie(report.lo, report.hi) = cost_bounds(inst);
  }
  while (report.hi - report.lo > tolerance) {
    const double mid = report.lo + (report.hi - report.lo) / 2;
    const bool ok = decide(inst, mid);
    report.trace.push_back({mid, ok});
    (ok ? report.hi : report.lo) = mid;
  }
  detail::finish(inst, report);
  return report;
}

/// Sorted distinct values of c over all sample/target pairs. decide() can
/// only change value at these points.
inline std::vector<double> realized_costs(const Instance& inst) {
  std::vector<double> costs;
  costs.reserve(inst.source.size() * inst.target.size());
  for (std::size_t k = 0; k < inst.source.size(); ++k)
    for (std::size_t i = 0; i < inst.target.size(); ++i) costs.push_back(inst.cost_of(k, i));
  std::sort(costs.begin(), costs.end());
  costs.erase(std::unique(costs.begin(), costs.end()), costs.end());
  return costs;
}

namespace detail {
/// Index of the first feasible realized cost, recording each probe.
inline std::size_t threshold_index(const Instance& inst, const std::vector<double>& costs,
                                   std::vector<TraceStep>* trace) {
  std::size_t lo = 0, hi = costs.size() - 1;  // costs[hi] (max c) is always feasible
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const bool ok = decide(inst, costs[mid]);
    if (trace) trace->push_back({costs[mid], ok});
    if (ok)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}
}  // namespace detail

/// Exact optimum of the sampled problem: the smallest realized cost at which
/// decide() holds.
inline double exact_threshold(const Instance& inst) {
  const auto costs = realized_costs(inst);
  return costs[detail::threshold_index(inst, costs, nullptr)];
}

/// Exact threshold search packaged as a report; lo is the largest realized
/// cost below the optimum (or the optimum itself when it is min c).
inline SolveReport solve_exact(const Instance& inst) {
  SolveReport report;
  const auto costs = realized_costs(inst);
  const std::size_t idx = detail::threshold_index(inst, costs, &report.trace);
  report.hi = costs[idx];
  report.lo = idx > 0 ? costs[idx - 1] : costs[idx];
  detail::finish(inst, report);
  return report;
}

inline SolveReport solve(const Instance& inst, const SolveOptions& options) {
  if (options.mode == SolveMode::Exact) return solve_exact(inst);
  return bisect(inst, options.tolerance, options.interval);
}

enum class MapMode { Integral, Fractional };

/// Pointwise assignment of samples to targets. In fractional mode samples on
/// a cut between two targets are split exactly and recorded in `splits`.
struct TransportMap {
  MapMode mode = MapMode::Fractional;
  std::vector<long> target;  ///< per sample; -1 for a massless sample with no reachable target
  std::map<std::size_t, std::vector<std::pair<std::size_t, Rational>>> splits;
  std::vector<Rational> pushforward;
  std::vector<Rational> marginal_error;  ///< pushforward - matched column mass
  std::optional<std::string> warning;
};

/// Cuts every cell, samples taken in index order (row-major for grids), into
/// consecutive runs of mass M(A, i) for the targets i of A in increasing
/// order. Integral mode rounds each cut sample to one of its pieces, picking
/// the target currently most under-served.
inline TransportMap map_from_matching(const CellDecomposition& cells, const Matching& matching,
                                      const SourceMeasure& source, MapMode mode = MapMode::Fractional) {
  if (!matching.valid()) throw Error("matching uses a non-edge");
  if (cells.labels.size() != source.size()) throw Error("decomposition does not match the source");
  const std::size_t n = cells.n_targets;
  for (const auto& [a, mass] : cells.masses)
    if (matching.row_sum(a) != mass) throw Error("matching is not perfect on cell " + a.str());

  std::map<TargetSet, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < source.size(); ++k) members[cells.labels[k]].push_back(k);

  TransportMap out;
  out.mode = mode;
  if (mode == MapMode::Integral && !source.is_grid()) {
    for (const auto& [a, ks] : members)
      for (std::size_t k : ks)
        for (std::size_t i = 0; i < n; ++i) {
          const Rational q = matching.at(a, i);
          if (q > 0 && source.mass(k) > q && !out.warning) {
            out.warning = "atom " + std::to_string(k) + " outweighs M(" + a.str() + ", y" + std::to_string(i + 1) +
                          "); exact maps need an atomless source, falling back to fractional mode";
            out.mode = MapMode::Fractional;
          }
        }
  }

  out.target.assign(source.size(), -1);
  out.pushforward.assign(n, Rational(0));
  std::vector<Rational> deficit(n, Rational(0));  // fractional minus integral mass so far

  for (const auto& [a, ks] : members) {
    std::vector<std::pair<std::size_t, Rational>> quota;
    for (std::size_t i = 0; i < n; ++i)
      if (Rational q = matching.at(a, i); q > 0) quota.push_back({i, std::move(q)});
    std::size_t j = 0;
    for (std::size_t k : ks) {
      if (source.is_null(k)) {
        if (!quota.empty()) out.target[k] = static_cast<long>(quota[std::min(j, quota.size() - 1)].first);
        else if (!a.empty()) out.target[k] = std::countr_zero(a.bits());
        continue;
      }
      std::vector<std::pair<std::size_t, Rational>> pieces;
      Rational rest = source.mass(k);
      while (rest > 0) {
        if (j >= quota.size()) throw Error("internal error: cell " + a.str() + " ran out of quota");
        const Rational take = std::min(rest, quota[j].second);
        pieces.push_back({quota[j].first, take});
        rest -= take;
        quota[j].second -= take;
        if (quota[j].second == 0) ++j;
      }
      if (pieces.size() == 1 || out.mode == MapMode::Fractional) {
        std::size_t best = 0;
        for (std::size_t p = 1; p < pieces.size(); ++p)
          if (pieces[p].second > pieces[best].second) best = p;
        out.target[k] = static_cast<long>(pieces[best].first);
        for (const auto& [i, m] : pieces) out.pushforward[i] += m;
        if (pieces.size() > 1) out.splits.emplace(k, std::move(pieces));
        continue;
      }
      std::size_t best = 0;
      Rational best_score;
      for (std::size_t p = 0; p < pieces.size(); ++p) {
        const Rational score = deficit[pieces[p].first] + pieces[p].second;
        if (p == 0 || score > best_score) best = p, best_score = score;
      }
      for (const auto& [i, m] : pieces) deficit[i] += m;
      const std::size_t chosen = pieces[best].first;
      deficit[chosen] -= source.mass(k);
      out.target[k] = static_cast<long>(chosen);
      out.pushforward[chosen] += source.mass(k);
    }
  }
  out.marginal_error.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.marginal_error[i] = out.pushforward[i] - matching.column_sum(i);
  return out;
}

}  // namespace winfty
