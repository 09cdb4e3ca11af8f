#pragma once

#include <winfty/solver.hpp>

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace winfty {

/// Rounding slack used when re-checking gadget inequalities in floating point.
constexpr double kGadgetSlack = 1e-12;

namespace detail {
inline void check_gadget_args(std::size_t n, double p, double q) {
  if (n < 2) throw Error("gadget needs N >= 2");
  if (!(p > 1.0)) throw Error("gadget needs p > 1");
  if (!(q > 0.0) || std::isinf(q)) throw Error("gadget needs finite q > 0");
}
}  // namespace detail

/// Coordinate of the gadget points: the minimizer of
/// g(t) = (1 - t)^p + (N - 1) t^p over [0, 1].
inline double gadget_alpha(std::size_t n, double p) {
  if (std::isinf(p)) return 0.5;
  return 1.0 / (1.0 + std::pow(static_cast<double>(n - 1), 1.0 / (p - 1.0)));
}

/// Width of the forbidden interval (1 - eps, 1) for c = ||.||_p^q with
/// targets at the unit basis vectors of R^N.
inline double epsilon(std::size_t n, double p, double q) {
  detail::check_gadget_args(n, p, q);
  const double a = gadget_alpha(n, p);
  if (std::isinf(p)) return 1.0 - std::pow(std::max(1.0 - a, a), q);
  const double g = std::pow(1.0 - a, p) + static_cast<double>(n - 1) * std::pow(a, p);
  return 1.0 - std::pow(g, q / p);
}

/// Unit basis vectors e_1, ..., e_N.
inline std::vector<Point> basis_targets(std::size_t n) {
  std::vector<Point> out(n, Point(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = 1.0;
  return out;
}

/// Point x_A with coordinate alpha on the support of A and 0 elsewhere, for
/// every A; indexed by bitmask. Throws if either separating inequality fails
/// beyond rounding slack:
///   k in A      =>  c(x_A, e_k) <= 1 - eps
///   k not in A  =>  c(x_A, e_k) >= 1
inline std::vector<Point> gadget_points(std::size_t n, double p, double q) {
  detail::check_gadget_args(n, p, q);
  check_target_count(n);
  const double a = gadget_alpha(n, p);
  const double eps = epsilon(n, p, q);
  const CostSpec cost(p, q);
  const auto targets = basis_targets(n);
  std::vector<Point> points(std::size_t{1} << n, Point(n, 0.0));
  for (std::size_t s = 0; s < points.size(); ++s) {
    const TargetSet set(static_cast<std::uint32_t>(s));
    for (std::size_t i = 0; i < n; ++i)
      if (set.contains(i)) points[s][i] = a;
    for (std::size_t k = 0; k < n; ++k) {
      const double c = eval_cost(cost, points[s], targets[k]);
      if (set.contains(k) ? c > 1.0 - eps + kGadgetSlack : c < 1.0 - kGadgetSlack)
        throw Error("gadget point " + set.str() + " violates the separation inequality for y" +
                    std::to_string(k + 1) + " (cost " + std::to_string(c) + ")");
    }
  }
  return points;
}

/// `count` thresholds evenly spaced strictly inside (lo, hi).
inline std::vector<double> interior_probes(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  for (std::size_t j = 1; j <= count; ++j)
    out.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count + 1));
  return out;
}

/// Atomic instance with mass w(A) at points[A] and nu = right weights at the
/// target points. Every weighted point must land in cell A at each probe.
inline Instance graph_to_instance(const TransportGraph& graph, const std::map<TargetSet, Point>& points,
                                  const std::vector<Point>& target_points, const CostSpec& cost,
                                  std::span<const double> probes) {
  graph.validate();
  if (target_points.size() != graph.n_targets) throw Error("graph_to_instance: wrong number of target points");
  TargetMeasure target(target_points, graph.right);
  std::vector<Point> atoms;
  std::vector<Rational> weights;
  for (const auto& [a, w] : graph.left) {
    if (w == 0) continue;
    auto it = points.find(a);
    if (it == points.end()) throw Error("graph_to_instance: no point supplied for cell " + a.str());
    for (double omega : probes) {
      const TargetSet got = cell_of_point(it->second, target, cost, omega);
      if (got != a)
        throw Error("graph_to_instance: point for " + a.str() + " lies in cell " + got.str() + " at omega = " +
                    std::to_string(omega));
    }
    atoms.push_back(it->second);
    weights.push_back(w);
  }
  return Instance(make_atomic(std::move(atoms), std::move(weights)), std::move(target), cost);
}

/// A transport graph realized as a p-norm instance whose optimum avoids
/// the open interval (lambda_lo, lambda_hi).
struct GadgetInstance {
  Instance instance;
  double lambda_lo;
  double lambda_hi;
  TransportGraph graph;
};

inline GadgetInstance make_gadget(const TransportGraph& graph, double p, double q, std::size_t n_probes = 3) {
  const std::size_t n = graph.n_targets;
  const auto pts = gadget_points(n, p, q);
  std::map<TargetSet, Point> chosen;
  for (const auto& [a, w] : graph.left)
    if (w > 0) chosen.emplace(a, pts[a.bits()]);
  const double eps = epsilon(n, p, q);
  const auto probes = interior_probes(1.0 - eps, 1.0, n_probes);
  return {graph_to_instance(graph, chosen, basis_targets(n), CostSpec(p, q), probes), 1.0 - eps, 1.0, graph};
}

struct DichotomyReport {
  bool hall_feasible = false;
  double optimum = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 1.0;
  /// True when the optimum was found at or below lambda_lo.
  bool below_gap() const { return optimum <= lambda_lo + kGadgetSlack; }
};

/// Solves the gadget instance of `graph` exactly and checks that the optimum
/// sits on the side of the gap predicted by the matching question.
inline DichotomyReport verify_dichotomy(const TransportGraph& graph, double p, double q, std::size_t n_probes = 3) {
  const GadgetInstance gadget = make_gadget(graph, p, q, n_probes);
  DichotomyReport r;
  r.hall_feasible = hall_feasible(graph);
  r.optimum = exact_threshold(gadget.instance);
  r.lambda_lo = gadget.lambda_lo;
  r.lambda_hi = gadget.lambda_hi;
  const bool below = r.optimum <= r.lambda_lo + kGadgetSlack;
  const bool above = r.optimum >= r.lambda_hi - kGadgetSlack;
  if (!below && !above)
    throw Error("gadget optimum " + std::to_string(r.optimum) + " lies strictly inside (" +
                std::to_string(r.lambda_lo) + ", " + std::to_string(r.lambda_hi) + ")");
  if (below != r.hall_feasible)
    throw Error(std::string("gadget optimum is on the wrong side of the gap for a ") +
                (r.hall_feasible ? "feasible" : "infeasible") + " graph");
  return r;
}

}  // namespace winfty
