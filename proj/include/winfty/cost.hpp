#pragma once

#include <winfty/measures.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>

namespace winfty {

/// c(x, y) = ||x - y||_p^q, with p = infinity allowed.
struct CostSpec {
  double p = std::numeric_limits<double>::infinity();
  double q = 1.0;

  CostSpec() = default;
  CostSpec(double p_, double q_) : p(p_), q(q_) {
    if (!(p > 1.0)) throw Error("cost exponent p must exceed 1 (or be inf), got " + std::to_string(p));
    if (!(q > 0.0) || std::isinf(q)) throw Error("cost power q must be positive and finite, got " + std::to_string(q));
  }

  static CostSpec linf() { return {std::numeric_limits<double>::infinity(), 1.0}; }
  bool is_inf_norm() const { return std::isinf(p); }
  friend bool operator==(const CostSpec&, const CostSpec&) = default;
};

inline double eval_cost(const CostSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error("cost: dimension mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  double norm = 0.0;
  if (spec.is_inf_norm()) {
    for (std::size_t i = 0; i < x.size(); ++i) norm = std::max(norm, std::abs(x[i] - y[i]));
    return spec.q == 1.0 ? norm : std::pow(norm, spec.q);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    sum += spec.p == 2.0 ? d * d : std::pow(d, spec.p);
  }
  const double power = spec.q / spec.p;
  if (power == 1.0) return sum;
  if (power == 0.5) return std::sqrt(sum);
  return std::pow(sum, power);
}

/// The triple (source, target, cost) defining a transport problem.
struct Instance {
  SourceMeasure source;
  TargetMeasure target;
  CostSpec cost;

  Instance(SourceMeasure s, TargetMeasure t, CostSpec c)
      : source(std::move(s)), target(std::move(t)), cost(c) {
    if (source.dimension() != target.dimension())
      throw Error("source points are " + std::to_string(source.dimension()) + "-dimensional, targets " +
                  std::to_string(target.dimension()) + "-dimensional");
  }

  double cost_of(std::size_t sample, std::size_t target_index) const {
    return eval_cost(cost, source.point(sample), target.point(target_index));
  }
};

/// (min, max) of the cost over every (sample, target) pair.
inline std::pair<double, double> cost_bounds(const Instance& inst) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < inst.source.size(); ++k)
    for (std::size_t i = 0; i < inst.target.size(); ++i) {
      const double c = inst.cost_of(k, i);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  return {lo, hi};
}

}  // namespace winfty
