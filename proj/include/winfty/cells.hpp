#pragma once

#include <winfty/cost.hpp>

#include <bit>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

namespace winfty {

/// Subset of the target indices {0, ..., N-1} as a bitmask.
class TargetSet {
 public:
  constexpr TargetSet() = default;
  constexpr explicit TargetSet(std::uint32_t bits) : bits_(bits) {}

  static constexpr TargetSet full(std::size_t n) {
    return TargetSet(n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1);
  }
  static constexpr TargetSet single(std::size_t i) { return TargetSet(std::uint32_t{1} << i); }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool contains(std::size_t i) const { return (bits_ >> i) & 1U; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool subset_of(TargetSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr TargetSet with(std::size_t i) const { return TargetSet(bits_ | (std::uint32_t{1} << i)); }

  constexpr auto operator<=>(const TargetSet&) const = default;

  /// 1-based listing, e.g. "{y1,y3}".
  std::string str() const {
    std::string out = "{";
    for (std::size_t i = 0; i < 32; ++i)
      if (contains(i)) out += (out.size() > 1 ? ",y" : "y") + std::to_string(i + 1);
    return out + "}";
  }

 private:
  std::uint32_t bits_ = 0;
};

constexpr std::size_t kDefaultMaxTargets = 24;
constexpr std::size_t kHardMaxTargets = 30;

/// Largest admissible N. WINFTY_MAX_TARGETS overrides the default of 24.
inline std::size_t max_targets() {
  if (const char* env = std::getenv("WINFTY_MAX_TARGETS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return std::min<std::size_t>(v, kHardMaxTargets);
  }
  return kDefaultMaxTargets;
}

inline void check_target_count(std::size_t n) {
  if (n > max_targets())
    throw Error(std::to_string(n) + " targets exceed the limit of " + std::to_string(max_targets()) +
                " (set WINFTY_MAX_TARGETS to raise it)");
}

/// Targets within cost omega of x; ties c(x, y) == omega count as reachable.
inline TargetSet cell_of_point(std::span<const double> x, const TargetMeasure& targets, const CostSpec& cost,
                               double omega) {
  TargetSet label;
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (eval_cost(cost, x, targets.point(i)) <= omega) label = label.with(i);
  return label;
}

/// Partition of the source samples by reachable-target set at a threshold.
struct CellDecomposition {
  double omega = 0.0;
  std::size_t n_targets = 0;
  /// One entry per cell containing at least one sample; zero-mass atoms can
  /// make a present cell carry mass 0.
  std::map<TargetSet, Rational> masses;
  std::vector<TargetSet> labels;

  Rational mass_of(TargetSet a) const {
    auto it = masses.find(a);
    return it == masses.end() ? Rational(0) : it->second;
  }

  /// Cells of positive mass.
  std::vector<TargetSet> nonempty() const {
    std::vector<TargetSet> out;
    for (const auto& [a, m] : masses)
      if (m > 0) out.push_back(a);
    return out;
  }
};

inline CellDecomposition decompose(const SourceMeasure& source, const TargetMeasure& targets, const CostSpec& cost,
                                   double omega) {
  check_target_count(targets.size());
  CellDecomposition d;
  d.omega = omega;
  d.n_targets = targets.size();
  d.labels.resize(source.size());
  for (std::size_t k = 0; k < source.size(); ++k) d.labels[k] = cell_of_point(source.point(k), targets, cost, omega);

  // Exact sums in scaled integers, accumulated in sample order.
  std::map<TargetSet, BigInt> sums;
  for (std::size_t k = 0; k < source.size(); ++k) sums[d.labels[k]] += source.scaled()[k];
  for (auto& [a, s] : sums) d.masses.emplace(a, Rational(s, source.common_denominator()));
  return d;
}

inline CellDecomposition decompose(const Instance& inst, double omega) {
  return decompose(inst.source, inst.target, inst.cost, omega);
}

}  // namespace winfty
