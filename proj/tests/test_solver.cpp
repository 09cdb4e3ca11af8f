#include <winfty/solver.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace winfty;

namespace {

const Box kSquare{{0.0, 0.0}, {4.0, 4.0}};

Instance example1(std::size_t res) {
  const Rational q(1, 4);
  return Instance(make_uniform_grid(kSquare, res, res), TargetMeasure({{0, 0}, {0, 4}, {4, 0}, {2, 2}}, {q, q, q, q}),
                  CostSpec::linf());
}

Instance example2(std::size_t res) {
  return Instance(make_uniform_grid(kSquare, res, res),
                  TargetMeasure({{0, 0}, {0, 4}, {4, 0}, {2, 2}},
                                {Rational(1, 10), Rational(1, 5), Rational(2, 5), Rational(3, 10)}),
                  CostSpec::linf());
}

Instance point_to_point() {
  return Instance(make_atomic({{0, 0}}, {Rational(1)}), TargetMeasure({{1, 0}}, {Rational(1)}), CostSpec::linf());
}

/// Random atomic instance on a small integer lattice so that cost ties occur.
Instance random_atomic(std::mt19937_64& rng, std::size_t max_atoms, std::size_t max_targets) {
  std::uniform_int_distribution<int> coord(0, 4);
  std::uniform_int_distribution<std::size_t> atoms(1, max_atoms), targets(1, max_targets);
  const double ps[] = {1.5, 2.0, 3.0, std::numeric_limits<double>::infinity()};
  const double qs[] = {0.5, 1.0, 2.0};
  const std::size_t m = atoms(rng), n = targets(rng);
  std::vector<Point> xs, ys;
  for (std::size_t k = 0; k < m; ++k) xs.push_back({double(coord(rng)), double(coord(rng))});
  while (ys.size() < n) {
    Point y{double(coord(rng)), double(coord(rng))};
    if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
  }
  return Instance(make_atomic(xs, oracle::random_simplex(rng, m, 9, true)), TargetMeasure(ys, oracle::random_simplex(rng, n)),
                  CostSpec(ps[rng() % 4], qs[rng() % 3]));
}

}  // namespace

TEST(Decide, Examples) {
  EXPECT_FALSE(decide(point_to_point(), 0.5));
  EXPECT_TRUE(decide(point_to_point(), 1.0));
  const auto e1 = example1(256);
  EXPECT_TRUE(decide(e1, cost_bounds(e1).second));
  EXPECT_FALSE(decide(e1, 1.9));
  EXPECT_TRUE(decide(e1, 2.1));
}

TEST(Decide, AgreesWithFlowAndIsMonotone) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 60; ++t) {
    const auto inst = random_atomic(rng, 8, 4);
    bool prev = false;
    for (double w : realized_costs(inst)) {
      const bool ok = decide(inst, w);
      EXPECT_EQ(ok, max_flow_matching(build_graph(decompose(inst, w), inst.target)).perfect);
      EXPECT_TRUE(!prev || ok);
      prev = ok;
    }
    EXPECT_TRUE(prev);
  }
}

TEST(ExactThreshold, Examples) {
  EXPECT_EQ(exact_threshold(point_to_point()), 1.0);
  const Instance cross(make_atomic({{0, 0}, {4, 4}}, {Rational(1, 2), Rational(1, 2)}),
                       TargetMeasure({{0, 4}, {4, 0}}, {Rational(1, 2), Rational(1, 2)}), CostSpec::linf());
  EXPECT_EQ(exact_threshold(cross), 4.0);
}

TEST(ExactThreshold, Example1SmallGridMatchesBruteForce) {
  const auto inst = example1(4);
  const double w = exact_threshold(inst);
  EXPECT_EQ(w, oracle::brute_force_optimum(inst));
  EXPECT_EQ(w, 1.5);  // the four pixels nearest y1 lie within 1.5 of it
}

TEST(ExactThreshold, MatchesBruteForceOnRandomAtomic) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 150; ++t) {
    const auto inst = random_atomic(rng, 6, 4);
    const double w = exact_threshold(inst);
    EXPECT_EQ(w, oracle::brute_force_optimum(inst));
    const auto costs = realized_costs(inst);
    const auto it = std::find(costs.begin(), costs.end(), w);
    ASSERT_NE(it, costs.end());
    if (it != costs.begin()) { EXPECT_FALSE(decide(inst, *(it - 1))); }
  }
}

TEST(Bisect, DegenerateIntervalTakesNoSteps) {
  const Instance inst(make_uniform_grid(kSquare, 1, 1), TargetMeasure({{2, 3}}, {Rational(1)}), CostSpec::linf());
  const auto r = bisect(inst, 1e-6);
  EXPECT_EQ(r.iterations(), 0u);
  EXPECT_EQ(r.omega, 1.0);
}

TEST(Bisect, Example1) {
  const auto inst = example1(256);
  const auto r = bisect(inst, 1e-6, std::pair{0.0, 4.0});
  EXPECT_EQ(r.iterations(), 22u);
  EXPECT_EQ(r.iterations(), static_cast<std::size_t>(std::ceil(std::log2(4.0 / 1e-6))));
  EXPECT_NEAR(r.omega, 2.0, 4.0 / 256 + 1e-6);
  const double exact = exact_threshold(inst);
  EXPECT_LE(exact, r.hi);
  EXPECT_LE(r.hi - exact, 1e-6);
  EXPECT_TRUE(r.matching.is_perfect(build_graph(r.plan.cells, inst.target)));
  for (const auto& step : r.trace) EXPECT_EQ(step.feasible, decide(inst, step.omega));
}

TEST(Bisect, Example2) {
  const auto inst = example2(256);
  const auto r = bisect(inst, 1e-6);
  EXPECT_NEAR(r.omega, std::sqrt(6.4), 4.0 / 256 + 1e-6);
  const double exact = exact_threshold(inst);
  EXPECT_LE(exact, r.hi);
  EXPECT_LE(r.hi - exact, 1e-6);
  EXPECT_FALSE(decide(inst, r.lo));
}

TEST(Bisect, RejectsInfeasibleUpperBound) {
  EXPECT_THROW(bisect(point_to_point(), 1e-3, std::pair{0.0, 0.5}), Error);
  EXPECT_THROW(bisect(point_to_point(), 0.0), Error);
}

TEST(SolveExact, ReportsAdjacentRealizedCosts) {
  const auto inst = example1(32);
  const auto r = solve(inst, {1e-6, SolveMode::Exact, std::nullopt});
  EXPECT_EQ(r.omega, exact_threshold(inst));
  EXPECT_LT(r.lo, r.hi);
  EXPECT_FALSE(decide(inst, r.lo));
  EXPECT_EQ(r.iterations(), r.trace.size());
}

TEST(PlanConversion, SingleCell) {
  const Instance inst(make_uniform_grid(kSquare, 2, 2),
                      TargetMeasure({{0, 0}, {4, 4}}, {Rational(1, 3), Rational(2, 3)}), CostSpec::linf());
  const auto cells = decompose(inst, 10.0);
  Matching m;
  m.set(TargetSet::full(2), 0, Rational(1, 3));
  m.set(TargetSet::full(2), 1, Rational(2, 3));
  const auto plan = plan_from_matching(cells, m, inst.target);
  EXPECT_EQ(plan.rows.at(TargetSet::full(2)), (std::vector<Rational>{Rational(1, 3), Rational(2, 3)}));
  EXPECT_EQ(matching_from_plan(plan, cells), m);
}

TEST(PlanConversion, TwoTargetFeasibleExample) {
  // Cell {y1} holds 1/4 of the mass and cell {y1,y2} the rest.
  const Instance inst(make_atomic({{0, 0}, {2, 0}}, {Rational(1, 4), Rational(3, 4)}),
                      TargetMeasure({{0, 0}, {3, 0}}, {Rational(1, 4), Rational(3, 4)}), CostSpec::linf());
  const auto cells = decompose(inst, 2.0);
  const auto flow = max_flow_matching(build_graph(cells, inst.target));
  ASSERT_TRUE(flow.perfect);
  const auto plan = plan_from_matching(cells, flow.matching, inst.target);
  EXPECT_EQ(plan.rows.at(TargetSet::single(0)), (std::vector<Rational>{1, 0}));
  EXPECT_EQ(plan.rows.at(TargetSet::full(2)), (std::vector<Rational>{0, 1}));
  EXPECT_EQ(matching_from_plan(plan, cells), flow.matching);
}

TEST(PlanConversion, RejectsRowOutsideMask) {
  const Instance inst(make_atomic({{0, 0}, {2, 0}}, {Rational(1, 4), Rational(3, 4)}),
                      TargetMeasure({{0, 0}, {3, 0}}, {Rational(1, 4), Rational(3, 4)}), CostSpec::linf());
  const auto cells = decompose(inst, 2.0);
  TransportPlan plan;
  plan.omega = 2.0;
  plan.cells = cells;
  plan.rows[TargetSet::single(0)] = {Rational(1, 2), Rational(1, 2)};
  plan.rows[TargetSet::full(2)] = {0, 1};
  EXPECT_THROW(matching_from_plan(plan, cells), Error);
}

TEST(PlanConversion, RejectsImperfectMatching) {
  const Instance inst(make_atomic({{0, 0}, {2, 0}}, {Rational(1, 4), Rational(3, 4)}),
                      TargetMeasure({{0, 0}, {3, 0}}, {Rational(1, 4), Rational(3, 4)}), CostSpec::linf());
  const auto cells = decompose(inst, 2.0);
  Matching m;
  m.set(TargetSet::single(0), 0, Rational(1, 4));
  m.set(TargetSet::full(2), 1, Rational(1, 2));
  EXPECT_THROW(plan_from_matching(cells, m, inst.target), Error);
}

TEST(PlanConversion, RoundTripAndMarginalsOnRandomInstances) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 80; ++t) {
    const auto inst = random_atomic(rng, 50, 5);
    const auto r = solve(inst, {1e-6, SolveMode::Exact, std::nullopt});
    const auto& plan = r.plan;
    EXPECT_EQ(matching_from_plan(plan, plan.cells), r.matching);
    for (std::size_t k = 0; k < inst.source.size(); ++k)
      EXPECT_EQ(plan_sample_marginal(plan, inst.source, k), inst.source.mass(k));
    for (std::uint32_t b = 0; b < (1U << inst.target.size()); ++b) {
      Rational nu = 0;
      for (std::size_t i = 0; i < inst.target.size(); ++i)
        if ((b >> i) & 1U) nu += inst.target.weight(i);
      EXPECT_EQ(plan_target_marginal(plan, TargetSet(b)), nu);
    }
    for (const auto& [a, row] : plan.rows)
      for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] > 0) { EXPECT_TRUE(a.contains(i)); }
    EXPECT_LE(plan_cost(plan, inst), r.omega);
  }
}

TEST(Map, FourPixelsEvenSplit) {
  const Instance inst(make_uniform_grid(Box{{0, 0}, {4, 1}}, 4, 1),
                      TargetMeasure({{0, 0}, {4, 0}}, {Rational(1, 2), Rational(1, 2)}), CostSpec::linf());
  const auto cells = decompose(inst, 10.0);
  Matching m;
  m.set(TargetSet::full(2), 0, Rational(1, 2));
  m.set(TargetSet::full(2), 1, Rational(1, 2));
  for (auto mode : {MapMode::Fractional, MapMode::Integral}) {
    const auto map = map_from_matching(cells, m, inst.source, mode);
    EXPECT_EQ(map.target, (std::vector<long>{0, 0, 1, 1}));
    EXPECT_TRUE(map.splits.empty());
    EXPECT_EQ(map.marginal_error, (std::vector<Rational>{0, 0}));
  }
}

TEST(Map, ThreePixelsIntegralVersusFractional) {
  const Instance inst(make_uniform_grid(Box{{0, 0}, {3, 1}}, 3, 1),
                      TargetMeasure({{0, 0}, {3, 0}}, {Rational(1, 2), Rational(1, 2)}), CostSpec::linf());
  const auto cells = decompose(inst, 10.0);
  Matching m;
  m.set(TargetSet::full(2), 0, Rational(1, 2));
  m.set(TargetSet::full(2), 1, Rational(1, 2));

  const auto integral = map_from_matching(cells, m, inst.source, MapMode::Integral);
  EXPECT_EQ(integral.target, (std::vector<long>{0, 0, 1}));
  EXPECT_EQ(integral.pushforward, (std::vector<Rational>{Rational(2, 3), Rational(1, 3)}));
  EXPECT_EQ(integral.marginal_error, (std::vector<Rational>{Rational(1, 6), Rational(-1, 6)}));

  const auto frac = map_from_matching(cells, m, inst.source, MapMode::Fractional);
  ASSERT_EQ(frac.splits.size(), 1u);
  const auto& pieces = frac.splits.at(1);
  ASSERT_EQ(pieces.size(), 2u);
  EXPECT_EQ(pieces[0], (std::pair<std::size_t, Rational>{0, Rational(1, 6)}));
  EXPECT_EQ(pieces[1], (std::pair<std::size_t, Rational>{1, Rational(1, 6)}));
  EXPECT_EQ(frac.marginal_error, (std::vector<Rational>{0, 0}));
}

TEST(Map, AssignmentsRespectCostBoundOnExamples) {
  for (const auto& inst : {example1(64), example2(64)}) {
    const auto r = solve(inst, {1e-6, SolveMode::Exact, std::nullopt});
    const Rational pixel(1, 64 * 64);
    for (auto mode : {MapMode::Fractional, MapMode::Integral}) {
      const auto map = map_from_matching(r.plan.cells, r.matching, inst.source, mode);
      for (std::size_t k = 0; k < inst.source.size(); ++k) {
        ASSERT_GE(map.target[k], 0);
        EXPECT_TRUE(r.plan.cells.labels[k].contains(static_cast<std::size_t>(map.target[k])));
        EXPECT_LE(inst.cost_of(k, static_cast<std::size_t>(map.target[k])), r.omega);
      }
      for (const auto& [k, pieces] : map.splits)
        for (const auto& [i, mass] : pieces) EXPECT_LE(inst.cost_of(k, i), r.omega);
      for (const auto& e : map.marginal_error) {
        if (mode == MapMode::Fractional) { EXPECT_EQ(e, 0); }
        EXPECT_LE(abs(e), pixel * static_cast<long long>(inst.target.size()));
      }
    }
  }
}

TEST(Map, HeavyAtomFallsBackToFractional) {
  const Instance inst(make_atomic({{0, 0}}, {Rational(1)}),
                      TargetMeasure({{1, 0}, {0, 1}}, {Rational(1, 2), Rational(1, 2)}), CostSpec::linf());
  const auto r = solve(inst, {1e-6, SolveMode::Exact, std::nullopt});
  const auto map = map_from_matching(r.plan.cells, r.matching, inst.source, MapMode::Integral);
  EXPECT_EQ(map.mode, MapMode::Fractional);
  EXPECT_TRUE(map.warning.has_value());
  EXPECT_EQ(map.marginal_error, (std::vector<Rational>{0, 0}));
  EXPECT_EQ(map.splits.size(), 1u);
}
