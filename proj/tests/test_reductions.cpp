#include <winfty/reductions.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace winfty;

TEST(Epsilon, Examples) {
  EXPECT_NEAR(epsilon(4, 2, 2), 0.25, 1e-15);
  EXPECT_NEAR(epsilon(2, 2, 2), 0.5, 1e-15);
  EXPECT_NEAR(epsilon(2, 2, 1), 1 - std::sqrt(2.0) / 2, 1e-15);
  EXPECT_THROW(epsilon(3, 1.0, 1), Error);
  EXPECT_THROW(epsilon(3, 0.5, 1), Error);
  EXPECT_THROW(epsilon(1, 2, 1), Error);
}

TEST(Epsilon, PositiveAcrossParameters) {
  for (std::size_t n = 2; n <= 8; ++n)
    for (double p : {1.5, 2.0, 3.0, 64.0})
      for (double q : {0.5, 1.0, 2.0}) {
        const double e = epsilon(n, p, q);
        EXPECT_GT(e, 0.0) << n << " " << p << " " << q;
        EXPECT_LT(e, 1.0);
      }
}

TEST(Epsilon, AlphaMinimizesSeparationProfile) {
  for (std::size_t n = 2; n <= 8; ++n)
    for (double p : {1.5, 2.0, 3.0, 6.0}) {
      auto g = [&](double t) { return std::pow(1 - t, p) + std::pow(t, p) * static_cast<double>(n - 1); };
      const double best = g(gadget_alpha(n, p));
      for (int k = 0; k <= 10000; ++k) EXPECT_LE(best, g(k / 10000.0) + 1e-12);
    }
}

TEST(GadgetPoints, TwoTargetsEuclideanSquared) {
  const auto pts = gadget_points(2, 2, 2);
  const CostSpec cost(2, 2);
  const auto e = basis_targets(2);
  EXPECT_EQ(pts[0b11], (Point{0.5, 0.5}));
  EXPECT_DOUBLE_EQ(eval_cost(cost, pts[0b11], e[0]), 0.5);
  EXPECT_DOUBLE_EQ(eval_cost(cost, pts[0b11], e[0]), 1 - epsilon(2, 2, 2));
  EXPECT_EQ(pts[0b01], (Point{0.5, 0.0}));
  EXPECT_DOUBLE_EQ(eval_cost(cost, pts[0b01], e[1]), 1.25);
}

TEST(GadgetPoints, OriginIsAtUnitCostFromEveryTarget) {
  for (double p : {1.5, 2.0, 3.0})
    for (double q : {0.5, 1.0, 2.0}) {
      const auto pts = gadget_points(4, p, q);
      for (const auto& e : basis_targets(4)) EXPECT_EQ(eval_cost(CostSpec(p, q), pts[0], e), 1.0);
    }
}

TEST(GadgetPoints, CellsStableInsideGap) {
  for (std::size_t n = 2; n <= 5; ++n)
    for (double p : {1.5, 2.0, 3.0})
      for (double q : {0.5, 1.0, 2.0}) {
        const auto pts = gadget_points(n, p, q);
        const double eps = epsilon(n, p, q), delta = eps * 1e-3;
        const TargetMeasure y(basis_targets(n), std::vector<Rational>(n, Rational(1, static_cast<long long>(n))));
        for (double w : {1 - eps + delta, 1 - eps / 2, 1 - delta})
          for (std::size_t s = 0; s < pts.size(); ++s)
            EXPECT_EQ(cell_of_point(pts[s], y, CostSpec(p, q), w).bits(), s);
      }
}

TEST(GraphToInstance, FullCellReproducesGraph) {
  TransportGraph g;
  g.n_targets = 3;
  g.left[TargetSet::full(3)] = 1;
  g.right = {Rational(1, 3), Rational(1, 3), Rational(1, 3)};
  const auto gadget = make_gadget(g, 2, 2);
  const double mid = (gadget.lambda_lo + gadget.lambda_hi) / 2;
  EXPECT_EQ(build_graph(decompose(gadget.instance, mid), gadget.instance.target).left, g.left);
}

TEST(GraphToInstance, DichotomyOnTwoTargetExamples) {
  TransportGraph bad, good;
  bad.n_targets = good.n_targets = 2;
  bad.left = {{TargetSet::single(0), Rational(1, 2)}, {TargetSet::full(2), Rational(1, 2)}};
  good.left = {{TargetSet::single(0), Rational(1, 4)}, {TargetSet::full(2), Rational(3, 4)}};
  bad.right = good.right = {Rational(1, 4), Rational(3, 4)};
  for (const auto* g : {&bad, &good}) {
    const auto gadget = make_gadget(*g, 2, 2);
    for (double w : interior_probes(gadget.lambda_lo, gadget.lambda_hi, 5))
      EXPECT_EQ(decide(gadget.instance, w), g == &good);
  }
}

TEST(GraphToInstance, RejectsMisplacedPointWithWitness) {
  TransportGraph g;
  g.n_targets = 2;
  g.left = {{TargetSet::single(0), Rational(1, 2)}, {TargetSet::full(2), Rational(1, 2)}};
  g.right = {Rational(1, 2), Rational(1, 2)};
  std::map<TargetSet, Point> pts{{TargetSet::single(0), {0.5, 0.0}}, {TargetSet::full(2), {0.9, 0.0}}};
  const double probes[] = {0.6, 0.9};
  try {
    graph_to_instance(g, pts, basis_targets(2), CostSpec(2, 2), probes);
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("omega = 0.6"), std::string::npos) << e.what();
  }
  pts.erase(TargetSet::full(2));
  EXPECT_THROW(graph_to_instance(g, pts, basis_targets(2), CostSpec(2, 2), probes), Error);
}

TEST(Dichotomy, RandomGraphsLandOnPredictedSide) {
  std::mt19937_64 rng(51);
  int feasible = 0, infeasible = 0;
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + t % 3;
    const auto g = oracle::random_graph(rng, n, 8);
    const double p = t % 2 ? 2.0 : 3.0, q = t % 3 ? 1.0 : 2.0;
    const auto r = verify_dichotomy(g, p, q);
    EXPECT_EQ(r.below_gap(), hall_feasible(g));
    EXPECT_FALSE(r.optimum > r.lambda_lo + kGadgetSlack && r.optimum < r.lambda_hi - kGadgetSlack);
    (r.hall_feasible ? feasible : infeasible)++;
  }
  EXPECT_GT(feasible, 5);
  EXPECT_GT(infeasible, 5);
}

TEST(Dichotomy, GapWidthForFourTargetsSquaredEuclidean) {
  // Solving to within eps / 2 = 1/8 tells the two branches apart.
  EXPECT_NEAR(epsilon(4, 2, 2), 0.25, 1e-15);
  TransportGraph g;
  g.n_targets = 4;
  g.left[TargetSet::single(0)] = Rational(1, 2);
  g.left[TargetSet::full(4)] = Rational(1, 2);
  g.right.assign(4, Rational(1, 4));
  const auto r = verify_dichotomy(g, 2, 2);
  EXPECT_FALSE(r.hall_feasible);
  EXPECT_GE(r.optimum, 1.0);
  EXPECT_GE(r.optimum - 0.125, r.lambda_lo + 0.125 - 1e-12);
}
