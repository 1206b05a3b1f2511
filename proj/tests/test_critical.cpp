#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <regvar/regvar.hpp>

using namespace regvar;

TEST(Scan, SquareFlagsTheOrigin) {
  const auto e = catalog::square();
  const auto scan = scan_critical_values(e.map, e.domain, 0.1, 5000, 1);
  ASSERT_FALSE(scan.flagged.empty());
  for (const auto& f : scan.flagged) {
    EXPECT_LT(std::abs(f.point.x[0]), 0.05 + 1e-12);
    EXPECT_LT(f.point.y[0], 0.0025 + 1e-12);
  }
}

TEST(Scan, ParaboloidValuesNearZero) {
  const auto e = catalog::paraboloid();
  const auto scan = scan_critical_values(e.map, e.domain, 0.1, 50000, 1);
  ASSERT_FALSE(scan.values.empty());
  for (const auto& v : scan.values) EXPECT_LT(v[0], 0.0025 + 1e-12);
}

TEST(Scan, FlagSoundness) {
  const auto e = catalog::cusp();
  const auto scan = scan_critical_values(e.map, e.domain, 0.05, 20000, 2);
  ASSERT_EQ(scan.values.size(), scan.flagged.size());
  for (std::size_t i = 0; i < scan.flagged.size(); ++i) {
    EXPECT_LT(jacobian_rate(e.map, scan.flagged[i].point.x), 0.05);
    EXPECT_EQ(scan.values[i], scan.flagged[i].point.y);
  }
}

TEST(Scan, ProperCriticalMapFlagsZero) {
  const auto scan = scan_critical_values(catalog::remark_map(), 0.05, 32, 3);
  bool origin = false;
  for (const auto& f : scan.flagged) {
    EXPECT_LT(f.rate, 0.05);
    origin = origin || (norm(f.point.x) <= 1e-9 && norm(f.point.y) <= 1e-9);
  }
  EXPECT_TRUE(origin);
}

TEST(Scan, EmptyGraphIsSparse) {
  EXPECT_THROW(scan_critical_values(catalog::empty_graph(), 0.05, 10, 0), SparseGraphError);
}

TEST(BoxCounting, SinglePoint) {
  const auto fit = box_counting_dimension({{0.3, 0.3}}, default_box_scales());
  EXPECT_EQ(fit.dimension, 0.0);
}

TEST(BoxCounting, Segment) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < 10000; ++i) {
    CounterRng rng(1, 0, i);
    const double t = rng.uniform();
    pts.push_back({0.1 + 0.6 * t, 0.2 + 0.8 * t});
  }
  const auto fit = box_counting_dimension(pts, default_box_scales());
  EXPECT_GE(fit.dimension, 0.8);
  EXPECT_LE(fit.dimension, 1.2);
  for (std::size_t i = 1; i < fit.counts.size(); ++i) EXPECT_GE(fit.counts[i], fit.counts[i - 1]);
}

TEST(BoxCounting, Square) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < 10000; ++i) {
    CounterRng rng(2, 0, i);
    pts.push_back({rng.uniform(), rng.uniform()});
  }
  const auto fit = box_counting_dimension(pts, default_box_scales());
  EXPECT_GE(fit.dimension, 1.7);
  EXPECT_LE(fit.dimension, 2.1);
}

TEST(BoxCounting, Undersampled) {
  try {
    box_counting_dimension({{0.0}, {0.5}, {1.0}}, std::vector<double>{0.25, 0.125});
    FAIL();
  } catch (const DiagnosticError& e) {
    EXPECT_EQ(e.kind(), "undersampled");
  }
  EXPECT_THROW(box_counting_dimension({}, default_box_scales()), InputError);
}

TEST(Porosity, Segment) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i <= 2000; ++i) pts.push_back({static_cast<double>(i) / 2000.0, 0.5});
  const auto rep = porosity_scan(pts, std::vector<double>{0.05, 0.1}, 0.02);
  EXPECT_NEAR(rep.lambda_max, 0.5, 0.1);
  EXPECT_TRUE(rep.witness_failures.empty());
}

TEST(Porosity, SinglePoint) {
  const auto rep = porosity_scan({{0.0, 0.0}}, std::vector<double>{0.1}, 0.02);
  EXPECT_NEAR(rep.lambda_max, 0.5, 0.1);
}

TEST(Porosity, SolidSquare) {
  std::vector<Vector> pts;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) pts.push_back({i / 200.0, j / 200.0});
  const std::vector<std::size_t> center{100 * 201 + 100};
  const auto rep = porosity_scan(pts, center, std::vector<double>{0.1, 0.2}, 0.02);
  EXPECT_LE(rep.lambda_max, 0.1);
}

TEST(Components, CircleSquared) {
  const auto e = catalog::circle_squared();
  const auto rep = component_constancy(e.map, e.domain, 0.05, 0.2, 200000, 1);
  ASSERT_EQ(rep.components.size(), 2u);
  std::set<long> values;
  for (const auto& c : rep.components) {
    EXPECT_LT(c.spread, 1e-3);
    values.insert(std::lround(c.value));
  }
  EXPECT_EQ(values, (std::set<long>{0, 1}));
}

TEST(Components, LinearHasNone) {
  const auto e = catalog::identity_line();
  EXPECT_TRUE(component_constancy(e.map, e.domain, 0.05, 0.0, 1000, 1).components.empty());
}

TEST(Components, Cubic) {
  const auto e = catalog::cubic();
  const auto rep = component_constancy(e.map, e.domain, 0.05, 0.0, 20000, 1);
  ASSERT_EQ(rep.components.size(), 2u);
  std::set<long> values;
  for (const auto& c : rep.components) {
    EXPECT_NEAR(std::abs(c.value), 2.0, 1e-6);
    EXPECT_LT(c.diameter, 0.02);
    values.insert(std::lround(c.value));
  }
  EXPECT_EQ(values, (std::set<long>{-2, 2}));
}

TEST(Components, PartitionOfFlaggedPoints) {
  const auto e = catalog::circle_squared();
  const auto rep = component_constancy(e.map, e.domain, 0.05, 0.1, 50000, 2);
  std::vector<int> seen(rep.points.size(), 0);
  for (const auto& c : rep.components)
    for (std::size_t i : c.members) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Components, SpreadShrinksWithTau) {
  const auto e = catalog::circle_squared();
  const auto wide = component_constancy(e.map, e.domain, 0.05, 0.2, 200000, 3);
  const auto narrow = component_constancy(e.map, e.domain, 0.025, 0.2, 200000, 3);
  ASSERT_EQ(wide.components.size(), narrow.components.size());
  double wide_max = 0.0, narrow_max = 0.0;
  for (const auto& c : wide.components) wide_max = std::max(wide_max, c.spread);
  for (const auto& c : narrow.components) narrow_max = std::max(narrow_max, c.spread);
  EXPECT_LE(narrow_max, wide_max + 1e-9);
}

TEST(DisjointSets, Transitive) {
  DisjointSets s(5);
  s.unite(0, 1);
  s.unite(3, 1);
  s.unite(4, 2);
  const auto g = s.groups();
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(s.find(0), s.find(3));
  EXPECT_NE(s.find(0), s.find(4));
}
