#include <cmath>

#include <gtest/gtest.h>

#include <regvar/regvar.hpp>

using namespace regvar;

TEST(Compactification, Values) {
  const auto c = default_compactification();
  EXPECT_DOUBLE_EQ(c.phi(1.0), 0.5);
  EXPECT_DOUBLE_EQ(c.psi(0.5), 1.0);
  EXPECT_DOUBLE_EQ(c.eta(1.0), 4.0);
  EXPECT_DOUBLE_EQ(c.eta(2.0), 1.0 / c.dphi(2.0));
}

TEST(Compactification, InversePair) {
  const auto c = default_compactification();
  for (int i = 0; i <= 600; ++i) {
    const double t = std::pow(10.0, -3.0 + i / 100.0);
    EXPECT_LE(std::abs(c.psi(c.phi(t)) - t), 1e-9 * std::max(1.0, t));
    const double s = 1e-3 + (1.0 - 2e-3) * i / 600.0;
    EXPECT_LE(std::abs(c.phi(c.psi(s)) - s), 1e-9);
    EXPECT_GT(c.dphi(t), 0.0);
  }
}

TEST(Compactification, EtaGrowthAndIntegrability) {
  const auto c = default_compactification();
  EXPECT_GT(c.eta(1e3) / 1e3, 1e2);
  const double a = inverse_eta_integral(c.eta, 1e2), b = inverse_eta_integral(c.eta, 1e6);
  EXPECT_LT(b, 1.0 + 1e-3);
  EXPECT_LT(b - a, 0.011);
  EXPECT_GT(inverse_eta_integral(linear_eta().eta, 1e6), 10.0);
}

TEST(CompactifiedMap, ChangeOfVariables) {
  const MapSpec plane = catalog::identity_plane().spec();
  const CompactifiedMap<MapSpec> g(plane, default_compactification());
  const Vector x = g.to_x(std::vector<double>{0.5, 0.0});
  EXPECT_NEAR(x[0], 1.0, 1e-12);
  EXPECT_NEAR(x[1], 0.0, 1e-12);
  const Vector u = g.to_u(std::vector<double>{0.0, 3.0});
  EXPECT_NEAR(u[1], 0.75, 1e-12);
  const Vector back = g.to_x(u);
  EXPECT_NEAR(back[1], 3.0, 1e-9);
  EXPECT_NEAR(norm(u), default_compactification().phi(3.0), 1e-12);
  EXPECT_THROW(g.to_x(std::vector<double>{1.0, 0.0}), DomainError);
  EXPECT_THROW(g.to_x(std::vector<double>{0.0, 0.0}), DomainError);
  EXPECT_TRUE(g.membership(std::vector<double>{0.5, 0.0}, std::vector<double>{1.0, 0.0}, 1e-9));
  EXPECT_THROW(g.membership(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 0.0}, 1e-9), DomainError);
}

TEST(CompactifiedMap, BoundOnsetIsReported) {
  const auto e = catalog::identity_line();
  const auto f = commands::scaled_line(1.0, -64, 64, "identity");
  std::vector<GraphPoint> pts{{{2.0}, {2.0}}, {{4.0}, {4.0}}, {{8.0}, {8.0}}};
  const auto rep = check_compactification_bound(f, default_compactification(), pts, 0.1);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& r : rep.rows) EXPECT_GT(r.sur_g, 0.0);
  EXPECT_LE(rep.onset, 8.0);
}

TEST(Radial, Bounds) {
  const auto id = commands::scaled_line(1.0, -4, 4, "identity");
  const auto o = commands::calculus_options(1);
  const Polynomial one = Polynomial::constant(1, 1.0);
  EXPECT_TRUE(check_prop7_bound(id, one, Box{{{-2, 2}}}, {{{0.5}, {0.5}}}, 0.1, 0, o).all_pass());
  const auto two = check_prop7_bound(id, 2.0 * one, Box{{{-2, 2}}}, {{{0.5}, {1.0}}}, 0.1, 0, o);
  EXPECT_TRUE(two.all_pass());
  EXPECT_NEAR(two.rows[0].lhs, 2.0, 0.05);
  const Polynomial rho = one + Polynomial::variable(1, 0).pow(2);
  const auto r = check_prop7_bound(id, rho, Box{{{-1.5, 1.5}}}, {{{1.0}, {2.0}}}, 0.1, 0, o);
  EXPECT_TRUE(r.all_pass());
  EXPECT_NEAR(r.rows[0].lhs, 4.0, 0.05);
  EXPECT_NEAR(r.rows[0].rhs, 4.0, 0.05);
}

TEST(Scan, ReciprocalHasCandidateZero) {
  const auto res = asymptotic_scan(catalog::reciprocal(), linear_eta(), geometric_shells(2, 6), 16, 1);
  ASSERT_FALSE(res.candidates.empty());
  bool zero = false;
  for (const auto& c : res.candidates) {
    zero = zero || std::abs(c.y[0]) < 0.05;
    EXPECT_LT(c.decay_trace.back(), res.threshold);
  }
  EXPECT_TRUE(zero);
  EXPECT_EQ(res.eta_name, "linear");
}

TEST(Scan, LinearHasNone) {
  const auto e = catalog::linear_line();
  EXPECT_TRUE(asymptotic_scan(e.map, linear_eta(), geometric_shells(), 256, 1).candidates.empty());
  const auto f = catalog::first_coordinate();
  EXPECT_TRUE(asymptotic_scan(f.map, default_eta(), geometric_shells(), 256, 1).candidates.empty());
}

TEST(Scan, PolynomialCandidates) {
  // f(x1, x2) = x1 + x1^2 x2: values near 0 are asymptotically critical along x1 -> 0, x2 -> inf.
  const Polynomial a = Polynomial::variable(2, 0), b = Polynomial::variable(2, 1);
  const PolyMap f({a + a.pow(2) * b});
  const auto lin = asymptotic_scan(f, linear_eta(), geometric_shells(), 4096, 2);
  const auto quad = asymptotic_scan(f, default_eta(), geometric_shells(), 4096, 2);
  for (const auto& c : quad.candidates) {
    bool found = false;
    for (const auto& d : lin.candidates) found = found || distance(c.y, d.y) < 0.05;
    EXPECT_TRUE(found) << c.y[0];
  }
}

TEST(Scan, ContainmentAcrossEta) {
  // With the same threshold, eta(t) = (1+t)^2 >= t makes the weighted rate
  // larger, so its candidates are a subset of those under eta(t) = t.
  const auto res_lin = asymptotic_scan(catalog::reciprocal(), linear_eta(), geometric_shells(2, 6), 16, 3);
  const auto res_quad = asymptotic_scan(catalog::reciprocal(), default_eta(), geometric_shells(2, 6), 16, 3);
  for (const auto& c : res_quad.candidates) {
    bool found = false;
    for (const auto& d : res_lin.candidates) found = found || distance(c.y, d.y) < 0.05;
    EXPECT_TRUE(found);
  }
}

TEST(Scan, CandidateDimension) {
  const auto res = asymptotic_scan(catalog::reciprocal(), linear_eta(), geometric_shells(2, 6), 16, 1);
  std::vector<Vector> ys;
  for (const auto& c : res.candidates) ys.push_back(c.y);
  ASSERT_FALSE(ys.empty());
  EXPECT_LE(box_counting_dimension(ys, default_box_scales()).dimension, 0.25);
}

TEST(Scan, RejectsBadShells) {
  const auto e = catalog::linear_line();
  EXPECT_THROW(asymptotic_scan(e.map, linear_eta(), {{4, 8}, {2, 4}}, 8, 0), InputError);
  EXPECT_THROW(asymptotic_scan(e.map, linear_eta(), {}, 8, 0), InputError);
}
