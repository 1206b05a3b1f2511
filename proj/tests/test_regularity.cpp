#include <cmath>

#include <gtest/gtest.h>

#include <regvar/regvar.hpp>

using namespace regvar;

namespace {

bool brackets(const ModulusBracket& b, double v) { return b.r_lo <= v + 1e-12 && v <= b.r_hi + 1e-12; }

}  // namespace

TEST(Modulus, Identity) {
  const auto b = modulus_of_surjection(catalog::identity_line().spec(), {{0.0}, {0.0}, 0.25}, 0.25 / 64);
  EXPECT_TRUE(brackets(b, 0.25)) << b.r_lo << " " << b.r_hi;
  EXPECT_LE(b.r_hi - b.r_lo, 3 * 0.25 / 64);
}

TEST(Modulus, Doubling) {
  const auto b = modulus_of_surjection(catalog::doubling().spec(), {{0.0}, {0.0}, 0.25}, 0.25 / 64);
  EXPECT_TRUE(brackets(b, 0.5)) << b.r_lo << " " << b.r_hi;
}

TEST(Modulus, PuncturedCone) {
  const auto b = modulus_of_surjection(catalog::punctured_cone(), {{0.5}, {0.25}, 0.1}, 0.1 / 64);
  EXPECT_TRUE(brackets(b, 0.25)) << b.r_lo << " " << b.r_hi;
}

TEST(Modulus, EmptyCoverageIsZero) {
  const auto b = modulus_of_surjection(catalog::punctured_cone(), {{0.0}, {0.0}, 0.1}, 0.1 / 64);
  EXPECT_EQ(b.r_lo, 0.0);
}

TEST(Modulus, TooCoarseResolution) {
  EXPECT_THROW(modulus_of_surjection(catalog::identity_line().spec(), {{0.0}, {0.0}, 0.25}, 100.0), InputError);
  EXPECT_THROW(modulus_of_surjection(catalog::identity_line().spec(), {{0.0}, {0.0}, 0.0}, 0.01), InputError);
}

TEST(Modulus, MonotoneInLambda) {
  const MapSpec spec = catalog::square().spec();
  const double h = 1.0 / 256;
  for (double x : {0.0, 0.3, -0.6}) {
    double prev = 0.0;
    for (double lambda : {0.05, 0.1, 0.2, 0.4}) {
      const auto b = modulus_of_surjection(spec, {{x}, {x * x}, lambda}, h);
      EXPECT_GE(b.r_hi + 3 * h, prev) << x << " " << lambda;
      prev = b.r_hi;
    }
  }
}

TEST(Modulus, RefinementTightens) {
  const MapSpec spec = catalog::cubic().spec();
  const ModulusQuery q{{0.5}, {-1.375}, 0.1};
  const auto coarse = modulus_of_surjection(spec, q, 0.1 / 16);
  const auto fine = modulus_of_surjection(spec, q, 0.1 / 128);
  EXPECT_LE(fine.r_hi, coarse.r_hi + 1e-12);
  EXPECT_GE(fine.r_lo + 1e-12, coarse.r_lo - 0.1 / 16);
}

TEST(Rate, Identity) {
  const auto est = surjection_rate(catalog::identity_line().spec(), {0.0}, {0.0});
  EXPECT_NEAR(est.sur_estimate, 1.0, 0.05);
  EXPECT_DOUBLE_EQ(est.reg_estimate * est.sur_estimate, 1.0);
}

TEST(Rate, PuncturedConeIsIrregular) {
  const auto est = surjection_rate(catalog::punctured_cone(), {0.0}, {0.0});
  EXPECT_LE(est.sur_estimate, 0.05);
}

TEST(Rate, Diagonal) {
  const auto est = surjection_rate(catalog::diag23().spec(), {0.0, 0.0}, {0.0, 0.0});
  EXPECT_NEAR(est.sur_estimate, 2.0, 0.05);
}

TEST(Rate, RunningMinimumIsNonIncreasing) {
  RateOptions o;
  o.running_minimum = true;
  const auto est = surjection_rate(catalog::square().spec(), {0.5}, {0.25}, 1, o);
  for (std::size_t k = 1; k < est.values.size(); ++k) EXPECT_LE(est.values[k], est.values[k - 1]);
}

TEST(Rate, RejectsPointOffTheGraph) {
  EXPECT_THROW(surjection_rate(catalog::identity_line().spec(), {0.0}, {0.5}), InputError);
}

TEST(Rate, Reciprocal) {
  EXPECT_DOUBLE_EQ(regularity_from_surjection(2.0), 0.5);
  EXPECT_TRUE(std::isinf(regularity_from_surjection(0.0)));
  EXPECT_DOUBLE_EQ(regularity_from_surjection(0.25), 4.0);
}

TEST(Rate, LowerSemicontinuityProxy) {
  const auto e = catalog::square();
  const MapSpec spec = e.spec();
  const double sur = surjection_rate(spec, {0.2}, {0.04}).sur_estimate;
  const auto near = sample_graph(spec, 10, 2, 1e-9, [] {
    SamplingOptions o;
    o.box = Box{{{0.15, 0.25}, {0.0, 0.1}}};
    return o;
  }());
  double lowest = kInf;
  for (const auto& p : near) lowest = std::min(lowest, surjection_rate(spec, p.x, p.y).sur_estimate);
  EXPECT_LE(sur, lowest + 0.1);
}

TEST(Linear, Examples) {
  EXPECT_DOUBLE_EQ(linear_surjection_rate(Matrix{{2, 0}, {0, 3}}), 2.0);
  EXPECT_DOUBLE_EQ(linear_surjection_rate(Matrix{{0, 0}, {0, 0}}), 0.0);
  EXPECT_NEAR(linear_surjection_rate(Matrix{{1, 1}, {1, -1}}), std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(linear_surjection_rate(Matrix{{1}, {2}}), 0.0);
}

TEST(Linear, ScalingAndOrthogonalInvariance) {
  const Matrix a{{0.3, -1.2, 0.7}, {2.0, 0.1, -0.4}};
  const double base = linear_surjection_rate(a);
  EXPECT_NEAR(linear_surjection_rate(-2.5 * a), 2.5 * base, 1e-12);
  const double c = std::cos(0.7), s = std::sin(0.7);
  const Matrix q{{c, -s}, {s, c}};
  const Matrix r{{1, 0, 0}, {0, c, -s}, {0, s, c}};
  EXPECT_NEAR(linear_surjection_rate(q * a), base, 1e-9);
  EXPECT_NEAR(linear_surjection_rate(a * r), base, 1e-9);
}

TEST(Jacobian, Rates) {
  const Polynomial x1 = Polynomial::variable(2, 0), x2 = Polynomial::variable(2, 1);
  const PolyMap p({x1.pow(2) + x2.pow(2)});
  EXPECT_DOUBLE_EQ(jacobian_rate(p, std::vector<double>{1, 0}), 2.0);
  EXPECT_DOUBLE_EQ(jacobian_rate(p, std::vector<double>{0, 0}), 0.0);
  EXPECT_NEAR(jacobian_rate(PolyMap({x1 + x2, x1 - x2}), std::vector<double>{0.4, 9}), std::sqrt(2.0), 1e-12);
}

TEST(Rate, MatchesJacobianOnSmoothMaps) {
  const auto e = catalog::paraboloid();
  const auto est = surjection_rate(e.spec(), {1.0, 0.0}, {1.0});
  EXPECT_NEAR(est.sur_estimate, 2.0, 0.1 * 3.0);
}

TEST(Slope, Examples) {
  const std::vector<double> radii{0.1, 0.01};
  auto sq = [](std::span<const double> u) { return u[0] * u[0]; };
  auto vee = [](std::span<const double> u) { return -std::abs(u[0]); };
  auto lin = [](std::span<const double> u) { return 3.0 * u[0]; };
  EXPECT_EQ(function_slope(sq, std::vector<double>{0.0}, radii, 256, 0).slope, 0.0);
  EXPECT_NEAR(function_slope(vee, std::vector<double>{0.0}, radii, 256, 0).slope, 1.0, 1e-12);
  EXPECT_NEAR(function_slope(lin, std::vector<double>{0.4, -0.2}, radii, 1024, 0).slope, 3.0, 0.01);
}

TEST(Slope, GradientAgreement) {
  for (const auto& e : {catalog::square(), catalog::paraboloid(), catalog::cubic()}) {
    const Polynomial neg = -1.0 * e.map.components.front();
    const auto pts = sample_graph(e.spec(), 5, 4, 1e-9);
    for (const auto& p : pts) {
      const double g = jacobian_rate(e.map, p.x);
      if (g < 0.05) continue;
      const std::vector<double> radii{0.01, 1e-4};
      const double s = function_slope([&](std::span<const double> u) { return neg(u); }, p.x, radii, 2048, 1).slope;
      EXPECT_NEAR(s, g, 0.05 * g) << e.name;
    }
  }
}

TEST(MapSlope, Examples) {
  const std::vector<double> radii{0.01, 0.001};
  EXPECT_NEAR(map_slope(catalog::identity_line().map, std::vector<double>{0.3}, 4, radii, 0).slope, 1.0, 0.01);
  EXPECT_NEAR(map_slope(catalog::doubling().map, std::vector<double>{0.3}, 4, radii, 0).slope, 2.0, 0.02);
  const PolyMap constant({Polynomial::constant(1, 5.0)});
  EXPECT_EQ(map_slope(constant, std::vector<double>{0.3}, 4, radii, 0).slope, 0.0);
}

TEST(MapSlope, BoundsTheRate) {
  const std::vector<double> radii{0.01, 0.001};
  for (const auto& e : {catalog::square(), catalog::cubic(), catalog::fold()}) {
    const auto pts = detail::poly_graph_sample(e.map, e.domain, 4, 6, 0x51);
    for (const auto& p : pts) {
      const double sur = surjection_rate(e.spec(), p.x, p.y).sur_estimate;
      EXPECT_LE(sur, map_slope(e.map, p.x, 8, radii, 0).slope + 0.1) << e.name;
    }
  }
}

TEST(Calculus, SumRule) {
  const MapSpec id = commands::scaled_line(1.0, -4, 4, "identity");
  const auto o = commands::calculus_options(1);
  const auto eq = check_sum_rule(id, Matrix{{-0.5}}, {{{0.3}, {0.3}}}, 0.1, 0, o);
  ASSERT_EQ(eq.rows.size(), 1u);
  EXPECT_NEAR(eq.rows[0].lhs, 0.5, 0.05);
  EXPECT_NEAR(eq.rows[0].rhs, 0.5, 0.05);
  EXPECT_TRUE(eq.all_pass());
  const auto d = check_sum_rule(catalog::diag23().spec(), 0.1 * Matrix::identity(2), {{{0.2, -0.1}, {0.4, -0.3}}},
                                0.1, 0);
  EXPECT_TRUE(d.all_pass());
  EXPECT_NEAR(d.rows[0].lhs, 2.1, 0.1);
  EXPECT_NEAR(d.rows[0].rhs, 2.0 - 0.1 * std::sqrt(2.0), 0.1);
}

TEST(Calculus, ChainRule) {
  const auto o = commands::calculus_options(1);
  const MapSpec h = commands::scaled_line(3.0, -2, 2, "triple");
  const PolyMap g({Polynomial::variable(1, 0, 2.0)});
  const auto r = check_chain_rule(h, g, Box{{{-1, 1}}}, {{{0.1}, {0.6}}}, 0.1, 0, o);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.all_pass());
  EXPECT_NEAR(r.rows[0].lhs, 6.0, 0.1);
  EXPECT_NEAR(r.rows[0].rhs, 6.0, 0.1);
  EXPECT_NEAR(r.rows[0].upper, 6.0, 0.1);
}
