#include <cmath>

#include <gtest/gtest.h>

#include <regvar/regvar.hpp>

using namespace regvar;

TEST(DenseModulus, Examples) {
  EXPECT_NEAR(oracle::dense_modulus(catalog::identity_line().spec(), {{0.0}, {0.0}, 0.25}, 1e-3), 0.25, 2e-3);
  EXPECT_NEAR(oracle::dense_modulus(catalog::punctured_cone(), {{0.5}, {0.25}, 0.1}, 1e-3), 0.25, 2e-3);
  EXPECT_NEAR(oracle::dense_modulus(catalog::doubling().spec(), {{0.0}, {0.0}, 0.1}, 1e-3), 0.2, 2e-3);
  EXPECT_THROW(oracle::dense_modulus(catalog::diag23().spec(), {{0, 0}, {0, 0}, 0.1}, 1e-2), InputError);
}

TEST(DenseModulus, AgreesWithSearch) {
  struct Case {
    MapSpec spec;
    Vector x, y;
  };
  const auto sq = catalog::square(), cub = catalog::cubic(), par = catalog::paraboloid();
  const std::vector<Case> cases{{sq.spec(), {0.4}, {0.16}},
                                {cub.spec(), {-1.2}, {1.872}},
                                {catalog::punctured_cone(), {-0.4}, {0.3}},
                                {par.spec(), {0.3, -0.5}, {0.34}}};
  for (const auto& c : cases)
    for (double lambda : {0.05, 0.1}) {
      const double pitch = lambda / 40.0;
      const auto b = modulus_of_surjection(c.spec, {c.x, c.y, lambda}, pitch);
      const double dense = oracle::dense_modulus(c.spec, {c.x, c.y, lambda}, pitch);
      EXPECT_LE(std::abs(0.5 * (b.r_lo + b.r_hi) - dense), 3.0 * pitch) << c.spec.name << " " << lambda;
    }
}

TEST(DenseMinSingular, Examples) {
  EXPECT_NEAR(oracle::dense_min_singular(Matrix{{2, 0}, {0, 3}}), 2.0, 1e-4);
  EXPECT_NEAR(oracle::dense_min_singular(Matrix{{1, 1}, {1, -1}}), 1.41421, 1e-4);
  const Matrix a{{0.3, -0.8, 0.5}, {0.9, 0.2, -0.4}};
  EXPECT_NEAR(oracle::dense_min_singular(a, 3), linear_surjection_rate(a), 1e-4);
  EXPECT_THROW(oracle::dense_min_singular(Matrix::identity(4)), InputError);
}

TEST(DenseSlope, Examples) {
  const double pitch = 1e-3;
  auto vee = [](std::span<const double> u) { return -std::abs(u[0]); };
  auto sq = [](std::span<const double> u) { return u[0] * u[0]; };
  auto lin = [](std::span<const double> u) { return 3.0 * u[0]; };
  EXPECT_NEAR(oracle::dense_slope(vee, std::vector<double>{0.0}, 0.05, pitch), 1.0, 3 * pitch);
  EXPECT_EQ(oracle::dense_slope(sq, std::vector<double>{0.0}, 0.05, pitch), 0.0);
  EXPECT_NEAR(oracle::dense_slope(lin, std::vector<double>{0.1, 0.2}, 0.05, pitch), 3.0, 3 * pitch);
}

TEST(DenseSlope, AgreesWithSampling) {
  const double pitch = 1e-3, radius = 0.02;
  const std::vector<double> radii{radius};
  for (const auto& e : {catalog::square(), catalog::paraboloid(), catalog::cubic()}) {
    const Polynomial& p = e.map.components.front();
    auto f = [&p](std::span<const double> u) { return p(u); };
    const auto pts = detail::poly_graph_sample(e.map, e.domain, 4, 7, 0x0c);
    for (const auto& q : pts)
      EXPECT_LE(std::abs(function_slope(f, q.x, radii, 4096, 2).slope - oracle::dense_slope(f, q.x, radius, pitch)),
                3 * pitch + oracle::dense_slope_bias(p, q.x, pitch))
          << e.name;
  }
}

TEST(Raster, Deterministic) {
  set_worker_count(1);
  const auto a = oracle::rasterize(catalog::punctured_cone(), 0.01);
  set_worker_count(3);
  const auto b = oracle::rasterize(catalog::punctured_cone(), 0.01);
  set_worker_count(0);
  EXPECT_EQ(a.occupancy, b.occupancy);
  for (std::size_t i = 0; i < a.size(); i += 97) {
    const Vector c = a.center(i);
    EXPECT_EQ(a.occupied(i), catalog::punctured_cone().contains(c, 0.0));
  }
}
