#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "formula.hpp"
#include "linalg.hpp"
#include "map_spec.hpp"
#include "parallel.hpp"
#include "regularity.hpp"
#include "rng.hpp"

// Brute-force references. No search, no refinement: slow on purpose.
namespace regvar::oracle {

/// Formula evaluated at raster resolution: an equality atom holds at a grid
/// point when the zero set passes within `band` to first order,
/// |p| <= band * |grad p|. Inequalities are evaluated exactly.
class RasterFormula {
 public:
  explicit RasterFormula(const Formula& f) : kind_(f.kind()) {
    if (kind_ == Formula::Kind::Atom) {
      poly_ = f.atom_value().poly;
      rel_ = f.atom_value().relation;
      for (std::size_t j = 0; j < poly_.num_vars(); ++j) grad_.push_back(poly_.derivative(j));
    } else {
      for (const auto& c : f.children()) children_.emplace_back(c);
    }
  }

  bool contains(std::span<const double> z, double band) const {
    switch (kind_) {
      case Formula::Kind::Atom: {
        const double v = poly_(z);
        if (rel_ == Relation::LT) return v < 0.0;
        if (rel_ == Relation::LE) return v <= 0.0;
        double g = 0.0;
        for (const auto& d : grad_) g += d(z) * d(z);
        return std::abs(v) <= band * std::sqrt(g);
      }
      case Formula::Kind::Not: return !children_.front().contains(z, band);
      case Formula::Kind::And:
        for (const auto& c : children_)
          if (!c.contains(z, band)) return false;
        return true;
      case Formula::Kind::Or:
        for (const auto& c : children_)
          if (c.contains(z, band)) return true;
        return false;
    }
    return false;
  }

 private:
  Formula::Kind kind_;
  Polynomial poly_;
  Relation rel_ = Relation::LE;
  std::vector<Polynomial> grad_;
  std::vector<RasterFormula> children_;
};

/// Occupancy of graph membership at the cell centers of a box.
struct RasterGrid {
  std::size_t dims = 0;
  double pitch = 0.0;
  Vector origin;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> occupancy;

  std::size_t size() const { return occupancy.size(); }

  Vector center(std::size_t index) const {
    Vector c(dims);
    for (std::size_t i = 0; i < dims; ++i) {
      c[i] = origin[i] + (static_cast<double>(index % shape[i]) + 0.5) * pitch;
      index /= shape[i];
    }
    return c;
  }

  bool occupied(std::size_t index) const { return occupancy[index] != 0; }
};

/// Half the domain cell diagonal: the smallest band under which a graph of a
/// map sampled on a pitch grid leaves no holes in the range grid.
inline double raster_band(const MapSpec& spec, double pitch) {
  return 0.5 * std::sqrt(static_cast<double>(spec.n)) * pitch;
}

inline RasterGrid rasterize(const MapSpec& spec, double pitch) {
  if (!(pitch > 0.0)) throw InputError("raster pitch must be positive");
  RasterGrid g;
  g.dims = spec.n + spec.m;
  g.pitch = pitch;
  std::size_t total = 1;
  for (const auto& s : spec.box.sides) {
    g.origin.push_back(s.lo);
    g.shape.push_back(static_cast<std::size_t>(std::ceil(s.width() / pitch)));
    total *= g.shape.back();
  }
  if (total > (std::size_t{1} << 28)) throw InputError("raster too large");
  const RasterFormula rf(spec.graph);
  const double band = raster_band(spec, pitch);
  g.occupancy = parallel_map(total, [&](std::size_t i) -> std::uint8_t { return rf.contains(g.center(i), band); });
  return g;
}

/// Sur F(x,y)(lambda) by rasterizing F(B(x, lambda)): domain grid anchored at
/// x, range grid pitch * Z^m; returns the largest distance d such that every
/// range grid point within d of y is covered (0 when y itself is not).
inline double dense_modulus(const MapSpec& spec, const ModulusQuery& q, double pitch) {
  if (spec.n + spec.m > 3) throw InputError("dense_modulus: n + m must be at most 3");
  if (!(pitch > 0.0) || !(q.lambda > 0.0)) throw InputError("dense_modulus: pitch and lambda must be positive");
  const std::size_t n = spec.n, m = spec.m;
  const RasterFormula rf(spec.graph);
  const double band = raster_band(spec, pitch);
  std::vector<Vector> domain;
  const long kd = static_cast<long>(std::floor(q.lambda / pitch + 1e-9));
  std::vector<long> k(n, -kd);
  while (true) {
    Vector u(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = q.x[i] + static_cast<double>(k[i]) * pitch;
      s += static_cast<double>(k[i] * k[i]);
    }
    if (std::sqrt(s) * pitch <= q.lambda * (1.0 + 1e-12)) domain.push_back(std::move(u));
    std::size_t i = 0;
    while (i < n && ++k[i] > kd) k[i] = -kd, ++i;
    if (i == n) break;
  }
  const double r_max = spec.box.slice(n, m).diameter();
  std::vector<std::pair<double, Vector>> range;
  std::vector<long> lo(m), hi(m), j(m);
  for (std::size_t i = 0; i < m; ++i) {
    lo[i] = static_cast<long>(std::floor((q.y[i] - r_max) / pitch));
    hi[i] = static_cast<long>(std::ceil((q.y[i] + r_max) / pitch));
  }
  j = lo;
  while (true) {
    Vector v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = static_cast<double>(j[i]) * pitch;
    const double d = distance(v, q.y);
    if (d <= r_max) range.emplace_back(d, std::move(v));
    std::size_t i = 0;
    while (i < m && ++j[i] > hi[i]) j[i] = lo[i], ++i;
    if (i == m) break;
  }
  std::sort(range.begin(), range.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Vector z(n + m);
  double covered = 0.0;
  for (const auto& [d, v] : range) {
    std::copy(v.begin(), v.end(), z.begin() + static_cast<std::ptrdiff_t>(n));
    bool hit = false;
    for (const auto& u : domain) {
      std::copy(u.begin(), u.end(), z.begin());
      if (rf.contains(z, band)) {
        hit = true;
        break;
      }
    }
    if (!hit) return covered;
    covered = d;
  }
  return r_max;
}

/// inf over unit y* of |A^T y*| from 10^5 seeded sphere samples, then
/// projected gradient steps from the best one.
inline double dense_min_singular(const Matrix& a, std::uint64_t seed = 0, std::size_t samples = 100000) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m == 0 || m > 3) throw InputError("dense_min_singular: need 1 <= m <= 3");
  auto value = [&](const Vector& y) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double t = 0.0;
      for (std::size_t i = 0; i < m; ++i) t += a(i, j) * y[i];
      s += t * t;
    }
    return s;
  };
  Vector best(m), y(m);
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    CounterRng rng(seed, 0x0dac1e, k);
    rng.direction(y);
    const double v = value(y);
    if (v < best_v) best_v = v, best = y;
  }
  const Matrix aat = a * a.transpose();
  const double big = std::max(a.frobenius_norm() * a.frobenius_norm(), 1e-300);
  const double step = 0.5 / big;
  for (int it = 0; it < 20000; ++it) {
    const Vector g = aat.apply(best);
    for (std::size_t i = 0; i < m; ++i) y[i] = best[i] - step * g[i];
    const double len = norm(y);
    for (double& c : y) c /= len;
    best = y;
  }
  return std::sqrt(std::max(0.0, std::min(best_v, value(best))));
}

/// Slope |grad f|(x) by exhaustive polar grid over B(x, radius) \ {x}: rings
/// at every multiple of pitch, each with the same angular count, so grid
/// spacing is at most pitch and every ring sees the same directions.
template <class Fn>
double dense_slope(const Fn& f, std::span<const double> x, double radius, double pitch) {
  const std::size_t n = x.size();
  if (n == 0 || n > 2) throw InputError("dense_slope: n must be 1 or 2");
  if (!(radius > 0.0) || !(pitch > 0.0)) throw InputError("dense_slope: radius and pitch must be positive");
  const double fx = f(x);
  const auto rings = static_cast<long>(std::floor(radius / pitch));
  const std::size_t angles =
      n == 1 ? 2 : static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * radius / pitch));
  double best = 0.0;
  Vector u(n);
  for (long k = 1; k <= rings; ++k) {
    const double d = static_cast<double>(k) * pitch;
    for (std::size_t a = 0; a < angles; ++a) {
      if (n == 1) {
        u[0] = x[0] + (a == 0 ? d : -d);
      } else {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(angles);
        u[0] = x[0] + d * std::cos(th);
        u[1] = x[1] + d * std::sin(th);
      }
      best = std::max(best, (fx - f(std::span<const double>(u))) / d);
    }
  }
  return best;
}

/// The innermost ring of dense_slope sits at distance pitch, so on a
/// polynomial it undershoots the slope by up to pitch * |Hess p(x)| / 2.
inline double dense_slope_bias(const Polynomial& p, std::span<const double> x, double pitch) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.num_vars(); ++i)
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
      const double v = p.derivative(i).derivative(j)(x);
      h += v * v;
    }
  return 0.5 * pitch * std::sqrt(h);
}

}  // namespace regvar::oracle
