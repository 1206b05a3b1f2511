#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "map_spec.hpp"
#include "parallel.hpp"
#include "regularity.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace regvar {

struct FlaggedPoint {
  GraphPoint point;
  double rate = 0.0;
  /// Membership still holds at tol_eq / 10 (proxy for a proper critical value).
  bool strict = false;
};

struct CriticalScanResult {
  std::vector<FlaggedPoint> flagged;
  std::vector<Vector> values;
  double threshold = 0.0;
  std::size_t total_sampled = 0;
};

struct CriticalScanOptions {
  double tol_eq = 1e-9;
  RateOptions rate;
  SamplingOptions sampling;
};

/// Union-find with path halving; merging is by smaller root index so the
/// result does not depend on edge order.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }
  /// Groups in order of their smallest member; members ascending.
  std::vector<std::vector<std::size_t>> groups() {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> slot(parent_.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < parent_.size(); ++i) {
      const std::size_t r = find(i);
      if (slot[r] == static_cast<std::size_t>(-1)) {
        slot[r] = out.size();
        out.emplace_back();
      }
      out[slot[r]].push_back(i);
    }
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
};

namespace detail {

struct CellHash {
  std::size_t operator()(const std::vector<long>& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (long v : k) h = CounterRng::mix(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

/// Uniform-grid bucket index over a point cloud.
class SpatialHash {
 public:
  SpatialHash(const std::vector<Vector>& points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(points[i])].push_back(i);
  }

  std::vector<long> key(std::span<const double> p) const {
    std::vector<long> k(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) k[i] = static_cast<long>(std::floor(p[i] / cell_));
    return k;
  }

  /// Calls fn(index) for every point in the cells within `reach` cells of p.
  template <class Fn>
  void visit(std::span<const double> p, long reach, Fn&& fn) const {
    const std::vector<long> base = key(p);
    std::vector<long> off(base.size(), -reach);
    std::vector<long> k(base.size());
    while (true) {
      for (std::size_t i = 0; i < base.size(); ++i) k[i] = base[i] + off[i];
      if (auto it = buckets_.find(k); it != buckets_.end())
        for (std::size_t idx : it->second) fn(idx);
      std::size_t i = 0;
      while (i < off.size() && ++off[i] > reach) off[i] = -reach, ++i;
      if (i == off.size()) break;
    }
  }

  /// Distance from p to the nearest point, capped at `cap` (cap <= cell).
  double distance_capped(std::span<const double> p, double cap) const {
    double best = cap;
    visit(p, 1, [&](std::size_t i) { best = std::min(best, distance(p, points_[i])); });
    return best;
  }

 private:
  const std::vector<Vector>& points_;
  double cell_;
  std::unordered_map<std::vector<long>, std::vector<std::size_t>, CellHash> buckets_;
};

inline std::vector<GraphPoint> poly_graph_sample(const PolyMap& f, const Box& domain_box, std::size_t budget,
                                                 std::uint64_t seed, std::uint64_t stream) {
  if (domain_box.dims() != f.n) throw InputError("domain box has wrong dimension");
  return parallel_map(budget, [&](std::size_t i) {
    CounterRng rng(seed, stream, i);
    Vector x(f.n);
    for (std::size_t j = 0; j < f.n; ++j) x[j] = rng.uniform(domain_box.sides[j].lo, domain_box.sides[j].hi);
    Vector y = f(x);
    return GraphPoint{std::move(x), std::move(y)};
  });
}

}  // namespace detail

/// Critical-value scan of a polynomial map: x uniform in the domain box,
/// rate = smallest singular value of the Jacobian.
inline CriticalScanResult scan_critical_values(const PolyMap& f, const Box& domain_box, double tau, std::size_t budget,
                                               std::uint64_t seed) {
  if (!(tau > 0.0)) throw InputError("critical scan: tau must be positive");
  const auto pts = detail::poly_graph_sample(f, domain_box, budget, seed, 0xc417);
  const JacobianEvaluator jac(f);
  const auto rates = parallel_map(pts.size(), [&](std::size_t i) { return jac.rate(pts[i].x); });
  CriticalScanResult out;
  out.threshold = tau;
  out.total_sampled = pts.size();
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (rates[i] < tau) {
      out.flagged.push_back({pts[i], rates[i], true});
      out.values.push_back(pts[i].y);
    }
  return out;
}

/// Critical-value scan of a set-valued map: graph samples, rate from the
/// default schedule of surjection_rate. Values above tau are not resolved
/// (the rate is capped there), which is all the flag needs.
template <GraphModel G>
CriticalScanResult scan_critical_values(const G& g, double tau, std::size_t budget, std::uint64_t seed,
                                        const CriticalScanOptions& opts = {}) {
  if (!(tau > 0.0)) throw InputError("critical scan: tau must be positive");
  const auto pts = sample_graph(g, budget, seed, opts.tol_eq, opts.sampling);
  // Exact duplicates (isolated graph pieces are hit repeatedly) share a rate.
  std::map<Vector, std::size_t> first;
  std::vector<std::size_t> unique;
  std::vector<std::size_t> owner(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto [it, fresh] = first.emplace(pts[i].joined(), unique.size());
    if (fresh) unique.push_back(i);
    owner[i] = it->second;
  }
  RateOptions ro = opts.rate;
  ro.tol_eq = opts.tol_eq;
  ro.ceiling = std::min(ro.ceiling, tau);
  const auto rates = parallel_map(unique.size(), [&](std::size_t u) {
    const auto& p = pts[unique[u]];
    return surjection_rate(g, p.x, p.y, seed, ro).sur_estimate;
  });
  CriticalScanResult out;
  out.threshold = tau;
  out.total_sampled = pts.size();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = rates[owner[i]];
    if (!(r < tau)) continue;
    const bool strict = g.contains(pts[i].joined(), opts.tol_eq / 10.0);
    out.flagged.push_back({pts[i], r, strict});
    out.values.push_back(pts[i].y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Box counting
// ---------------------------------------------------------------------------

struct DimensionFit {
  std::vector<double> scales;
  std::vector<std::size_t> counts;
  /// Scales used by the fit (1 < count < number of points).
  std::vector<bool> used;
  double dimension = 0.0;
  double r2 = 0.0;
};

/// Default scales 2^-2 ... 2^-7.
inline std::vector<double> default_box_scales() {
  std::vector<double> s;
  for (int k = 2; k <= 7; ++k) s.push_back(std::ldexp(1.0, -k));
  return s;
}

/// Least-squares slope of log N(eps) against log(1/eps), over the scales
/// whose counts are neither 1 nor the number of points.
inline DimensionFit box_counting_dimension(const std::vector<Vector>& points, const std::vector<double>& scales) {
  if (points.empty()) throw InputError("box counting: no points");
  if (scales.size() < 2) throw InputError("box counting: need at least two scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw InputError("box counting: scales must be positive");
    if (i > 0 && !(scales[i] < scales[i - 1])) throw InputError("box counting: scales must decrease");
  }
  const std::size_t d = points.front().size();
  Vector lo(d, std::numeric_limits<double>::infinity());
  for (const auto& p : points) {
    if (p.size() != d) throw InputError("box counting: points disagree on dimension");
    for (std::size_t i = 0; i < d; ++i) lo[i] = std::min(lo[i], p[i]);
  }
  DimensionFit fit;
  fit.scales = scales;
  std::vector<double> xs, ys;
  for (double eps : scales) {
    std::vector<std::vector<long>> cells;
    cells.reserve(points.size());
    for (const auto& p : points) {
      std::vector<long> k(d);
      for (std::size_t i = 0; i < d; ++i) k[i] = static_cast<long>(std::floor((p[i] - lo[i]) / eps));
      cells.push_back(std::move(k));
    }
    std::sort(cells.begin(), cells.end());
    const auto count = static_cast<std::size_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
    fit.counts.push_back(count);
    const bool use = count > 1 && count < points.size();
    fit.used.push_back(use);
    if (use) {
      xs.push_back(-std::log(eps));
      ys.push_back(std::log(static_cast<double>(count)));
    }
  }
  if (xs.empty() && std::all_of(fit.counts.begin(), fit.counts.end(), [](std::size_t c) { return c == 1; })) {
    fit.dimension = 0.0;
    fit.r2 = 1.0;
    return fit;
  }
  if (xs.size() < 2) throw DiagnosticError("undersampled", "fewer than two informative box-counting scales");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.dimension = std::max(0.0, slope);
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Porosity
// ---------------------------------------------------------------------------

struct PorosityWitness {
  std::size_t point = 0;
  double radius = 0.0;
  double ratio = 0.0;
  Vector center;
};

struct PorosityReport {
  double lambda_max = 0.0;
  std::vector<double> tested_radii;
  /// Best hole ratio per tested (point, radius) pair.
  std::vector<PorosityWitness> witnesses;
  std::vector<std::pair<std::size_t, double>> witness_failures;
};

/// For each test point x and radius r, the largest rho over grid centers c in
/// B(x, r) (pitch grid_pitch * r) with B(c, rho) in B(x, r) and
/// dist(c, points) >= rho. lambda_max is the smallest rho / r over the pairs
/// where some hole was found; pairs without one are reported as failures.
inline PorosityReport porosity_scan(const std::vector<Vector>& points, const std::vector<std::size_t>& test_points,
                                    const std::vector<double>& radii, double grid_pitch) {
  if (points.empty()) throw InputError("porosity: no points");
  if (radii.empty()) throw InputError("porosity: no radii");
  for (double r : radii)
    if (!(r > 0.0)) throw InputError("porosity: radii must be positive");
  if (!(grid_pitch > 0.0 && grid_pitch <= 1.0)) throw InputError("porosity: grid pitch must be in (0, 1]");
  for (std::size_t t : test_points)
    if (t >= points.size()) throw InputError("porosity: test index out of range");
  const std::size_t d = points.front().size();
  PorosityReport report;
  report.tested_radii = radii;
  report.lambda_max = 1.0;
  bool any = false;
  for (double r : radii) {
    const detail::SpatialHash hash(points, r);
    const long k_max = static_cast<long>(std::floor(1.0 / grid_pitch));
    std::vector<Vector> offsets;
    std::vector<long> k(d, -k_max);
    while (true) {
      Vector o(d);
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        o[i] = static_cast<double>(k[i]) * grid_pitch * r;
        s += o[i] * o[i];
      }
      if (std::sqrt(s) <= r) offsets.push_back(std::move(o));
      std::size_t i = 0;
      while (i < d && ++k[i] > k_max) k[i] = -k_max, ++i;
      if (i == d) break;
    }
    const auto best = parallel_map(test_points.size(), [&](std::size_t t) {
      const Vector& x = points[test_points[t]];
      PorosityWitness w{test_points[t], r, 0.0, x};
      Vector c(d);
      for (const auto& o : offsets) {
        for (std::size_t i = 0; i < d; ++i) c[i] = x[i] + o[i];
        const double room = r - norm(o);
        if (room <= w.ratio * r) continue;
        const double rho = std::min(room, hash.distance_capped(c, r));
        if (rho > w.ratio * r) w.ratio = rho / r, w.center = c;
      }
      return w;
    });
    for (const auto& w : best) {
      if (w.ratio > 0.0) {
        report.lambda_max = std::min(report.lambda_max, w.ratio);
        any = true;
      } else {
        report.witness_failures.emplace_back(w.point, r);
      }
      report.witnesses.push_back(w);
    }
  }
  if (!any) report.lambda_max = 0.0;
  return report;
}

/// Every `stride`-th point (at most max_points of them) as test centers.
inline std::vector<std::size_t> spread_indices(std::size_t count, std::size_t max_points) {
  std::vector<std::size_t> out;
  if (count == 0 || max_points == 0) return out;
  const std::size_t stride = std::max<std::size_t>(1, count / max_points);
  for (std::size_t i = 0; i < count && out.size() < max_points; i += stride) out.push_back(i);
  return out;
}

inline PorosityReport porosity_scan(const std::vector<Vector>& points, const std::vector<double>& radii,
                                    double grid_pitch, std::size_t max_test_points = 64) {
  return porosity_scan(points, spread_indices(points.size(), max_test_points), radii, grid_pitch);
}

// ---------------------------------------------------------------------------
// Component constancy
// ---------------------------------------------------------------------------

struct Component {
  std::vector<std::size_t> members;
  double spread = 0.0;
  /// f at the member with the smallest rate.
  double value = 0.0;
  double diameter = 0.0;
};

struct ComponentReport {
  std::vector<GraphPoint> points;
  std::vector<double> rates;
  std::vector<Component> components;
  double linking_radius = 0.0;
};

/// Mean distance from each point to its nearest neighbour (0 for < 2 points).
inline double mean_nearest_neighbour(const std::vector<Vector>& pts) {
  if (pts.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) best = std::min(best, distance(pts[i], pts[j]));
    total += best;
  }
  return total / static_cast<double>(pts.size());
}

/// Twice the coverage radius of `budget` uniform samples: (vol ln N / N)^(1/n).
inline double default_linking_radius(const Box& domain_box, std::size_t budget) {
  double vol = 1.0;
  for (const auto& s : domain_box.sides) vol *= s.width();
  const double nb = static_cast<double>(std::max<std::size_t>(budget, 2));
  return 2.0 * std::pow(vol * std::log(nb) / nb, 1.0 / static_cast<double>(domain_box.sides.size()));
}

/// Clusters the points into the connected components of the eps-neighbourhood graph.
inline std::vector<std::vector<std::size_t>> link_components(const std::vector<Vector>& pts, double eps) {
  DisjointSets sets(pts.size());
  if (!pts.empty()) {
    const detail::SpatialHash hash(pts, eps);
    for (std::size_t i = 0; i < pts.size(); ++i)
      hash.visit(pts[i], 1, [&](std::size_t j) {
        if (j > i && distance(pts[i], pts[j]) <= eps) sets.unite(i, j);
      });
  }
  return sets.groups();
}

/// Flags x with |grad f(x)| < tau among `budget` uniform samples of the domain
/// box, links them at radius eps (<= 0 selects default_linking_radius) and reports the spread of f on every component.
inline ComponentReport component_constancy(const PolyMap& f, const Box& domain_box, double tau, double eps,
                                           std::size_t budget, std::uint64_t seed) {
  if (f.m != 1) throw InputError("component constancy needs a scalar map");
  if (!(tau > 0.0)) throw InputError("component constancy: tau must be positive");
  const CriticalScanResult scan = scan_critical_values(f, domain_box, tau, budget, seed);
  ComponentReport report;
  std::vector<Vector> xs;
  for (const auto& fp : scan.flagged) {
    report.points.push_back(fp.point);
    report.rates.push_back(fp.rate);
    xs.push_back(fp.point.x);
  }
  report.linking_radius = eps > 0.0 ? eps : default_linking_radius(domain_box, budget);
  if (xs.empty()) return report;
  if (!(report.linking_radius > 0.0)) report.linking_radius = std::numeric_limits<double>::min();
  for (auto& members : link_components(xs, report.linking_radius)) {
    Component c;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t best = members.front();
    for (std::size_t i : members) {
      const double v = report.points[i].y[0];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (report.rates[i] < report.rates[best]) best = i;
      for (std::size_t j : members) c.diameter = std::max(c.diameter, distance(xs[i], xs[j]));
    }
    c.spread = hi - lo;
    c.value = report.points[best].y[0];
    c.members = std::move(members);
    report.components.push_back(std::move(c));
  }
  return report;
}

}  // namespace regvar
