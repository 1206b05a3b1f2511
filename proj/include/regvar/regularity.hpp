#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "map_spec.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace regvar {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Modulus of surjection
// ---------------------------------------------------------------------------

struct ModulusQuery {
  Vector x;
  Vector y;
  double lambda = 0.0;
};

struct ModulusOptions {
  double tol_eq = 1e-9;
  /// Upper end of the search; <= 0 means the diameter of the range box.
  double r_max = 0.0;
  /// Stop as soon as r_hi / lambda can no longer drop below this ratio. The
  /// bracket is then marked truncated with r_hi = +inf.
  double stop_ratio = kInf;
  /// Largest number of domain grid points; the domain pitch is coarsened
  /// beyond the requested resolution to respect it.
  std::size_t domain_grid_budget = 20000;
  int refine_iterations = 30;
  /// Bisection stops once the bracket is narrower than this fraction of the
  /// resolution.
  double bisection_fraction = 0.125;
};

/// Sur F(x,y)(lambda) bracketed at grid resolution.
struct ModulusBracket {
  double r_lo = 0.0;
  double r_hi = 0.0;
  double resolution = 0.0;
  std::size_t samples_range = 0;
  std::size_t samples_domain = 0;
  bool truncated = false;
};

namespace detail {

struct KeyLess {
  bool operator()(const std::vector<long>& a, const std::vector<long>& b) const { return a < b; }
};

/// Points of pitch * Z^m sorted by distance to `center`, generated lazily in
/// growing shells. The lattice is anchored at the origin, not at the center,
/// so special values such as 0 are always grid points.
class RangeLattice {
 public:
  RangeLattice(Vector center, double pitch) : center_(std::move(center)), pitch_(pitch) {}

  void ensure(double radius) {
    while (generated_ < radius) extend(std::max({radius, 2.0 * generated_, 4.0 * pitch_}));
  }

  std::size_t size() const { return dist_.size(); }
  double dist(std::size_t i) const { return dist_[i]; }
  const std::vector<long>& key(std::size_t i) const { return keys_[i]; }
  Vector point(std::size_t i) const {
    Vector v(keys_[i].size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(keys_[i][k]) * pitch_;
    return v;
  }
  double generated() const { return generated_; }

 private:
  void extend(double radius) {
    const std::size_t m = center_.size();
    std::vector<long> lo(m), hi(m), k(m);
    for (std::size_t i = 0; i < m; ++i) {
      lo[i] = static_cast<long>(std::floor((center_[i] - radius) / pitch_));
      hi[i] = static_cast<long>(std::ceil((center_[i] + radius) / pitch_));
    }
    struct Entry {
      double d;
      std::vector<long> key;
    };
    std::vector<Entry> fresh;
    k = lo;
    while (true) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double diff = static_cast<double>(k[i]) * pitch_ - center_[i];
        s += diff * diff;
      }
      const double d = std::sqrt(s);
      if (d <= radius && (d > generated_ || (generated_ == 0.0 && dist_.empty() && d == 0.0)))
        fresh.push_back({d, k});
      std::size_t i = 0;
      while (i < m && ++k[i] > hi[i]) k[i] = lo[i], ++i;
      if (i == m) break;
    }
    std::sort(fresh.begin(), fresh.end(), [](const Entry& a, const Entry& b) {
      return a.d != b.d ? a.d < b.d : a.key < b.key;
    });
    for (auto& e : fresh) {
      dist_.push_back(e.d);
      keys_.push_back(std::move(e.key));
    }
    generated_ = radius;
  }

  Vector center_;
  double pitch_;
  double generated_ = 0.0;
  std::vector<double> dist_;
  std::vector<std::vector<long>> keys_;
};

/// Least-squares refinement of u in the closed ball B(center, radius) so that
/// (u, v) satisfies the graph formula. Levenberg-Marquardt steps on the
/// residual vector with central-difference Jacobians and isotropic damping,
/// which gives minimum-norm steps for underdetermined systems; branch choices at
/// disjunctions are frozen while differentiating.
template <GraphModel G>
bool refine_in_ball(const G& g, std::span<const double> center, double radius, std::span<const double> v,
                    Vector& u, double tol_eq, int iterations, std::size_t* evals) {
  const std::size_t n = u.size();
  Vector z(n + v.size());
  std::copy(v.begin(), v.end(), z.begin() + static_cast<std::ptrdiff_t>(n));
  auto load = [&](const Vector& uu) { std::copy(uu.begin(), uu.end(), z.begin()); };
  auto project = [&](Vector& uu) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += (uu[j] - center[j]) * (uu[j] - center[j]);
    d = std::sqrt(d);
    if (d > radius) {
      const double s = radius / d;
      for (std::size_t j = 0; j < n; ++j) uu[j] = center[j] + (uu[j] - center[j]) * s;
    }
  };
  BranchPath path;
  path.strict_margin = tol_eq;
  std::vector<double> r, rp, rm;
  auto residual_norm = [&](const Vector& uu, BranchPath& p, std::vector<double>& out) {
    load(uu);
    out.clear();
    g.residuals(z, out, p);
    ++*evals;
    double s = 0.0;
    for (double x : out) s += x * x;
    return s;
  };
  double mu = 1e-6;
  project(u);
  for (int it = 0; it < iterations; ++it) {
    load(u);
    if (g.contains(z, tol_eq)) return true;
    path.record();
    const double cost = residual_norm(u, path, r);
    if (cost == 0.0) return false;
    const std::size_t k = r.size();
    Matrix jac(k, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(u[j]));
      Vector up = u, um = u;
      up[j] += h;
      um[j] -= h;
      path.rewind();
      residual_norm(up, path, rp);
      path.rewind();
      residual_norm(um, path, rm);
      for (std::size_t i = 0; i < k; ++i) jac(i, j) = (rp[i] - rm[i]) / (2.0 * h);
    }
    // On the sphere with the descent direction pointing outward, move in the
    // tangent plane instead and let the projection retract.
    Vector normal(n);
    double dist = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      normal[j] = u[j] - center[j];
      dist += normal[j] * normal[j];
    }
    dist = std::sqrt(dist);
    if (dist >= radius * (1.0 - 1e-9) && dist > 0.0) {
      double outward = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        normal[j] /= dist;
        double g = 0.0;
        for (std::size_t i = 0; i < k; ++i) g += jac(i, j) * r[i];
        outward -= g * normal[j];
      }
      if (outward > 0.0)
        for (std::size_t i = 0; i < k; ++i) {
          double along = 0.0;
          for (std::size_t j = 0; j < n; ++j) along += jac(i, j) * normal[j];
          for (std::size_t j = 0; j < n; ++j) jac(i, j) -= along * normal[j];
        }
    }
    Matrix jtj(n, n);
    std::vector<double> grad(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t i = 0; i < k; ++i) grad[a] += jac(i, a) * r[i];
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < k; ++i) jtj(a, b) += jac(i, a) * jac(i, b);
    }
    bool improved = false;
    while (mu < 1e10) {
      Matrix sys = jtj;
      double scale = 0.0;
      for (std::size_t a = 0; a < n; ++a) scale = std::max(scale, jtj(a, a));
      scale = std::max(scale, 1e-300);
      for (std::size_t a = 0; a < n; ++a) sys(a, a) += mu * scale;
      std::vector<double> step(n);
      for (std::size_t a = 0; a < n; ++a) step[a] = -grad[a];
      if (!cholesky_solve(sys, step)) {
        mu *= 10.0;
        continue;
      }
      Vector trial = u;
      for (std::size_t a = 0; a < n; ++a) trial[a] += step[a];
      project(trial);
      BranchPath fresh;
      fresh.strict_margin = tol_eq;
      const double trial_cost = residual_norm(trial, fresh, rp);
      if (trial_cost < cost) {
        u = std::move(trial);
        mu = std::max(mu / 10.0, 1e-12);
        improved = true;
        break;
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  load(u);
  return g.contains(z, tol_eq);
}

template <GraphModel G>
class ModulusSearch {
 public:
  ModulusSearch(const G& g, const ModulusQuery& q, double resolution, const ModulusOptions& opts)
      : g_(g), q_(q), h_(resolution), opts_(opts), lattice_(q.y, resolution) {
    const std::size_t n = g.domain_dim();
    // Domain grid anchored at x, coarsened if it would exceed the budget.
    double pitch = resolution;
    const double budget = static_cast<double>(std::max<std::size_t>(opts.domain_grid_budget, 1));
    const double span = 2.0 * q.lambda;
    if (std::pow(span / pitch + 1.0, static_cast<double>(n)) > budget)
      pitch = span / (std::pow(budget, 1.0 / static_cast<double>(n)) - 1.0);
    domain_pitch_ = pitch;
    domain_ = ball_lattice(q.x, q.lambda, pitch);
    if (g.thin()) {
      const double coarse = std::max(pitch, q.lambda / 4.0);
      seeds_ = ball_lattice(q.x, q.lambda, coarse);
    }
  }

  ModulusBracket run() {
    ModulusBracket out;
    out.resolution = h_;
    double r_max = opts_.r_max > 0.0 ? opts_.r_max : g_.sampling_box().slice(g_.domain_dim(), g_.range_dim()).diameter();
    const double stop_r = opts_.stop_ratio * q_.lambda - h_;
    auto finish = [&](double lo, double step, bool truncated) {
      out.r_lo = snapped(lo);
      out.r_hi = truncated ? kInf : out.r_lo + step + h_;
      out.truncated = truncated;
      out.samples_range = range_checks_;
      out.samples_domain = domain_checks_;
      return out;
    };
    if (stop_r <= 0.0) return finish(0.0, 0.0, true);
    if (!accept(0.0)) return finish(0.0, 0.0, false);
    double lo = 0.0;
    double hi = 0.0;
    bool bracketed = false;
    for (double r = h_; ; r *= 2.0) {
      const double cand = std::min(r, r_max);
      if (accept(cand)) {
        lo = cand;
        if (snapped(lo) >= stop_r) return finish(lo, 0.0, true);
        if (cand >= r_max) break;
      } else {
        hi = cand;
        bracketed = true;
        break;
      }
    }
    if (!bracketed) return finish(lo, 0.0, false);
    const double target = opts_.bisection_fraction * h_;
    while (hi - lo > target) {
      const double mid = 0.5 * (lo + hi);
      if (accept(mid)) {
        lo = mid;
        if (snapped(lo) >= stop_r) return finish(lo, 0.0, true);
      } else {
        hi = mid;
      }
    }
    return finish(lo, hi - lo, false);
  }

  double domain_pitch() const { return domain_pitch_; }

 private:
  static std::vector<Vector> ball_lattice(const Vector& center, double radius, double pitch) {
    const std::size_t n = center.size();
    const long k_max = static_cast<long>(std::floor(radius / pitch + 1e-9));
    std::vector<std::pair<double, Vector>> pts;
    std::vector<long> k(n, -k_max);
    while (true) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(k[i] * k[i]);
      const double d = std::sqrt(s) * pitch;
      if (d <= radius * (1.0 + 1e-12)) {
        Vector u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = center[i] + static_cast<double>(k[i]) * pitch;
        pts.emplace_back(d, std::move(u));
      }
      std::size_t i = 0;
      while (i < n && ++k[i] > k_max) k[i] = -k_max, ++i;
      if (i == n) break;
    }
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vector> out;
    out.reserve(pts.size());
    for (auto& p : pts) out.push_back(std::move(p.second));
    return out;
  }

  /// All lattice points within distance r of y are covered.
  bool accept(double r) {
    if (first_fail_ && lattice_.dist(*first_fail_) <= r) return false;
    lattice_.ensure(r);
    while (verified_ < lattice_.size() && lattice_.dist(verified_) <= r) {
      if (!covered(verified_)) {
        first_fail_ = verified_;
        return false;
      }
      ++verified_;
    }
    return true;
  }

  /// Largest verified lattice distance not exceeding r (0 when none).
  double snapped(double r) const {
    double best = 0.0;
    for (std::size_t i = verified_; i-- > 0;)
      if (lattice_.dist(i) <= r) {
        best = lattice_.dist(i);
        break;
      }
    return best;
  }

  bool covered(std::size_t index) {
    ++range_checks_;
    const auto& key = lattice_.key(index);
    const Vector v = lattice_.point(index);
    const std::size_t n = g_.domain_dim();
    Vector z(n + v.size());
    std::copy(v.begin(), v.end(), z.begin() + static_cast<std::ptrdiff_t>(n));
    auto test = [&](const Vector& u) {
      ++domain_checks_;
      std::copy(u.begin(), u.end(), z.begin());
      return g_.contains(z, opts_.tol_eq);
    };
    // Warm starts: solutions of neighbouring lattice points, then x itself.
    std::vector<const Vector*> warm;
    std::vector<long> probe = key;
    for (std::size_t i = 0; i < key.size(); ++i)
      for (long delta : {-1L, 1L}) {
        probe[i] = key[i] + delta;
        if (auto it = solutions_.find(probe); it != solutions_.end()) warm.push_back(&it->second);
        probe[i] = key[i];
      }
    warm.push_back(&q_.x);
    for (const Vector* u : warm)
      if (test(*u)) return remember(key, *u);
    if (!g_.thin())
      for (const Vector& u : domain_)
        if (test(u)) return remember(key, u);
    // One refinement pass from the nearest warm start, then from the grid
    // point with the smallest violation.
    if (warm.size() > 1) {
      Vector u = *warm.front();
      if (refine_in_ball(g_, q_.x, q_.lambda, v, u, opts_.tol_eq, opts_.refine_iterations, &domain_checks_))
        return remember(key, u);
    }
    const auto& pool = g_.thin() ? seeds_ : domain_;
    double best = kInf;
    const Vector* best_seed = nullptr;
    for (const Vector& u : pool) {
      ++domain_checks_;
      std::copy(u.begin(), u.end(), z.begin());
      const double viol = violation(z);
      if (viol < best) best = viol, best_seed = &u;
    }
    if (best_seed != nullptr) {
      Vector u = *best_seed;
      if (refine_in_ball(g_, q_.x, q_.lambda, v, u, opts_.tol_eq, opts_.refine_iterations, &domain_checks_))
        return remember(key, u);
    }
    return false;
  }

  double violation(const Vector& z) const {
    std::vector<double> r;
    BranchPath path;
    g_.residuals(z, r, path);
    double s = 0.0;
    for (double x : r) s += x * x;
    return s;
  }

  bool remember(const std::vector<long>& key, const Vector& u) {
    solutions_[key] = u;
    return true;
  }

  const G& g_;
  const ModulusQuery& q_;
  double h_;
  ModulusOptions opts_;
  RangeLattice lattice_;
  double domain_pitch_ = 0.0;
  std::vector<Vector> domain_;
  std::vector<Vector> seeds_;
  std::size_t verified_ = 0;
  std::optional<std::size_t> first_fail_;
  std::map<std::vector<long>, Vector, KeyLess> solutions_;
  std::size_t range_checks_ = 0;
  std::size_t domain_checks_ = 0;
};

}  // namespace detail

/// Brackets Sur F(x,y)(lambda) = sup{r >= 0 : y + rB in F(x + lambda B)}.
///
/// A radius r is accepted when every point of the range lattice (pitch
/// `resolution`, anchored at the origin) inside B(y, r) has a preimage in
/// B(x, lambda): first probed on neighbouring solutions and on a domain grid
/// anchored at x, then by one least-squares refinement pass. The radius is
/// located by doubling then bisection; r_lo is the largest verified lattice
/// distance below the last accepted radius (0 when nothing is covered, the
/// sup of the empty set), and r_hi = r_lo + final bisection width + resolution.
template <GraphModel G>
ModulusBracket modulus_of_surjection(const G& g, const ModulusQuery& q, double resolution,
                                     const ModulusOptions& opts = {}) {
  if (!(q.lambda > 0.0)) throw InputError("modulus: lambda must be positive");
  if (!(resolution > 0.0)) throw InputError("modulus: resolution must be positive");
  if (q.x.size() != g.domain_dim() || q.y.size() != g.range_dim()) throw InputError("modulus: query dimension mismatch");
  const double r_max = opts.r_max > 0.0 ? opts.r_max : g.sampling_box().slice(g.domain_dim(), g.range_dim()).diameter();
  if (resolution > r_max) throw InputError("modulus: resolution coarser than the range; the range grid is empty");
  detail::ModulusSearch<G> search(g, q, resolution, opts);
  return search.run();
}

// ---------------------------------------------------------------------------
// Rate of surjection / metric regularity
// ---------------------------------------------------------------------------

struct RateOptions {
  double delta0 = 0.5;
  int levels = 6;
  /// Range-grid pitch as a fraction of the level radius; 0 picks 1/64 for
  /// m = 1 and 1/32 for m >= 2, where the range grid is quadratically larger.
  double resolution_fraction = 0.0;
  /// Local graph samples per level, drawn in cubes of radii delta, delta/4,
  /// delta/16, ... so that points very close to the center are represented.
  int samples_per_level = 4;
  double tol_eq = 1e-9;
  /// Relaxation used to decide whether the center lies in the graph closure.
  double closure_tol = 1e-6;
  /// Also query the center when it is only in the closure of the graph.
  bool closure_variant = false;
  /// Research flag: take lambda -> 0 first at each point (smallest lambda of
  /// the schedule only) before the infimum over points.
  bool iterated_liminf = false;
  /// Fold each level into the previous one (min). Off by default: the
  /// infimum over a larger neighbourhood bounds the smaller one from below,
  /// so a running minimum freezes the coarsest level.
  bool running_minimum = false;
  /// Values above this are not resolved; a level reports the ceiling when
  /// nothing falls below it.
  double ceiling = kInf;
  double zero_tol = 1e-6;
  ModulusOptions modulus;
};

struct RegularityEstimate {
  std::vector<double> deltas;
  std::vector<double> values;
  std::vector<std::size_t> points_per_level;
  double sur_estimate = 0.0;
  double reg_estimate = kInf;
};

/// Geometric schedule delta0 * 2^-k, k = 0 .. levels-1.
inline std::vector<double> geometric_schedule(double delta0, int levels) {
  if (!(delta0 > 0.0) || levels <= 0) throw InputError("schedule needs delta0 > 0 and at least one level");
  std::vector<double> s;
  for (int k = 0; k < levels; ++k) s.push_back(std::ldexp(delta0, -k));
  return s;
}

inline double regularity_from_surjection(double sur, double zero_tol = 1e-6) {
  return sur <= zero_tol ? kInf : 1.0 / sur;
}

/// reg F = 1 / sur F, +inf when sur is zero within tolerance.
inline double regularity_rate(const RegularityEstimate& est, double zero_tol = 1e-6) {
  return regularity_from_surjection(est.sur_estimate, zero_tol);
}

/// Approximates sur F(xbar|ybar), the liminf of Sur F(x,y)(lambda)/lambda as
/// (x,y) -> (xbar,ybar) along the graph and lambda -> 0+. For each radius
/// delta_k of the schedule the level value is the minimum of r_hi/lambda over
/// graph points within delta_k and lambda in {delta_k, delta_k/2, delta_k/4}.
/// The estimate is the value at the finest level.
template <GraphModel G>
RegularityEstimate surjection_rate(const G& g, const Vector& xbar, const Vector& ybar, std::span<const double> schedule,
                                   const std::function<double(double)>& resolution_rule, std::uint64_t seed,
                                   const RateOptions& opts = {}) {
  const std::size_t n = g.domain_dim();
  const std::size_t m = g.range_dim();
  if (xbar.size() != n || ybar.size() != m) throw InputError("surjection_rate: point dimension mismatch");
  if (schedule.empty()) throw InputError("surjection_rate: empty schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0)) throw InputError("surjection_rate: schedule must be positive");
    if (k > 0 && !(schedule[k] < schedule[k - 1])) throw InputError("surjection_rate: schedule must decrease strictly");
  }
  GraphPoint center{xbar, ybar};
  const Vector zc = center.joined();
  if (!g.contains_relaxed(zc, opts.closure_tol))
    throw InputError("surjection_rate: point is not in the closure of the graph");
  const bool on_graph = g.contains(zc, opts.tol_eq);
  const double dim_scale = std::sqrt(static_cast<double>(n + m));

  RegularityEstimate est;
  for (std::size_t level = 0; level < schedule.size(); ++level) {
    const double delta = schedule[level];
    const double h = resolution_rule(delta);
    std::vector<GraphPoint> points;
    if (on_graph || opts.closure_variant) points.push_back(center);
    for (int s = 0; s < opts.samples_per_level; ++s) {
      const double radius = std::ldexp(delta, -2 * (s % 8));
      SamplingOptions so;
      so.box = Box::cube(zc, radius / dim_scale);
      so.min_trials = 64;
      so.max_trials = 64;
      so.batch = 64;
      so.stream = 0x5ca1ab1eULL + level * 1000 + static_cast<std::uint64_t>(s);
      auto got = sample_graph_partial(g, 1, seed, opts.tol_eq, so);
      for (auto& p : got)
        if (distance(p.joined(), zc) <= delta) points.push_back(std::move(p));
    }
    std::vector<double> lambdas = opts.iterated_liminf ? std::vector<double>{schedule.back() / 4.0}
                                                       : std::vector<double>{delta, delta / 2.0, delta / 4.0};
    const double query_h = opts.iterated_liminf ? resolution_rule(schedule.back()) : h;
    double level_min = kInf;
    for (const auto& p : points)
      for (double lambda : lambdas) {
        ModulusOptions mo = opts.modulus;
        mo.tol_eq = opts.tol_eq;
        mo.stop_ratio = std::min(level_min, opts.ceiling);
        const ModulusQuery q{p.x, p.y, lambda};
        const ModulusBracket b = modulus_of_surjection(g, q, query_h, mo);
        if (!b.truncated) level_min = std::min(level_min, b.r_hi / lambda);
      }
    if (points.empty()) {
      level_min = kInf;
    } else if (level_min == kInf && opts.ceiling < kInf) {
      level_min = opts.ceiling;
    }
    if (opts.running_minimum && !est.values.empty()) level_min = std::min(level_min, est.values.back());
    est.deltas.push_back(delta);
    est.values.push_back(level_min);
    est.points_per_level.push_back(points.size());
  }
  if (est.points_per_level.back() == 0)
    throw DiagnosticError("isolated-point", "no graph sample within the smallest neighbourhood radius");
  est.sur_estimate = est.values.back();
  est.reg_estimate = regularity_from_surjection(est.sur_estimate, opts.zero_tol);
  return est;
}

inline double default_resolution_fraction(std::size_t m, const RateOptions& opts) {
  if (opts.resolution_fraction > 0.0) return opts.resolution_fraction;
  return m <= 1 ? 1.0 / 64.0 : 1.0 / 32.0;
}

/// Default geometric schedule and resolution rule h = resolution_fraction * delta.
template <GraphModel G>
RegularityEstimate surjection_rate(const G& g, const Vector& xbar, const Vector& ybar, std::uint64_t seed = 0,
                                   const RateOptions& opts = {}) {
  const auto schedule = geometric_schedule(opts.delta0, opts.levels);
  const double fraction = default_resolution_fraction(g.range_dim(), opts);
  return surjection_rate(g, xbar, ybar, schedule, [fraction](double d) { return fraction * d; }, seed, opts);
}

// ---------------------------------------------------------------------------
// Exact linear / Jacobian formulas
// ---------------------------------------------------------------------------

/// inf over unit y* of |A^T y*|: the smallest singular value when A is onto
/// capable (m <= n), and 0 when m > n.
inline double linear_surjection_rate(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw InputError("linear_surjection_rate: empty matrix");
  if (a.rows() > a.cols()) return 0.0;
  return singular_values(a).back();
}

/// sur F(x) = sur (grad F(x)) for a C^1 map.
inline double jacobian_rate(const PolyMap& f, std::span<const double> x) { return linear_surjection_rate(jacobian(f, x)); }

/// Jacobians with the partial derivatives precomputed; for repeated evaluation.
class JacobianEvaluator {
 public:
  explicit JacobianEvaluator(const PolyMap& f) : n_(f.n), m_(f.m), d_(f.derivatives()) {}
  Matrix operator()(std::span<const double> x) const {
    if (x.size() != n_) throw InputError("jacobian: point has wrong dimension");
    Matrix j(m_, n_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < n_; ++k) j(i, k) = d_[i][k](x);
    return j;
  }
  double rate(std::span<const double> x) const { return linear_surjection_rate((*this)(x)); }

 private:
  std::size_t n_, m_;
  std::vector<std::vector<Polynomial>> d_;
};

// ---------------------------------------------------------------------------
// Slopes
// ---------------------------------------------------------------------------

struct SlopeEstimate {
  std::vector<double> radii;
  std::vector<double> values;
  double slope = 0.0;
};

/// Slope |grad f|(x): per radius, the largest (f(x) - f(u))^+ / |x - u| over
/// samples u strictly inside B(x, radius). Distances are drawn uniformly in
/// (0, radius) so that short steps are well represented.
template <class Fn>
SlopeEstimate function_slope(const Fn& f, std::span<const double> x, std::span<const double> radii, std::size_t samples,
                             std::uint64_t seed) {
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw InputError("function_slope: radii must be positive");
    if (k > 0 && !(radii[k] < radii[k - 1])) throw InputError("function_slope: radii must decrease");
  }
  const std::size_t n = x.size();
  const double fx = f(x);
  SlopeEstimate est;
  std::vector<double> dir(n), u(n);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    double best = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      CounterRng rng(seed, 0x510e + k, i);
      rng.direction(dir);
      double t = rng.uniform();
      if (t <= 0.0) continue;
      const double step = radii[k] * t;
      for (std::size_t j = 0; j < n; ++j) u[j] = x[j] + step * dir[j];
      const double dist = distance(x, u);
      if (!(dist > 0.0) || !(dist < radii[k])) continue;
      best = std::max(best, (fx - f(std::span<const double>(u))) / dist);
    }
    est.radii.push_back(radii[k]);
    est.values.push_back(std::max(best, 0.0));
  }
  est.slope = est.values.empty() ? 0.0 : est.values.back();
  return est;
}

/// Scalar polynomial overload (m = 1).
inline SlopeEstimate function_slope(const PolyMap& f, std::span<const double> x, std::span<const double> radii,
                                    std::size_t samples, std::uint64_t seed) {
  if (f.m != 1) throw InputError("function_slope: expected a scalar map");
  const Polynomial& p = f.components.front();
  return function_slope([&p](std::span<const double> u) { return p(u); }, x, radii, samples, seed);
}

struct MapSlopeOptions {
  /// Distance of the sampled targets y from F(x).
  double range_radius = 0.1;
  std::size_t domain_samples = 256;
};

/// Sl F(x) = inf over y != F(x) of the slope of u -> |y - F(u)| at x, with y
/// sampled on the sphere of radius range_radius around F(x).
inline SlopeEstimate map_slope(const PolyMap& f, std::span<const double> x, std::size_t range_samples,
                               std::span<const double> radii, std::uint64_t seed, const MapSlopeOptions& opts = {}) {
  if (x.size() != f.n) throw InputError("map_slope: point dimension mismatch");
  if (range_samples == 0) throw InputError("map_slope: need at least one range sample");
  const Vector fx = f(x);
  SlopeEstimate best;
  std::vector<double> e(f.m);
  for (std::size_t i = 0; i < range_samples; ++i) {
    CounterRng rng(seed, 0x5107e, i);
    rng.direction(e);
    Vector y(f.m);
    for (std::size_t k = 0; k < f.m; ++k) y[k] = fx[k] + opts.range_radius * e[k];
    auto fy = [&](std::span<const double> u) { return distance(y, f(u)); };
    SlopeEstimate s = function_slope(fy, x, radii, opts.domain_samples, seed + 0x9e37 * (i + 1));
    if (i == 0) {
      best = std::move(s);
    } else {
      for (std::size_t k = 0; k < best.values.size(); ++k) best.values[k] = std::min(best.values[k], s.values[k]);
    }
  }
  best.slope = best.values.empty() ? 0.0 : best.values.back();
  return best;
}

}  // namespace regvar
