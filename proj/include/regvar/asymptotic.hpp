#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "critical.hpp"
#include "error.hpp"
#include "map_spec.hpp"
#include "parallel.hpp"
#include "regularity.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace regvar {

using ScalarFn = std::function<double(double)>;

/// Radial change of variables u = phi(|x|) x/|x| and its inverse, with the
/// weight eta = 1 / phi'.
struct CompactificationSpec {
  std::string name;
  ScalarFn phi;
  ScalarFn psi;
  ScalarFn eta;
  ScalarFn dphi;
  ScalarFn dpsi;
};

/// phi(t) = t/(1+t), psi(s) = s/(1-s), eta(t) = (1+t)^2.
inline CompactificationSpec default_compactification() {
  return {"phi-default",
          [](double t) { return t / (1.0 + t); },
          [](double s) { return s / (1.0 - s); },
          [](double t) { return (1.0 + t) * (1.0 + t); },
          [](double t) { return 1.0 / ((1.0 + t) * (1.0 + t)); },
          [](double s) { return 1.0 / ((1.0 - s) * (1.0 - s)); }};
}

/// A weight t -> eta(t) for the asymptotic scan, with a name for reports.
struct EtaFunction {
  std::string name;
  ScalarFn eta;
};

inline EtaFunction linear_eta() {
  return {"linear", [](double t) { return t; }};
}

inline EtaFunction default_eta() {
  const auto c = default_compactification();
  return {c.name, c.eta};
}

/// eta(t) = sum_k coeffs[k] t^k.
inline EtaFunction polynomial_eta(std::string name, std::vector<double> coeffs) {
  if (coeffs.empty()) throw InputError("eta polynomial needs coefficients");
  return {std::move(name), [c = std::move(coeffs)](double t) {
            double v = 0.0;
            for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
            return v;
          }};
}

/// Trapezoid estimate of the integral of 1/eta over [0, t_max] on a geometric grid.
inline double inverse_eta_integral(const ScalarFn& eta, double t_max, std::size_t steps = 4096) {
  if (!(t_max > 0.0)) return 0.0;
  const double t0 = std::min(1e-6, t_max);
  double total = t0 / eta(0.5 * t0);
  const double ratio = std::pow(t_max / t0, 1.0 / static_cast<double>(steps));
  double a = t0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double b = a * ratio;
    total += 0.5 * (b - a) * (1.0 / eta(a) + 1.0 / eta(b));
    a = b;
  }
  return total;
}

/// The map G(u) = F(psi(|u|) u/|u|) on the open unit ball, as a graph over (u, y).
template <GraphModel G>
class CompactifiedMap {
 public:
  CompactifiedMap(const G& base, CompactificationSpec c, std::optional<Box> range_box = std::nullopt)
      : base_(base), c_(std::move(c)) {
    Box u_box;
    for (std::size_t i = 0; i < base.domain_dim(); ++i) u_box.sides.push_back({-1.0, 1.0});
    box_ = Box::concat(u_box, range_box ? *range_box : base.sampling_box().slice(base.domain_dim(), base.range_dim()));
  }

  /// x = psi(|u|) u/|u|; DomainError unless 0 < |u| < 1.
  Vector to_x(std::span<const double> u) const {
    const double s = norm(u);
    if (!(s > 0.0) || !(s < 1.0)) throw DomainError("compactified point must satisfy 0 < |u| < 1");
    return scaled(u, c_.psi(s) / s);
  }

  /// u = phi(|x|) x/|x|; DomainError at x = 0.
  Vector to_u(std::span<const double> x) const {
    const double t = norm(x);
    if (!(t > 0.0)) throw DomainError("the origin has no compactified direction");
    return scaled(x, c_.phi(t) / t);
  }

  /// Membership of (u, y) in the graph of G; throws outside the open ball.
  bool membership(std::span<const double> u, std::span<const double> y, double tol_eq) const {
    Vector z = to_x(u);
    z.insert(z.end(), y.begin(), y.end());
    return base_.contains(z, tol_eq);
  }

  std::size_t domain_dim() const { return base_.domain_dim(); }
  std::size_t range_dim() const { return base_.range_dim(); }
  Box sampling_box() const { return box_; }
  /// Points outside the open unit ball are simply not members here.
  bool contains(std::span<const double> z, double tol_eq) const {
    const auto x = lift(z, false);
    return x && base_.contains(*x, tol_eq);
  }
  bool contains_relaxed(std::span<const double> z, double tol) const {
    const auto x = lift(z, false);
    return x && base_.contains_relaxed(*x, tol);
  }
  bool thin() const { return base_.thin(); }
  bool has_equality() const { return base_.has_equality(); }
  /// Residuals are taken at the radially clamped point outside the ball.
  void residuals(std::span<const double> z, std::vector<double>& out, BranchPath& path) const {
    base_.residuals(*lift(z, true), out, path);
  }

  const CompactificationSpec& spec() const { return c_; }

 private:
  static Vector scaled(std::span<const double> v, double s) {
    Vector out(v.begin(), v.end());
    for (double& x : out) x *= s;
    return out;
  }

  std::optional<Vector> lift(std::span<const double> z, bool clamp) const {
    const std::size_t n = base_.domain_dim();
    std::span<const double> u = z.subspan(0, n);
    double s = norm(u);
    Vector dir(u.begin(), u.end());
    if (!(s > 0.0) || !(s < 1.0)) {
      if (!clamp) return std::nullopt;
      if (!(s > 0.0)) {
        dir.assign(n, 0.0);
        dir[0] = 1.0;
        s = 1e-12;
      } else {
        for (double& v : dir) v /= s;
        s = 1.0 - 1e-12;
      }
    } else {
      for (double& v : dir) v /= s;
    }
    Vector x = scaled(dir, c_.psi(s));
    x.insert(x.end(), z.begin() + static_cast<std::ptrdiff_t>(n), z.end());
    return x;
  }

  const G& base_;
  CompactificationSpec c_;
  Box box_;
};

// ---------------------------------------------------------------------------
// Radial rescaling bound
// ---------------------------------------------------------------------------

/// Graph of L(x) = H(rho(x) x).
inline MapSpec radial_rescale_map(const MapSpec& h, const Polynomial& rho, const Box& domain_box) {
  if (rho.num_vars() != h.n) throw InputError("rho must be a function of the domain variables");
  if (domain_box.dims() != h.n) throw InputError("domain box has wrong dimension");
  const std::size_t d = h.n + h.m;
  std::vector<std::size_t> lift(h.n);
  for (std::size_t j = 0; j < h.n; ++j) lift[j] = j;
  const Polynomial r = rho.embed(d, lift);
  std::vector<Polynomial> repl;
  for (std::size_t j = 0; j < h.n; ++j) repl.push_back(r * Polynomial::variable(d, j));
  for (std::size_t i = 0; i < h.m; ++i) repl.push_back(Polynomial::variable(d, h.n + i));
  Formula graph = h.graph.map_polynomials([&](const Polynomial& p) { return p.substitute(repl); });
  return MapSpec(h.name + "(rho x)", h.n, h.m, std::move(graph), Box::concat(domain_box, h.box.slice(h.n, h.m)));
}

/// sur L(x|y) <= (rho(x) + |grad rho(x)| |x|) sur H(rho(x) x | y) for
/// L(x) = H(rho(x) x), at graph points (x, y) of L. lhs = sur L, rhs = bound.
inline CalculusReport check_prop7_bound(const MapSpec& h, const Polynomial& rho, const Box& domain_box,
                                        const std::vector<GraphPoint>& points, double tol, std::uint64_t seed = 0,
                                        const RateOptions& opts = {}) {
  const MapSpec l = radial_rescale_map(h, rho, domain_box);
  CalculusReport report{"radial", tol, {}};
  for (const auto& p : points) {
    const double r = rho(p.x);
    if (!(r > 0.0)) throw InputError("rho must be positive at the checked points");
    Vector grad(h.n);
    for (std::size_t j = 0; j < h.n; ++j) grad[j] = rho.derivative(j)(p.x);
    Vector hx = p.x;
    for (double& v : hx) v *= r;
    const double sur_l = surjection_rate(l, p.x, p.y, seed, opts).sur_estimate;
    const double bound = (r + norm(grad) * norm(p.x)) * surjection_rate(h, hx, p.y, seed, opts).sur_estimate;
    report.rows.push_back({p, sur_l, bound, std::nan(""), sur_l <= bound + tol});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Compactification bound sur G <= 3 eta sur F
// ---------------------------------------------------------------------------

struct CompactificationBoundRow {
  GraphPoint point;
  double norm_x = 0.0;
  double sur_g = 0.0;
  double sur_f = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct CompactificationBoundReport {
  std::vector<CompactificationBoundRow> rows;
  /// Smallest |x| from which every checked point (in order of |x|) passes;
  /// +inf when the largest one fails.
  double onset = std::numeric_limits<double>::infinity();
};

/// Compares sur G(u|y) with 3 eta(|x|) sur F(x|y) at graph points of F. The
/// schedule for G is scaled to the distance of u from the unit sphere.
template <GraphModel G>
CompactificationBoundReport check_compactification_bound(const G& f, const CompactificationSpec& c,
                                                         std::vector<GraphPoint> points, double tol,
                                                         std::uint64_t seed = 0, const RateOptions& opts = {}) {
  CompactifiedMap<G> g(f, c);
  std::sort(points.begin(), points.end(),
            [](const GraphPoint& a, const GraphPoint& b) { return norm(a.x) < norm(b.x); });
  CompactificationBoundReport report;
  for (const auto& p : points) {
    const double t = norm(p.x);
    const Vector u = g.to_u(p.x);
    RateOptions go = opts;
    go.delta0 = std::min(opts.delta0, 0.25 * (1.0 - norm(u)));
    CompactificationBoundRow row{p, t, 0.0, 0.0, 0.0, false};
    row.sur_g = surjection_rate(g, u, p.y, seed, go).sur_estimate;
    row.sur_f = surjection_rate(f, p.x, p.y, seed, opts).sur_estimate;
    row.bound = 3.0 * c.eta(t) * row.sur_f;
    row.pass = row.sur_g <= row.bound + tol;
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = report.rows.size(); i-- > 0;) {
    if (!report.rows[i].pass) break;
    report.onset = report.rows[i].norm_x;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Asymptotically critical values
// ---------------------------------------------------------------------------

struct Shell {
  double lo = 0.0;
  double hi = 0.0;
};

/// [2^k, 2^(k+1)] for k = first .. last.
inline std::vector<Shell> geometric_shells(int first = 2, int last = 7) {
  std::vector<Shell> s;
  for (int k = first; k <= last; ++k) s.push_back({std::ldexp(1.0, k), std::ldexp(1.0, k + 1)});
  return s;
}

struct ShellSample {
  std::size_t shell = 0;
  GraphPoint point;
  double rate = 0.0;
  double weighted = 0.0;
};

struct AsymptoticCandidate {
  Vector y;
  /// Per-shell minimum of eta(|x|) * rate within the cluster (+inf if absent).
  std::vector<double> decay_trace;
  std::size_t cluster = 0;
};

struct ShellRow {
  std::size_t shell = 0;
  std::size_t cluster = 0;
  double min_weighted = 0.0;
};

struct AsymptoticScanResult {
  std::vector<AsymptoticCandidate> candidates;
  std::vector<Shell> shells;
  std::string eta_name;
  double threshold = 0.0;
  std::vector<ShellRow> table;
  /// Shells that produced no sample.
  std::vector<std::size_t> empty_shells;
};

struct AsymptoticOptions {
  double threshold = 0.02;
  double cluster_radius = 0.05;
  /// Samples whose weighted rate is below watch_factor * threshold enter the clustering.
  double watch_factor = 4.0;
  /// Number of trailing shells whose minima must not increase.
  std::size_t trailing = 3;
  double tol_eq = 1e-9;
  RateOptions rate;
};

namespace detail {

inline void check_shells(const std::vector<Shell>& shells) {
  if (shells.empty()) throw InputError("asymptotic scan: no shells");
  for (std::size_t i = 0; i < shells.size(); ++i) {
    if (!(shells[i].lo >= 0.0 && shells[i].hi > shells[i].lo)) throw InputError("asymptotic scan: bad shell");
    if (i > 0 && !(shells[i].lo >= shells[i - 1].hi)) throw InputError("asymptotic scan: shells must increase");
  }
}

/// x with |x| uniform in [lo, hi] and a uniform direction.
inline Vector annulus_point(std::size_t n, const Shell& s, CounterRng& rng) {
  Vector dir(n);
  rng.direction(dir);
  const double t = rng.uniform(s.lo, s.hi);
  for (double& v : dir) v *= t;
  return dir;
}

inline AsymptoticScanResult cluster_candidates(const std::vector<ShellSample>& samples, std::size_t shell_count,
                                               const AsymptoticOptions& opts) {
  AsymptoticScanResult out;
  std::vector<const ShellSample*> low;
  for (const auto& s : samples)
    if (s.weighted < opts.watch_factor * opts.threshold) low.push_back(&s);
  std::vector<Vector> ys;
  for (const auto* s : low) ys.push_back(s->point.y);
  const auto groups = link_components(ys, opts.cluster_radius);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::vector<double> trace(shell_count, inf);
    std::vector<const ShellSample*> best(shell_count, nullptr);
    for (std::size_t i : groups[c]) {
      const auto* s = low[i];
      if (s->weighted < trace[s->shell]) trace[s->shell] = s->weighted, best[s->shell] = s;
    }
    for (std::size_t k = 0; k < shell_count; ++k)
      if (best[k] != nullptr) out.table.push_back({k, c, trace[k]});
    const std::size_t need = std::min(opts.trailing, shell_count);
    bool ok = trace.back() < opts.threshold;
    for (std::size_t k = shell_count - need; ok && k < shell_count; ++k) {
      if (trace[k] == inf) ok = false;
      if (k > shell_count - need && trace[k] > trace[k - 1]) ok = false;
    }
    if (ok) out.candidates.push_back({best.back()->point.y, trace, c});
  }
  return out;
}

}  // namespace detail

/// Scan of a polynomial map: per shell, x uniform in the annulus (radially),
/// rate = Jacobian rate, weighted by eta(|x|).
inline AsymptoticScanResult asymptotic_scan(const PolyMap& f, const EtaFunction& eta, const std::vector<Shell>& shells,
                                            std::size_t per_shell_budget, std::uint64_t seed,
                                            const AsymptoticOptions& opts = {}) {
  detail::check_shells(shells);
  const JacobianEvaluator jac(f);
  std::vector<ShellSample> samples;
  for (std::size_t k = 0; k < shells.size(); ++k) {
    auto batch = parallel_map(per_shell_budget, [&](std::size_t i) {
      CounterRng rng(seed, 0xa5e000 + k, i);
      Vector x = detail::annulus_point(f.n, shells[k], rng);
      const double rate = jac.rate(x);
      Vector y = f(x);
      const double w = eta.eta(norm(x)) * rate;
      return ShellSample{k, GraphPoint{std::move(x), std::move(y)}, rate, w};
    });
    samples.insert(samples.end(), batch.begin(), batch.end());
  }
  auto out = detail::cluster_candidates(samples, shells.size(), opts);
  out.shells = shells;
  out.eta_name = eta.name;
  out.threshold = opts.threshold;
  if (per_shell_budget == 0)
    for (std::size_t k = 0; k < shells.size(); ++k) out.empty_shells.push_back(k);
  return out;
}

/// Scan of a set-valued map: per shell, graph samples with |x| in the
/// annulus; rate from surjection_rate with the range pitch scaled by
/// threshold / eta(R_hi) and the search capped at
/// watch_factor * threshold / eta(|x|), so tiny rates stay resolved.
template <GraphModel G>
AsymptoticScanResult asymptotic_scan(const G& g, const EtaFunction& eta, const std::vector<Shell>& shells,
                                     std::size_t per_shell_budget, std::uint64_t seed,
                                     const AsymptoticOptions& opts = {}) {
  detail::check_shells(shells);
  const std::size_t n = g.domain_dim();
  const Box ybox = g.sampling_box().slice(n, g.range_dim());
  std::vector<ShellSample> samples;
  std::vector<std::size_t> empty;
  for (std::size_t k = 0; k < shells.size(); ++k) {
    const Shell s = shells[k];
    Box xbox;
    for (std::size_t i = 0; i < n; ++i) xbox.sides.push_back({-s.hi, s.hi});
    SamplingOptions so;
    so.box = Box::concat(xbox, ybox);
    so.stream = 0xa5e100 + k;
    const std::size_t want = per_shell_budget;
    so.max_trials = std::max<std::size_t>(so.min_trials, want * 64);
    // Oversample the cube, keep the annulus.
    auto pts = sample_graph_partial(g, want * 8, seed, opts.tol_eq, so);
    std::vector<GraphPoint> kept;
    for (auto& p : pts) {
      const double t = norm(p.x);
      if (t >= s.lo && t <= s.hi) kept.push_back(std::move(p));
      if (kept.size() == want) break;
    }
    if (kept.empty()) {
      empty.push_back(k);
      continue;
    }
    const double eta_hi = eta.eta(s.hi);
    RateOptions ro = opts.rate;
    ro.tol_eq = opts.tol_eq;
    const double fraction = default_resolution_fraction(g.range_dim(), ro) * opts.threshold / eta_hi;
    const auto schedule = geometric_schedule(ro.delta0, ro.levels);
    auto batch = parallel_map(kept.size(), [&](std::size_t i) {
      const auto& p = kept[i];
      const double e = eta.eta(norm(p.x));
      RateOptions local = ro;
      local.ceiling = std::min(ro.ceiling, opts.watch_factor * opts.threshold / e);
      const double rate =
          surjection_rate(g, p.x, p.y, schedule, [fraction](double d) { return fraction * d; }, seed, local)
              .sur_estimate;
      return ShellSample{k, p, rate, e * rate};
    });
    samples.insert(samples.end(), batch.begin(), batch.end());
  }
  auto out = detail::cluster_candidates(samples, shells.size(), opts);
  out.shells = shells;
  out.eta_name = eta.name;
  out.threshold = opts.threshold;
  out.empty_shells = std::move(empty);
  return out;
}

}  // namespace regvar
