#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "map_spec.hpp"
#include "regularity.hpp"

namespace regvar {

struct CalculusRow {
  GraphPoint point;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Second inequality of a two-sided check (chain-rule upper bound); NaN otherwise.
  double upper = std::nan("");
  bool pass = false;
};

struct CalculusReport {
  std::string rule;
  double tol = 0.0;
  std::vector<CalculusRow> rows;

  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return !rows.empty();
  }
};

namespace detail {

/// Range of sum_j a_j x_j over a box, by interval arithmetic.
inline Interval linear_range(std::span<const double> a, const Box& box) {
  Interval out{0.0, 0.0};
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double p = a[j] * box.sides[j].lo;
    const double q = a[j] * box.sides[j].hi;
    out.lo += std::min(p, q);
    out.hi += std::max(p, q);
  }
  return out;
}

}  // namespace detail

/// Graph of F = H + A: (x, y) in Graph F iff (x, y - Ax) in Graph H.
inline MapSpec sum_map(const MapSpec& h, const Matrix& a) {
  if (a.rows() != h.m || a.cols() != h.n) throw InputError("sum rule: A must be m x n");
  const std::size_t d = h.n + h.m;
  std::vector<Polynomial> repl;
  for (std::size_t j = 0; j < h.n; ++j) repl.push_back(Polynomial::variable(d, j));
  for (std::size_t i = 0; i < h.m; ++i) {
    Polynomial p = Polynomial::variable(d, h.n + i);
    for (std::size_t j = 0; j < h.n; ++j)
      if (a(i, j) != 0.0) p = p - Polynomial::variable(d, j, a(i, j));
    repl.push_back(std::move(p));
  }
  Formula graph = h.graph.map_polynomials([&](const Polynomial& p) { return p.substitute(repl); });
  const Box xbox = h.box.slice(0, h.n);
  Box ybox = h.box.slice(h.n, h.m);
  for (std::size_t i = 0; i < h.m; ++i) {
    std::vector<double> row(h.n);
    for (std::size_t j = 0; j < h.n; ++j) row[j] = a(i, j);
    const Interval shift = detail::linear_range(row, xbox);
    ybox.sides[i].lo += shift.lo;
    ybox.sides[i].hi += shift.hi;
  }
  return MapSpec(h.name + "+A", h.n, h.m, std::move(graph), Box::concat(xbox, ybox));
}

/// Graph of F = H o G by substituting G into the x-variables of H. The
/// domain box of F is given explicitly since G's image box is not tracked.
inline MapSpec compose_map(const MapSpec& h, const PolyMap& g, const Box& domain_box) {
  if (g.m != h.n) throw InputError("chain rule: range of G must be the domain of H");
  if (domain_box.dims() != g.n) throw InputError("chain rule: domain box has wrong dimension");
  const std::size_t d = g.n + h.m;
  std::vector<std::size_t> lift(g.n);
  for (std::size_t j = 0; j < g.n; ++j) lift[j] = j;
  std::vector<Polynomial> repl;
  for (const auto& c : g.components) repl.push_back(c.embed(d, lift));
  for (std::size_t i = 0; i < h.m; ++i) repl.push_back(Polynomial::variable(d, g.n + i));
  Formula graph = h.graph.map_polynomials([&](const Polynomial& p) { return p.substitute(repl); });
  return MapSpec(h.name + "oG", g.n, h.m, std::move(graph), Box::concat(domain_box, h.box.slice(h.n, h.m)));
}

/// sur (H + A)(x | y + Ax) >= sur H(x | y) - |A|_F at graph points (x, y) of H.
inline CalculusReport check_sum_rule(const MapSpec& h, const Matrix& a, const std::vector<GraphPoint>& points,
                                     double tol, std::uint64_t seed = 0, const RateOptions& opts = {}) {
  const MapSpec f = sum_map(h, a);
  const double norm_a = a.frobenius_norm();
  CalculusReport report{"sum", tol, {}};
  for (const auto& p : points) {
    Vector shifted = a.apply(p.x);
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += p.y[i];
    const double lhs = surjection_rate(f, p.x, shifted, seed, opts).sur_estimate;
    const double rhs = surjection_rate(h, p.x, p.y, seed, opts).sur_estimate - norm_a;
    report.rows.push_back({p, lhs, rhs, std::nan(""), lhs >= rhs - tol});
  }
  return report;
}

/// sur G(x) sur H(G(x)|y) <= sur F(x|y) <= |grad G(x)|_F sur H(G(x)|y) for
/// F = H o G, at points (x, y) with y in H(G(x)).
inline CalculusReport check_chain_rule(const MapSpec& h, const PolyMap& g, const Box& domain_box,
                                       const std::vector<GraphPoint>& points, double tol, std::uint64_t seed = 0,
                                       const RateOptions& opts = {}) {
  const MapSpec f = compose_map(h, g, domain_box);
  CalculusReport report{"chain", tol, {}};
  for (const auto& p : points) {
    const Vector gx = g(p.x);
    const Matrix jg = jacobian(g, p.x);
    const double sur_h = surjection_rate(h, gx, p.y, seed, opts).sur_estimate;
    const double sur_f = surjection_rate(f, p.x, p.y, seed, opts).sur_estimate;
    const double lower = linear_surjection_rate(jg) * sur_h;
    const double upper = jg.frobenius_norm() * sur_h;
    report.rows.push_back({p, lower, sur_f, upper, lower <= sur_f + tol && sur_f <= upper + tol});
  }
  return report;
}

}  // namespace regvar
