#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "error.hpp"
#include "map_spec.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace regvar {

struct SamplingOptions {
  /// Minimum acceptance rate; the trial budget is count / acceptance_floor.
  double acceptance_floor = 1e-3;
  std::size_t min_trials = 1000;
  /// Hard cap on trials regardless of the floor (0 = none).
  std::size_t max_trials = 0;
  int refine_sweeps = 60;
  std::size_t batch = 256;
  /// Replaces the spec's box for this call.
  std::optional<Box> box;
  /// Stream id mixed into the RNG key, so unrelated callers sharing a seed
  /// draw independent candidates.
  std::uint64_t stream = 0;
};

/// Projected coordinate descent on the squared residual of the graph formula.
/// Each coordinate takes a parabolic step fitted through z - s, z, z + s and is
/// clamped to the box. `proto` fixes the branch policy (e.g. a pinned first
/// disjunct) and the strict margin. Returns true once membership holds at tol_eq.
template <GraphModel G>
bool refine_coordinate(const G& g, std::vector<double>& z, const Box& box, double tol_eq, int sweeps,
                       const BranchPath& proto = {}) {
  const std::size_t d = z.size();
  std::vector<double> scratch;
  auto violation = [&](const std::vector<double>& p) {
    scratch.clear();
    BranchPath path = proto;
    g.residuals(p, scratch, path);
    double s = 0.0;
    for (double v : scratch) s += v * v;
    return s;
  };
  std::vector<double> step(d);
  for (std::size_t j = 0; j < d; ++j) step[j] = 1e-2 * box.sides[j].width();
  std::vector<double> probe = z;
  double f0 = violation(z);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    if (g.contains(z, tol_eq)) return true;
    for (std::size_t j = 0; j < d; ++j) {
      const double s = step[j];
      const double base = z[j];
      probe = z;
      probe[j] = base + s;
      const double fp = violation(probe);
      probe[j] = base - s;
      const double fm = violation(probe);
      double best_x = base;
      double best_f = f0;
      if (fp < best_f) best_f = fp, best_x = base + s;
      if (fm < best_f) best_f = fm, best_x = base - s;
      const double curvature = fp + fm - 2.0 * f0;
      if (curvature > 0.0) {
        const double t = std::clamp(-0.5 * s * (fp - fm) / curvature, -8.0 * s, 8.0 * s);
        probe[j] = base + t;
        const double ft = violation(probe);
        if (ft < best_f) best_f = ft, best_x = base + t;
      }
      best_x = std::clamp(best_x, box.sides[j].lo, box.sides[j].hi);
      if (best_x != base) {
        probe[j] = best_x;
        const double fc = violation(probe);
        if (fc < f0) {
          step[j] = std::max(std::abs(best_x - base), 1e-15 * (1.0 + std::abs(base)));
          z[j] = best_x;
          f0 = fc;
          continue;
        }
      }
      step[j] = std::max(step[j] * 0.25, 1e-15 * (1.0 + std::abs(base)));
    }
  }
  return g.contains(z, tol_eq);
}

/// Draws candidate `index` and returns it if it lands on the graph. When the
/// formula has equality atoms a non-member is refined toward one top-level
/// disjunct chosen by the RNG, so lower-dimensional pieces of a union (an
/// isolated point, say) are reached as well as the dominant piece.
template <GraphModel G>
std::optional<std::vector<double>> sample_candidate(const G& g, const Box& box, std::uint64_t seed, std::uint64_t stream,
                                                    std::uint64_t index, double tol_eq, int sweeps) {
  CounterRng rng(seed, stream, index);
  std::vector<double> z(box.dims());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.uniform(box.sides[i].lo, box.sides[i].hi);
  if (g.contains(z, tol_eq)) return z;
  if (!g.has_equality()) return std::nullopt;
  BranchPath proto;
  proto.pin = static_cast<std::size_t>(rng.next_u64() >> 1);
  proto.strict_margin = 1e-9;
  if (refine_coordinate(g, z, box, tol_eq, sweeps, proto)) return z;
  return std::nullopt;
}

/// Samples up to `count` graph points; never throws for sparsity. The result
/// depends only on (graph, count, seed, tol_eq, options).
template <GraphModel G>
std::vector<GraphPoint> sample_graph_partial(const G& g, std::size_t count, std::uint64_t seed, double tol_eq,
                                             const SamplingOptions& opts = {}) {
  std::vector<GraphPoint> out;
  if (count == 0) return out;
  const Box box = opts.box ? *opts.box : g.sampling_box();
  if (box.dims() != g.domain_dim() + g.range_dim()) throw InputError("sampling box has wrong dimension");
  std::size_t budget = std::max<std::size_t>(
      opts.min_trials, static_cast<std::size_t>(std::ceil(static_cast<double>(count) / opts.acceptance_floor)));
  if (opts.max_trials > 0) budget = std::min(budget, opts.max_trials);
  const std::size_t batch = std::max<std::size_t>(1, opts.batch);
  for (std::size_t start = 0; start < budget && out.size() < count; start += batch) {
    const std::size_t len = std::min(batch, budget - start);
    auto results = parallel_map(len, [&](std::size_t i) {
      return sample_candidate(g, box, seed, opts.stream, start + i, tol_eq, opts.refine_sweeps);
    });
    for (auto& r : results) {
      if (!r) continue;
      out.push_back(GraphPoint::split(*r, g.domain_dim()));
      if (out.size() == count) break;
    }
  }
  return out;
}

/// Exactly `count` graph points, or SparseGraphError carrying the number reached.
template <GraphModel G>
std::vector<GraphPoint> sample_graph(const G& g, std::size_t count, std::uint64_t seed, double tol_eq,
                                     const SamplingOptions& opts = {}) {
  auto pts = sample_graph_partial(g, count, seed, tol_eq, opts);
  if (pts.size() < count) throw SparseGraphError(pts.size(), count);
  return pts;
}

}  // namespace regvar
