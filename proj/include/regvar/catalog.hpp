#pragma once

#include <string>
#include <vector>

#include "formula.hpp"
#include "linalg.hpp"
#include "map_spec.hpp"
#include "polynomial.hpp"

// Example maps used by the tests, the CLI samples and the acceptance run.
namespace regvar::catalog {

inline Polynomial var(std::size_t num_vars, std::size_t i) { return Polynomial::variable(num_vars, i); }

struct PolyEntry {
  std::string name;
  PolyMap map;
  Box domain;
  Box range;

  MapSpec spec() const { return graph_spec(map, Box::concat(domain, range), name); }
};

inline Box cube(std::size_t dims, double lo, double hi) {
  Box b;
  for (std::size_t i = 0; i < dims; ++i) b.sides.push_back({lo, hi});
  return b;
}

inline PolyEntry square() { return {"square", PolyMap({var(1, 0).pow(2)}), cube(1, -1, 1), Box{{{-0.5, 1.5}}}}; }

inline PolyEntry paraboloid() {
  return {"paraboloid", PolyMap({var(2, 0).pow(2) + var(2, 1).pow(2)}), cube(2, -1, 1), Box{{{-0.5, 2.5}}}};
}

inline PolyEntry cubic() {
  return {"cubic", PolyMap({var(1, 0).pow(3) - 3.0 * var(1, 0)}), cube(1, -2, 2), Box{{{-3.0, 3.0}}}};
}

/// (x1, x2^2): critical values on the line y2 = 0.
inline PolyEntry fold() {
  return {"fold", PolyMap({var(2, 0), var(2, 1).pow(2)}), cube(2, -1, 1), Box{{{-1.5, 1.5}, {-0.5, 1.5}}}};
}

/// (x1, x2^3 + x1 x2): critical values on the cusp curve.
inline PolyEntry cusp() {
  return {"cusp", PolyMap({var(2, 0), var(2, 1).pow(3) + var(2, 0) * var(2, 1)}), cube(2, -1, 1),
          Box{{{-1.5, 1.5}, {-2.5, 2.5}}}};
}

/// (x1^2 + x2^2 - x3, x3) on R^3: critical points on the x3 axis.
inline PolyEntry trough() {
  return {"trough", PolyMap({var(3, 0).pow(2) + var(3, 1).pow(2) - var(3, 2), var(3, 2)}), cube(3, -1, 1),
          Box{{{-1.5, 3.0}, {-1.5, 1.5}}}};
}

/// The six polynomial maps of the consistency and Sard checks.
inline std::vector<PolyEntry> poly_catalog() { return {square(), paraboloid(), cubic(), fold(), cusp(), trough()}; }

inline PolyEntry identity_line() { return {"identity", PolyMap({var(1, 0)}), cube(1, -2, 2), Box{{{-2.0, 2.0}}}}; }

inline PolyEntry doubling() { return {"double", PolyMap({2.0 * var(1, 0)}), cube(1, -1, 1), Box{{{-2.0, 2.0}}}}; }

inline PolyEntry diag23() {
  return {"diag23", linear_map(Matrix{{2, 0}, {0, 3}}), cube(2, -1, 1), Box{{{-2.0, 2.0}, {-3.0, 3.0}}}};
}

inline PolyEntry identity_plane() {
  return {"identity2", linear_map(Matrix::identity(2)), cube(2, -1, 1), Box{{{-1.0, 1.0}, {-1.0, 1.0}}}};
}

/// (x1^2 + x2^2 - 1)^2: critical set = origin and unit circle.
inline PolyEntry circle_squared() {
  const Polynomial r = var(2, 0).pow(2) + var(2, 1).pow(2) - Polynomial::constant(2, 1.0);
  return {"circle_squared", PolyMap({r.pow(2)}), cube(2, -1.5, 1.5), Box{{{-0.5, 13.0}}}};
}

inline PolyEntry linear_line() {
  return {"linear", PolyMap({var(1, 0)}), cube(1, -256, 256), Box{{{-256.0, 256.0}}}};
}

inline PolyEntry first_coordinate() {
  return {"first_coordinate", PolyMap({var(2, 0)}), cube(2, -256, 256), Box{{{-256.0, 256.0}}}};
}

/// F(x) = {y : 0 < |y| < |x|} on R.
inline MapSpec punctured_cone() {
  const Polynomial x = var(2, 0), y = var(2, 1);
  Formula g = Formula::all_of({Formula::positive(y * y), Formula::atom(y * y - x * x, Relation::LT)});
  return MapSpec("punctured_cone", 1, 1, std::move(g), cube(2, -1, 1));
}

/// F(0) = {0}, F(x) = |x| B minus the first axis, for x != 0 in R^2.
inline MapSpec remark_map() {
  const std::size_t d = 4;
  const Polynomial x1 = var(d, 0), x2 = var(d, 1), y1 = var(d, 2), y2 = var(d, 3);
  Formula origin = Formula::all_of({Formula::atom(x1, Relation::EQ), Formula::atom(x2, Relation::EQ),
                                    Formula::atom(y1, Relation::EQ), Formula::atom(y2, Relation::EQ)});
  Formula open = Formula::all_of({Formula::atom(y1 * y1 + y2 * y2 - x1 * x1 - x2 * x2, Relation::LT),
                                  Formula::positive(y2 * y2)});
  return MapSpec("remark", 2, 2, Formula::any_of({std::move(origin), std::move(open)}), cube(4, -1, 1));
}

/// Graph y (1 + x^2) - 1 = 0, i.e. f(x) = 1/(1 + x^2).
inline MapSpec reciprocal() {
  const Polynomial x = var(2, 0), y = var(2, 1);
  Formula g = Formula::atom(y * (Polynomial::constant(2, 1.0) + x * x) - Polynomial::constant(2, 1.0), Relation::EQ);
  return MapSpec("reciprocal", 1, 1, std::move(g), Box{{{-256.0, 256.0}, {0.0, 1.0}}});
}

/// Graph with no points.
inline MapSpec empty_graph() {
  return MapSpec("empty", 1, 1, Formula::never(2), cube(2, -1, 1));
}

}  // namespace regvar::catalog
