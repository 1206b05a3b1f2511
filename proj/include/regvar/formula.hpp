#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "polynomial.hpp"

namespace regvar {

/// p < 0, p <= 0, p = 0.
enum class Relation { LT, LE, EQ };

struct Atom {
  Polynomial poly;
  Relation relation = Relation::LE;
};

/// Branch choices taken at disjunctions while computing residuals. Recording
/// them once and replaying them keeps the residual vector's layout fixed
/// across finite-difference evaluations.
struct BranchPath {
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  std::vector<std::uint8_t> choices;
  std::size_t cursor = 0;
  bool replay = false;
  /// Child index (mod child count) forced at the first disjunction met while
  /// recording; later disjunctions choose freely.
  std::size_t pin = kFree;
  /// Offset for strict atoms, so that minimizing the residual lands strictly
  /// inside open conditions instead of on their boundary.
  double strict_margin = 0.0;

  void record() {
    choices.clear();
    cursor = 0;
    replay = false;
  }
  void rewind() {
    cursor = 0;
    replay = true;
  }
};

/// Boolean combination of polynomial sign conditions.
class Formula {
 public:
  enum class Kind { Atom, And, Or, Not };

  static Formula atom(Polynomial p, Relation rel) {
    Formula f;
    f.kind_ = Kind::Atom;
    f.num_vars_ = p.num_vars();
    f.atom_ = Atom{std::move(p), rel};
    return f;
  }

  static Formula all_of(std::vector<Formula> children) { return combine(Kind::And, std::move(children)); }
  static Formula any_of(std::vector<Formula> children) { return combine(Kind::Or, std::move(children)); }

  static Formula negate(Formula child) {
    Formula f;
    f.kind_ = Kind::Not;
    f.num_vars_ = child.num_vars_;
    f.children_.push_back(std::move(child));
    return f;
  }

  static Formula always(std::size_t num_vars) { return atom(Polynomial::zero(num_vars), Relation::LE); }
  static Formula never(std::size_t num_vars) { return atom(Polynomial::constant(num_vars, 1.0), Relation::LT); }

  /// p > 0 and p >= 0 by sign flip.
  static Formula positive(const Polynomial& p) { return atom(-p, Relation::LT); }
  static Formula nonnegative(const Polynomial& p) { return atom(-p, Relation::LE); }

  Kind kind() const { return kind_; }
  std::size_t num_vars() const { return num_vars_; }
  const Atom& atom_value() const { return atom_; }
  const std::vector<Formula>& children() const { return children_; }

  /// EQ atoms hold when |p| <= tol_eq; strict and non-strict inequalities are
  /// evaluated exactly as computed.
  bool contains(std::span<const double> point, double tol_eq) const {
    check_dims(point);
    return eval(point, [tol_eq](const Atom& a, double v) {
      switch (a.relation) {
        case Relation::LT: return v < 0.0;
        case Relation::LE: return v <= 0.0;
        case Relation::EQ: return std::abs(v) <= tol_eq;
      }
      return false;
    });
  }

  /// Closure proxy: every sign condition is relaxed by `tol` (strict becomes
  /// non-strict). Negated equalities relax to "always".
  bool contains_relaxed(std::span<const double> point, double tol) const {
    check_dims(point);
    return eval_relaxed(point, tol, false);
  }

  /// Appends one residual per atom on the active branch; all zero on the set
  /// (up to strictness). Disjunctions pick the child with the smallest
  /// squared residual unless `path` is replaying earlier choices.
  void residuals(std::span<const double> point, std::vector<double>& out, BranchPath& path) const {
    check_dims(point);
    residuals_impl(point, out, path, false);
  }

  double violation(std::span<const double> point) const {
    std::vector<double> r;
    BranchPath path;
    residuals(point, r, path);
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
  }

  bool has_equality() const {
    if (kind_ == Kind::Atom) return atom_.relation == Relation::EQ;
    for (const auto& c : children_)
      if (c.has_equality()) return true;
    return false;
  }

  /// True when no open set can satisfy the formula by construction: every
  /// disjunct carries an equality. Grid probing is pointless for such sets.
  bool thin() const {
    switch (kind_) {
      case Kind::Atom: return atom_.relation == Relation::EQ;
      case Kind::Not: return false;
      case Kind::And:
        for (const auto& c : children_)
          if (c.thin()) return true;
        return false;
      case Kind::Or:
        for (const auto& c : children_)
          if (!c.thin()) return false;
        return true;
    }
    return false;
  }

  /// Applies fn to every atom polynomial; the results must share a variable count.
  Formula map_polynomials(const std::function<Polynomial(const Polynomial&)>& fn) const {
    if (kind_ == Kind::Atom) return atom(fn(atom_.poly), atom_.relation);
    std::vector<Formula> mapped;
    mapped.reserve(children_.size());
    for (const auto& c : children_) mapped.push_back(c.map_polynomials(fn));
    if (kind_ == Kind::Not) return negate(std::move(mapped.front()));
    return combine(kind_, std::move(mapped));
  }

 private:
  static Formula combine(Kind kind, std::vector<Formula> children) {
    if (children.empty()) throw InputError("boolean node needs at least one child");
    Formula f;
    f.kind_ = kind;
    f.num_vars_ = children.front().num_vars_;
    for (const auto& c : children)
      if (c.num_vars_ != f.num_vars_) throw InputError("formula children disagree on variable count");
    f.children_ = std::move(children);
    return f;
  }

  void check_dims(std::span<const double> point) const {
    if (point.size() != num_vars_)
      throw InputError("formula expects " + std::to_string(num_vars_) + " coordinates, got " +
                       std::to_string(point.size()));
  }

  template <class AtomTest>
  bool eval(std::span<const double> point, const AtomTest& test) const {
    switch (kind_) {
      case Kind::Atom: return test(atom_, atom_.poly(point));
      case Kind::Not: return !children_.front().eval(point, test);
      case Kind::And:
        for (const auto& c : children_)
          if (!c.eval(point, test)) return false;
        return true;
      case Kind::Or:
        for (const auto& c : children_)
          if (c.eval(point, test)) return true;
        return false;
    }
    return false;
  }

  bool eval_relaxed(std::span<const double> point, double tol, bool negated) const {
    switch (kind_) {
      case Kind::Atom: {
        const double v = atom_.poly(point);
        if (!negated) return atom_.relation == Relation::EQ ? std::abs(v) <= tol : v <= tol;
        return atom_.relation == Relation::EQ ? true : -v <= tol;
      }
      case Kind::Not: return children_.front().eval_relaxed(point, tol, !negated);
      case Kind::And:
      case Kind::Or: {
        const bool conjunctive = (kind_ == Kind::And) != negated;
        for (const auto& c : children_) {
          const bool r = c.eval_relaxed(point, tol, negated);
          if (conjunctive && !r) return false;
          if (!conjunctive && r) return true;
        }
        return conjunctive;
      }
    }
    return false;
  }

  void residuals_impl(std::span<const double> point, std::vector<double>& out, BranchPath& path,
                      bool negated) const {
    switch (kind_) {
      case Kind::Atom: {
        const double v = atom_.poly(point);
        if (atom_.relation == Relation::EQ) {
          out.push_back(negated ? 0.0 : v);
          return;
        }
        const bool strict = (atom_.relation == Relation::LT) != negated;
        const double margin = strict ? path.strict_margin : 0.0;
        out.push_back(negated ? std::max(-v + margin, 0.0) : std::max(v + margin, 0.0));
        return;
      }
      case Kind::Not: children_.front().residuals_impl(point, out, path, !negated); return;
      case Kind::And:
      case Kind::Or: {
        const bool conjunctive = (kind_ == Kind::And) != negated;
        if (conjunctive) {
          for (const auto& c : children_) c.residuals_impl(point, out, path, negated);
          return;
        }
        if (path.replay) {
          const std::size_t choice = path.cursor < path.choices.size() ? path.choices[path.cursor] % children_.size() : 0;
          ++path.cursor;
          children_[choice].residuals_impl(point, out, path, negated);
          return;
        }
        // Pick the disjunct with the smallest squared residual. Nested
        // choices of losing branches are discarded with them.
        const std::size_t slot = path.choices.size();
        path.choices.push_back(0);
        if (path.pin != BranchPath::kFree) {
          const std::size_t choice = path.pin % children_.size();
          path.pin = BranchPath::kFree;
          path.choices[slot] = static_cast<std::uint8_t>(choice);
          children_[choice].residuals_impl(point, out, path, negated);
          return;
        }
        std::vector<double> best;
        std::vector<std::uint8_t> best_nested;
        double best_norm = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < children_.size(); ++i) {
          BranchPath sub;
          sub.strict_margin = path.strict_margin;
          std::vector<double> r;
          children_[i].residuals_impl(point, r, sub, negated);
          double s = 0.0;
          for (double v : r) s += v * v;
          if (s < best_norm) {
            best_norm = s;
            best = std::move(r);
            best_nested = std::move(sub.choices);
            path.choices[slot] = static_cast<std::uint8_t>(i);
          }
        }
        path.choices.insert(path.choices.end(), best_nested.begin(), best_nested.end());
        out.insert(out.end(), best.begin(), best.end());
        return;
      }
    }
  }

  Kind kind_ = Kind::Atom;
  std::size_t num_vars_ = 0;
  Atom atom_;
  std::vector<Formula> children_;
};

}  // namespace regvar
