#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace regvar {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      carry_ += (sum_ - t) + v;
    else
      carry_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct Monomial {
  double coeff = 0.0;
  std::vector<unsigned> exponents;
};

/// Sparse real polynomial in a fixed number of variables. Terms are kept
/// sorted by exponent vector, unique, and free of zero coefficients.
class Polynomial {
 public:
  Polynomial() = default;

  Polynomial(std::size_t num_vars, std::vector<Monomial> terms) : num_vars_(num_vars), terms_(std::move(terms)) {
    if (num_vars_ == 0) throw InputError("polynomial needs at least one variable");
    for (const auto& t : terms_)
      if (t.exponents.size() != num_vars_) throw InputError("monomial exponent length mismatch");
    normalize();
  }

  static Polynomial zero(std::size_t num_vars) { return Polynomial(num_vars, {}); }

  static Polynomial constant(std::size_t num_vars, double c) {
    return Polynomial(num_vars, {{c, std::vector<unsigned>(num_vars, 0)}});
  }

  static Polynomial variable(std::size_t num_vars, std::size_t index, double coeff = 1.0) {
    if (index >= num_vars) throw InputError("variable index out of range");
    std::vector<unsigned> e(num_vars, 0);
    e[index] = 1;
    return Polynomial(num_vars, {{coeff, std::move(e)}});
  }

  std::size_t num_vars() const { return num_vars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& t : terms_) {
      unsigned s = 0;
      for (unsigned e : t.exponents) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  double operator()(std::span<const double> point) const {
    if (point.size() != num_vars_)
      throw InputError("polynomial expects " + std::to_string(num_vars_) + " coordinates, got " +
                       std::to_string(point.size()));
    CompensatedSum sum;
    for (const auto& t : terms_) {
      double v = t.coeff;
      for (std::size_t i = 0; i < num_vars_; ++i)
        for (unsigned k = 0; k < t.exponents[i]; ++k) v *= point[i];
      sum.add(v);
    }
    return sum.value();
  }

  Polynomial derivative(std::size_t var) const {
    if (var >= num_vars_) throw InputError("derivative index out of range");
    std::vector<Monomial> out;
    for (const auto& t : terms_) {
      if (t.exponents[var] == 0) continue;
      Monomial m{t.coeff * t.exponents[var], t.exponents};
      --m.exponents[var];
      out.push_back(std::move(m));
    }
    return Polynomial(num_vars_, std::move(out));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    check_same(a, b);
    auto terms = a.terms_;
    terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
    return Polynomial(a.num_vars_, std::move(terms));
  }

  friend Polynomial operator-(const Polynomial& a) { return a * -1.0; }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

  friend Polynomial operator*(const Polynomial& a, double s) {
    auto terms = a.terms_;
    for (auto& t : terms) t.coeff *= s;
    return Polynomial(a.num_vars_, std::move(terms));
  }
  friend Polynomial operator*(double s, const Polynomial& a) { return a * s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    check_same(a, b);
    std::vector<Monomial> terms;
    terms.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        Monomial m{ta.coeff * tb.coeff, ta.exponents};
        for (std::size_t i = 0; i < m.exponents.size(); ++i) m.exponents[i] += tb.exponents[i];
        terms.push_back(std::move(m));
      }
    return Polynomial(a.num_vars_, std::move(terms));
  }

  Polynomial pow(unsigned k) const {
    Polynomial result = constant(num_vars_, 1.0);
    for (unsigned i = 0; i < k; ++i) result = result * *this;
    return result;
  }

  /// Composition: variable i is replaced by replacements[i]. All replacements
  /// share one variable count, which becomes the result's.
  Polynomial substitute(std::span<const Polynomial> replacements) const {
    if (replacements.size() != num_vars_) throw InputError("substitute: need one replacement per variable");
    const std::size_t out_vars = replacements.front().num_vars();
    for (const auto& r : replacements)
      if (r.num_vars() != out_vars) throw InputError("substitute: replacements disagree on variable count");
    Polynomial result = zero(out_vars);
    for (const auto& t : terms_) {
      Polynomial term = constant(out_vars, t.coeff);
      for (std::size_t i = 0; i < num_vars_; ++i)
        if (t.exponents[i] > 0) term = term * replacements[i].pow(t.exponents[i]);
      result = result + term;
    }
    return result;
  }

  /// Re-embeds the polynomial into `new_vars` variables; old variable i
  /// becomes new variable index_map[i].
  Polynomial embed(std::size_t new_vars, std::span<const std::size_t> index_map) const {
    if (index_map.size() != num_vars_) throw InputError("embed: index map length mismatch");
    std::vector<Monomial> out;
    for (const auto& t : terms_) {
      Monomial m{t.coeff, std::vector<unsigned>(new_vars, 0)};
      for (std::size_t i = 0; i < num_vars_; ++i) {
        if (index_map[i] >= new_vars) throw InputError("embed: target index out of range");
        m.exponents[index_map[i]] += t.exponents[i];
      }
      out.push_back(std::move(m));
    }
    return Polynomial(new_vars, std::move(out));
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    if (a.num_vars_ != b.num_vars_ || a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i)
      if (a.terms_[i].coeff != b.terms_[i].coeff || a.terms_[i].exponents != b.terms_[i].exponents) return false;
    return true;
  }

 private:
  static void check_same(const Polynomial& a, const Polynomial& b) {
    if (a.num_vars_ != b.num_vars_) throw InputError("polynomial variable counts differ");
  }

  void normalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const Monomial& l, const Monomial& r) { return l.exponents < r.exponents; });
    std::vector<Monomial> merged;
    merged.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!merged.empty() && merged.back().exponents == t.exponents)
        merged.back().coeff += t.coeff;
      else
        merged.push_back(std::move(t));
    }
    std::erase_if(merged, [](const Monomial& m) { return m.coeff == 0.0; });
    terms_ = std::move(merged);
  }

  std::size_t num_vars_ = 0;
  std::vector<Monomial> terms_;
};

}  // namespace regvar
