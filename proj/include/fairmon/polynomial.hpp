#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "fairmon/pse.hpp"
#include "fairmon/state_space.hpp"

namespace fairmon {

class TransitionMatrix;

/// kappa * prod v_ij^{d_ij} with signed integer exponents. Zero exponents are
/// never stored.
struct Monomial {
  double coefficient = 1.0;
  std::map<Edge, int> exponents;

  int exponent(Edge e) const;
  /// d_i = sum_j d_ij.
  int row_exponent(StateId i) const;
  bool has_negative() const;
  bool is_constant() const { return exponents.empty(); }

  /// Adds exponents, multiplies coefficients.
  Monomial& operator*=(const Monomial& other);

  double evaluate(const TransitionMatrix& m) const;

  bool operator==(const Monomial&) const = default;
};

Monomial operator*(Monomial a, const Monomial& b);

/// Sum of monomials with pairwise distinct exponent maps and nonzero
/// coefficients, kept in first-appearance order.
class Polynomial {
 public:
  Polynomial() = default;
  static Polynomial constant(double c);
  static Polynomial from_monomial(Monomial m);

  /// Merges with an existing monomial of identical exponents; drops the
  /// result if the coefficient becomes exactly zero.
  void add_term(const Monomial& m);

  const std::vector<Monomial>& terms() const noexcept { return terms_; }
  std::size_t term_count() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  std::set<Edge> variables() const;
  double evaluate(const TransitionMatrix& m) const;
  /// Sum of |kappa_l * xi_l(M)|, the natural scale for rounding error.
  double magnitude(const TransitionMatrix& m) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);

  bool operator==(const Polynomial&) const = default;

 private:
  std::vector<Monomial> terms_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, const Polynomial& b);

/// Distributes products over sums; reciprocals contribute negated exponents.
Polynomial to_polynomial(const Pse& phi);

/// Division-free rendering: sum of products, kappa * v * v * ...
/// Monomials with negative exponents are rendered with 1/xi factors.
Pse to_pse(const Polynomial& p);
Pse to_pse(const Monomial& m);

/// Written-out symbol count of a polynomial: each variable occurrence, each
/// joining operator, and a coefficient symbol (plus its '*') when the
/// coefficient is not 1. For prod_{i<m}(q_2i + q_2i+1) this is 2^{m+1} m - 1.
std::size_t written_size(const Polynomial& p);

/// phi == a + b / c with a, b division-free and c a single monomial.
struct DivisionDecomposition {
  Polynomial free_part;    // a
  Polynomial numerator;    // b
  Monomial denominator;    // c
};

DivisionDecomposition decompose_division(const Pse& phi);

}  // namespace fairmon
