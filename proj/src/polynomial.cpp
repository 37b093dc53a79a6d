#include "fairmon/polynomial.hpp"

#include <cmath>
#include <cstdlib>

#include "fairmon/errors.hpp"
#include "fairmon/markov.hpp"

namespace fairmon {

int Monomial::exponent(Edge e) const {
  auto it = exponents.find(e);
  return it == exponents.end() ? 0 : it->second;
}

int Monomial::row_exponent(StateId i) const {
  int d = 0;
  for (auto it = exponents.lower_bound(Edge{i, StateId{0}}); it != exponents.end() && it->first.from == i; ++it)
    d += it->second;
  return d;
}

bool Monomial::has_negative() const {
  for (auto& [e, d] : exponents)
    if (d < 0) return true;
  return false;
}

Monomial& Monomial::operator*=(const Monomial& other) {
  coefficient *= other.coefficient;
  for (auto& [e, d] : other.exponents) {
    int& slot = exponents[e];
    slot += d;
    if (slot == 0) exponents.erase(e);
  }
  return *this;
}

double Monomial::evaluate(const TransitionMatrix& m) const {
  double num = coefficient, den = 1.0;
  for (auto& [e, d] : exponents) {
    const double v = m(e.from, e.to);
    if (d > 0) {
      num *= std::pow(v, d);
    } else {
      if (v == 0.0) throw ZeroDenominatorError("denominator evaluates to zero");
      den *= std::pow(v, -d);
    }
  }
  return num / den;
}

Monomial operator*(Monomial a, const Monomial& b) {
  a *= b;
  return a;
}

Polynomial Polynomial::constant(double c) {
  Polynomial p;
  p.add_term(Monomial{c, {}});
  return p;
}

Polynomial Polynomial::from_monomial(Monomial m) {
  Polynomial p;
  p.add_term(m);
  return p;
}

void Polynomial::add_term(const Monomial& m) {
  if (m.coefficient == 0.0) return;
  for (auto it = terms_.begin(); it != terms_.end(); ++it) {
    if (it->exponents == m.exponents) {
      it->coefficient += m.coefficient;
      if (it->coefficient == 0.0) terms_.erase(it);
      return;
    }
  }
  terms_.push_back(m);
}

std::set<Edge> Polynomial::variables() const {
  std::set<Edge> out;
  for (auto& t : terms_)
    for (auto& [e, d] : t.exponents) out.insert(e);
  return out;
}

double Polynomial::evaluate(const TransitionMatrix& m) const {
  double s = 0.0;
  for (auto& t : terms_) s += t.evaluate(m);
  return s;
}

double Polynomial::magnitude(const TransitionMatrix& m) const {
  double s = 0.0;
  for (auto& t : terms_) s += std::abs(t.evaluate(m));
  return s;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (auto& t : other.terms_) add_term(t);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  for (auto t : other.terms_) {
    t.coefficient = -t.coefficient;
    add_term(t);
  }
  return *this;
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (auto& x : a.terms())
    for (auto& y : b.terms()) out.add_term(x * y);
  return out;
}

Polynomial to_polynomial(const Pse& phi) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      return Polynomial::constant(phi.value());
    case Pse::Kind::variable:
      return Polynomial::from_monomial(Monomial{1.0, {{phi.edge(), 1}}});
    case Pse::Kind::add:
      return to_polynomial(phi.lhs()) + to_polynomial(phi.rhs());
    case Pse::Kind::sub:
      return to_polynomial(phi.lhs()) - to_polynomial(phi.rhs());
    case Pse::Kind::mul:
      return to_polynomial(phi.lhs()) * to_polynomial(phi.rhs());
    case Pse::Kind::inv: {
      Polynomial d = to_polynomial(phi.operand());
      Monomial m = d.terms().front();
      m.coefficient = 1.0 / m.coefficient;
      for (auto& [e, k] : m.exponents) k = -k;
      return Polynomial::from_monomial(std::move(m));
    }
  }
  return {};
}

namespace {

Pse power_product(const Monomial& m, int sign) {
  std::optional<Pse> out;
  for (auto& [e, d] : m.exponents) {
    if (d * sign <= 0) continue;
    for (int k = 0; k < std::abs(d); ++k)
      out = out ? Pse::mul(*out, Pse::variable(e)) : Pse::variable(e);
  }
  return *out;
}

}  // namespace

Pse to_pse(const Monomial& m) {
  bool pos = false, neg = false;
  for (auto& [e, d] : m.exponents) (d > 0 ? pos : neg) = true;
  if (!pos && !neg) return Pse::constant(m.coefficient);
  std::optional<Pse> out;
  if (m.coefficient != 1.0) out = Pse::constant(m.coefficient);
  if (pos) {
    Pse p = power_product(m, 1);
    out = out ? Pse::mul(*out, p) : p;
  }
  if (neg) {
    Pse q = Pse::inv(power_product(m, -1));
    out = out ? Pse::mul(*out, q) : q;
  }
  return *out;
}

Pse to_pse(const Polynomial& p) {
  if (p.is_zero()) return Pse::constant(0.0);
  std::optional<Pse> out;
  for (auto& t : p.terms()) out = out ? Pse::add(*out, to_pse(t)) : to_pse(t);
  return *out;
}

std::size_t written_size(const Polynomial& p) {
  if (p.is_zero()) return 1;
  std::size_t n = p.term_count() - 1;
  for (auto& t : p.terms()) {
    std::size_t symbols = 0;
    for (auto& [e, d] : t.exponents) symbols += static_cast<std::size_t>(std::abs(d));
    if (symbols == 0 || t.coefficient != 1.0) ++symbols;
    n += 2 * symbols - 1;
  }
  return n;
}

DivisionDecomposition decompose_division(const Pse& phi) {
  const Polynomial poly = to_polynomial(phi);
  DivisionDecomposition out;
  for (auto& t : poly.terms()) {
    if (!t.has_negative()) continue;
    for (auto& [e, d] : t.exponents) {
      if (d >= 0) continue;
      auto it = out.denominator.exponents.find(e);
      if (it == out.denominator.exponents.end()) out.denominator.exponents.emplace(e, -d);
      else it->second = std::max(it->second, -d);
    }
  }
  for (auto& t : poly.terms()) {
    if (t.has_negative()) out.numerator.add_term(t * out.denominator);
    else out.free_part.add_term(t);
  }
  return out;
}

}  // namespace fairmon
