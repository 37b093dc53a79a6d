#include "fairmon/pse.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "fairmon/errors.hpp"
#include "fairmon/markov.hpp"

namespace fairmon {

struct Pse::Node {
  Kind kind;
  double value = 0.0;
  Edge edge{};
  int label = 0;
  std::optional<Pse> lhs;
  std::optional<Pse> rhs;
};

Pse Pse::constant(double value) {
  return Pse(std::make_shared<const Node>(Node{Kind::constant, value, {}, 0, {}, {}}));
}

Pse Pse::variable(StateId from, StateId to, int label) {
  return Pse(std::make_shared<const Node>(Node{Kind::variable, 0.0, {from, to}, label, {}, {}}));
}

Pse Pse::add(Pse lhs, Pse rhs) {
  return Pse(std::make_shared<const Node>(Node{Kind::add, 0.0, {}, 0, std::move(lhs), std::move(rhs)}));
}

Pse Pse::sub(Pse lhs, Pse rhs) {
  return Pse(std::make_shared<const Node>(Node{Kind::sub, 0.0, {}, 0, std::move(lhs), std::move(rhs)}));
}

Pse Pse::mul(Pse lhs, Pse rhs) {
  return Pse(std::make_shared<const Node>(Node{Kind::mul, 0.0, {}, 0, std::move(lhs), std::move(rhs)}));
}

Pse Pse::inv(Pse denominator) {
  if (!is_monomial(denominator))
    throw ValidationError("reciprocal of a non-monomial expression");
  return Pse(std::make_shared<const Node>(Node{Kind::inv, 0.0, {}, 0, std::move(denominator), {}}));
}

Pse::Kind Pse::kind() const noexcept { return node_->kind; }
double Pse::value() const { return node_->value; }
Edge Pse::edge() const { return node_->edge; }
int Pse::label() const { return node_->label; }
const Pse& Pse::lhs() const { return *node_->lhs; }
const Pse& Pse::rhs() const { return *node_->rhs; }
const Pse& Pse::operand() const { return *node_->lhs; }

bool operator==(const Pse& a, const Pse& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Pse::Kind::constant:
      return a.value() == b.value();
    case Pse::Kind::variable:
      return a.edge() == b.edge() && a.label() == b.label();
    case Pse::Kind::inv:
      return a.operand() == b.operand();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

namespace {

template <class F>
void for_each_variable(const Pse& phi, F&& f) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      return;
    case Pse::Kind::variable:
      f(phi);
      return;
    case Pse::Kind::inv:
      for_each_variable(phi.operand(), f);
      return;
    default:
      for_each_variable(phi.lhs(), f);
      for_each_variable(phi.rhs(), f);
  }
}

Pse relabel(const Pse& phi, std::map<Edge, int>& next_label) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      return phi;
    case Pse::Kind::variable:
      return Pse::variable(phi.edge(), ++next_label[phi.edge()]);
    case Pse::Kind::inv:
      return Pse::inv(relabel(phi.operand(), next_label));
    case Pse::Kind::add: {
      auto l = relabel(phi.lhs(), next_label);
      return Pse::add(std::move(l), relabel(phi.rhs(), next_label));
    }
    case Pse::Kind::sub: {
      auto l = relabel(phi.lhs(), next_label);
      return Pse::sub(std::move(l), relabel(phi.rhs(), next_label));
    }
    case Pse::Kind::mul: {
      auto l = relabel(phi.lhs(), next_label);
      return Pse::mul(std::move(l), relabel(phi.rhs(), next_label));
    }
  }
  return phi;
}

void print(std::ostream& out, const Pse& phi, const StateSpace& states) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      if (phi.value() < 0) out << '(' << phi.value() << ')';
      else out << phi.value();
      return;
    case Pse::Kind::variable:
      out << "p(" << states.label(phi.edge().from) << ',' << states.label(phi.edge().to) << ')';
      return;
    case Pse::Kind::inv:
      out << "(1 / ";
      print(out, phi.operand(), states);
      out << ')';
      return;
    default: {
      const char* op = phi.kind() == Pse::Kind::add ? " + " : phi.kind() == Pse::Kind::sub ? " - " : " * ";
      out << '(';
      print(out, phi.lhs(), states);
      out << op;
      print(out, phi.rhs(), states);
      out << ')';
    }
  }
}

}  // namespace

std::size_t size(const Pse& phi) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
    case Pse::Kind::variable:
      return 0;
    case Pse::Kind::inv:
      return 1 + size(phi.operand());
    default:
      return 1 + size(phi.lhs()) + size(phi.rhs());
  }
}

std::set<Edge> variables(const Pse& phi) {
  std::set<Edge> out;
  for_each_variable(phi, [&](const Pse& v) { out.insert(v.edge()); });
  return out;
}

std::set<StateId> dep_states(const Pse& phi) {
  std::set<StateId> out;
  for_each_variable(phi, [&](const Pse& v) { out.insert(v.edge().from); });
  return out;
}

std::set<StateId> dom_states(const Pse& phi) {
  std::set<StateId> out;
  for_each_variable(phi, [&](const Pse& v) {
    out.insert(v.edge().from);
    out.insert(v.edge().to);
  });
  return out;
}

std::size_t leaf_count(const Pse& phi) {
  std::size_t n = 0;
  for_each_variable(phi, [&](const Pse&) { ++n; });
  return n;
}

bool contains_division(const Pse& phi) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
    case Pse::Kind::variable:
      return false;
    case Pse::Kind::inv:
      return true;
    default:
      return contains_division(phi.lhs()) || contains_division(phi.rhs());
  }
}

bool is_monomial(const Pse& phi) {
  switch (phi.kind()) {
    case Pse::Kind::variable:
      return true;
    case Pse::Kind::mul:
      return is_monomial(phi.lhs()) && is_monomial(phi.rhs());
    case Pse::Kind::inv:
      return is_monomial(phi.operand());
    default:
      return false;
  }
}

Interval static_range(const Pse& phi) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      return Interval::point(phi.value());
    case Pse::Kind::variable:
      return {0.0, 1.0};
    case Pse::Kind::add:
      return static_range(phi.lhs()) + static_range(phi.rhs());
    case Pse::Kind::sub:
      return static_range(phi.lhs()) - static_range(phi.rhs());
    case Pse::Kind::mul:
      return static_range(phi.lhs()) * static_range(phi.rhs());
    case Pse::Kind::inv:
      break;
  }
  throw ValidationError("static range is unbounded for expressions with division");
}

double evaluate(const Pse& phi, const TransitionMatrix& m) {
  switch (phi.kind()) {
    case Pse::Kind::constant:
      return phi.value();
    case Pse::Kind::variable: {
      const Edge e = phi.edge();
      if (e.from.index >= m.size() || e.to.index >= m.size())
        throw UnknownStateError("variable refers to a state outside the matrix");
      return m(e.from, e.to);
    }
    case Pse::Kind::add:
      return evaluate(phi.lhs(), m) + evaluate(phi.rhs(), m);
    case Pse::Kind::sub:
      return evaluate(phi.lhs(), m) - evaluate(phi.rhs(), m);
    case Pse::Kind::mul:
      return evaluate(phi.lhs(), m) * evaluate(phi.rhs(), m);
    case Pse::Kind::inv: {
      const double d = evaluate(phi.operand(), m);
      if (d == 0.0) throw ZeroDenominatorError("denominator evaluates to zero");
      return 1.0 / d;
    }
  }
  return 0.0;
}

Pse relabel_duplicates(const Pse& phi) {
  std::map<Edge, int> next_label;
  return relabel(phi, next_label);
}

std::string to_string(const Pse& phi, const StateSpace& states) {
  std::ostringstream out;
  out << std::setprecision(17);
  print(out, phi, states);
  return out.str();
}

}  // namespace fairmon
