#pragma once

// Probabilistic specification expressions (PSEs): arithmetic over the unknown
// transition probabilities v_ij of a finite Markov chain.
//
//   xi  ::= v_ij | xi * xi | 1 / xi                       (monomials)
//   phi ::= const | xi | phi + phi | phi - phi | phi * phi

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "fairmon/interval.hpp"
#include "fairmon/state_space.hpp"

namespace fairmon {

class TransitionMatrix;

class Pse {
 public:
  enum class Kind { constant, variable, add, sub, mul, inv };

  static Pse constant(double value);
  static Pse variable(StateId from, StateId to, int label = 0);
  static Pse variable(Edge e, int label = 0) { return variable(e.from, e.to, label); }
  static Pse add(Pse lhs, Pse rhs);
  static Pse sub(Pse lhs, Pse rhs);
  static Pse mul(Pse lhs, Pse rhs);
  /// 1 / denominator. Throws ValidationError unless the denominator is a
  /// monomial (variables, products and reciprocals of monomials only).
  static Pse inv(Pse denominator);

  Kind kind() const noexcept;
  double value() const;      // constant
  Edge edge() const;         // variable
  int label() const;         // variable; 0 before relabeling
  const Pse& lhs() const;    // add, sub, mul
  const Pse& rhs() const;    // add, sub, mul
  const Pse& operand() const;  // inv

  bool is_leaf() const noexcept {
    return kind() == Kind::constant || kind() == Kind::variable;
  }

  /// Structural equality (labels included).
  friend bool operator==(const Pse& a, const Pse& b);

 private:
  struct Node;
  explicit Pse(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

/// Number of arithmetic operators (+, -, *, /) in the tree.
std::size_t size(const Pse& phi);

/// V_phi.
std::set<Edge> variables(const Pse& phi);
/// Dep(phi): source states of the variables.
std::set<StateId> dep_states(const Pse& phi);
/// Dom(V_phi): every state touched by a variable, as source or target.
std::set<StateId> dom_states(const Pse& phi);

bool contains_division(const Pse& phi);
/// True for trees made of variables, products and reciprocals only.
bool is_monomial(const Pse& phi);

/// Range of phi when every variable occurrence ranges independently over
/// [0, 1]. Throws ValidationError on division.
Interval static_range(const Pse& phi);

/// phi(M). Throws ZeroDenominatorError when some 1/xi has xi(M) == 0.
double evaluate(const Pse& phi, const TransitionMatrix& m);

/// Gives every variable occurrence a distinct label within its (i, j) group,
/// numbered 1, 2, ... in left-to-right order.
Pse relabel_duplicates(const Pse& phi);

/// Number of variable-occurrence leaves.
std::size_t leaf_count(const Pse& phi);

/// Concrete syntax accepted by parse_pse. Labels are not printed.
std::string to_string(const Pse& phi, const StateSpace& states);

}  // namespace fairmon
