#include <gtest/gtest.h>

#include <cmath>

#include "fairmon/markov.hpp"
#include "fairmon/polynomial.hpp"
#include "generators.hpp"

using namespace fairmon;

namespace {

Pse v(std::uint32_t i, std::uint32_t j) { return Pse::variable(StateId{i - 1}, StateId{j - 1}); }
Edge e(std::uint32_t i, std::uint32_t j) { return {StateId{i - 1}, StateId{j - 1}}; }
Monomial mono(double c, std::map<Edge, int> d) { return Monomial{c, std::move(d)}; }

}  // namespace

TEST(Polynomial, DistributesProducts) {
  const Polynomial p = to_polynomial(Pse::mul(Pse::add(v(1, 1), v(1, 2)), Pse::add(v(1, 3), v(1, 4))));
  ASSERT_EQ(p.term_count(), 4u);
  EXPECT_EQ(p.terms()[0], mono(1, {{e(1, 1), 1}, {e(1, 3), 1}}));
  EXPECT_EQ(p.terms()[1], mono(1, {{e(1, 1), 1}, {e(1, 4), 1}}));
  EXPECT_EQ(p.terms()[2], mono(1, {{e(1, 2), 1}, {e(1, 3), 1}}));
  EXPECT_EQ(p.terms()[3], mono(1, {{e(1, 2), 1}, {e(1, 4), 1}}));
}

TEST(Polynomial, ReciprocalCancels) {
  const Polynomial p = to_polynomial(Pse::mul(v(1, 2), Pse::inv(v(1, 2))));
  EXPECT_EQ(p, Polynomial::constant(1.0));
}

TEST(Polynomial, SignedCoefficients) {
  const Polynomial p = to_polynomial(Pse::sub(v(1, 1), v(2, 1)));
  ASSERT_EQ(p.term_count(), 2u);
  EXPECT_EQ(p.terms()[0].coefficient, 1.0);
  EXPECT_EQ(p.terms()[1].coefficient, -1.0);
}

TEST(Polynomial, MergesAndDropsZeros) {
  const Polynomial p = to_polynomial(Pse::sub(Pse::add(v(1, 2), v(1, 3)), v(1, 2)));
  EXPECT_EQ(p, Polynomial::from_monomial(mono(1, {{e(1, 3), 1}})));
  EXPECT_TRUE(to_polynomial(Pse::sub(v(1, 2), v(1, 2))).is_zero());
}

TEST(Polynomial, RowExponent) {
  const Monomial m = mono(1, {{e(1, 2), 2}, {e(1, 3), -1}, {e(2, 1), 1}});
  EXPECT_EQ(m.row_exponent(StateId{0}), 1);
  EXPECT_EQ(m.row_exponent(StateId{1}), 1);
  EXPECT_EQ(m.row_exponent(StateId{2}), 0);
  EXPECT_TRUE(m.has_negative());
}

TEST(Decomposition, AlreadyInTargetForm) {
  const auto d = decompose_division(Pse::add(v(1, 2), Pse::mul(v(3, 4), Pse::inv(v(5, 6)))));
  EXPECT_EQ(d.free_part, Polynomial::from_monomial(mono(1, {{e(1, 2), 1}})));
  EXPECT_EQ(d.numerator, Polynomial::from_monomial(mono(1, {{e(3, 4), 1}})));
  EXPECT_EQ(d.denominator, mono(1, {{e(5, 6), 1}}));
}

TEST(Decomposition, DivisionFreeIdentity) {
  const Pse phi = Pse::mul(v(1, 2), v(1, 3));
  const auto d = decompose_division(phi);
  EXPECT_EQ(d.free_part, to_polynomial(phi));
  EXPECT_TRUE(d.numerator.is_zero());
  EXPECT_TRUE(d.denominator.is_constant());
  EXPECT_EQ(d.denominator.coefficient, 1.0);
}

TEST(Decomposition, CommonDenominator) {
  const Pse phi = Pse::add(Pse::mul(v(1, 2), Pse::inv(v(1, 3))), Pse::mul(v(1, 4), Pse::inv(v(1, 5))));
  const auto d = decompose_division(phi);
  EXPECT_TRUE(d.free_part.is_zero());
  EXPECT_EQ(d.denominator, mono(1, {{e(1, 3), 1}, {e(1, 5), 1}}));
  Polynomial expected;
  expected.add_term(mono(1, {{e(1, 2), 1}, {e(1, 5), 1}}));
  expected.add_term(mono(1, {{e(1, 4), 1}, {e(1, 3), 1}}));
  EXPECT_EQ(d.numerator, expected);

  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const TransitionMatrix m = fairmon::testing::random_matrix(5, rng);
    const double direct = evaluate(phi, m);
    const double split = d.free_part.evaluate(m) + d.numerator.evaluate(m) / d.denominator.evaluate(m);
    EXPECT_LE(std::abs(direct - split), 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST(Polynomial, RandomEquivalence) {
  Rng rng(17);
  for (int k = 0; k < 300; ++k) {
    const Pse phi = fairmon::testing::random_pse(3, 8, true, rng);
    const TransitionMatrix m = fairmon::testing::random_matrix(3, rng);
    const Polynomial p = to_polynomial(phi);
    const double scale = std::max(1.0, p.magnitude(m));
    EXPECT_LE(std::abs(evaluate(phi, m) - p.evaluate(m)), 1e-12 * scale);
    EXPECT_LE(std::abs(evaluate(to_pse(p), m) - p.evaluate(m)), 1e-12 * scale);
  }
}

TEST(Polynomial, FormulaWrittenSize) {
  for (int m = 2; m <= 4; ++m) {
    const Polynomial p = to_polynomial(fairmon::testing::formula_m(m));
    EXPECT_EQ(p.term_count(), std::size_t{1} << m);
    EXPECT_EQ(written_size(p), (std::size_t{1} << (m + 1)) * m - 1) << "m=" << m;
  }
}

TEST(Polynomial, WrittenSizeCountsCoefficients) {
  EXPECT_EQ(written_size(Polynomial::constant(3)), 1u);
  EXPECT_EQ(written_size(Polynomial::from_monomial(mono(2, {{e(1, 2), 1}}))), 3u);
  EXPECT_EQ(written_size(Polynomial::from_monomial(mono(1, {{e(1, 2), 2}}))), 3u);
}
