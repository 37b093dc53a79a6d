#include <gtest/gtest.h>

#include <sstream>

#include "fairmon/errors.hpp"
#include "fairmon/markov.hpp"
#include "fairmon/parser.hpp"

using namespace fairmon;

TEST(TransitionMatrix, Validation) {
  EXPECT_THROW(TransitionMatrix(std::vector<std::vector<double>>{}), ValidationError);
  EXPECT_THROW(TransitionMatrix({{0.5, 0.5}, {1.0}}), ValidationError);
  EXPECT_THROW(TransitionMatrix({{0.5, 0.6}, {0.5, 0.5}}), ValidationError);
  EXPECT_THROW(TransitionMatrix({{-0.1, 1.1}, {0.5, 0.5}}), ValidationError);
  const TransitionMatrix m({{0.3, 0.7 + 5e-10}, {1.0, 0.0}});
  EXPECT_NEAR(m.at(0, 0) + m.at(0, 1), 1.0, 1e-15);
}

TEST(MarkovChain, InitialMustExist) {
  EXPECT_THROW(new_chain({{1.0}}, StateId{1}), UnknownStateError);
}

TEST(Simulator, DeterministicCycleAlternates) {
  const MarkovChain c = new_chain({{0, 1}, {1, 0}}, StateId{0});
  const Path p = simulate(c, 5, 99);
  ASSERT_EQ(p.size(), 6u);
  for (std::size_t t = 0; t < p.size(); ++t) EXPECT_EQ(p[t].index, t % 2);
  EXPECT_EQ(simulate(c, 0, 1).size(), 1u);
}

TEST(Simulator, Reproducible) {
  const ChainSpec spec = lending_chain();
  EXPECT_EQ(simulate(spec.chain, 1000, 42), simulate(spec.chain, 1000, 42));
  EXPECT_NE(simulate(spec.chain, 1000, 42), simulate(spec.chain, 1000, 43));
}

TEST(Simulator, EmpiricalFrequencies) {
  const MarkovChain c = new_chain({{0.2, 0.8}, {0.4, 0.6}}, StateId{0});
  const Path p = simulate(c, 200000, 7);
  double c0 = 0, c00 = 0;
  for (std::size_t t = 0; t + 1 < p.size(); ++t)
    if (p[t].index == 0) {
      ++c0;
      if (p[t + 1].index == 0) ++c00;
    }
  EXPECT_NEAR(c00 / c0, 0.2, 0.01);
}

TEST(Simulator, NeverTakesZeroProbabilityEdges) {
  const ChainSpec spec = lending_chain();
  const Path p = simulate(spec.chain, 20000, 3);
  for (std::size_t t = 0; t + 1 < p.size(); ++t) EXPECT_GT(spec.chain.matrix()(p[t], p[t + 1]), 0.0);
}

TEST(BundledChains, GroundTruth) {
  const ChainSpec lending = lending_chain();
  EXPECT_NEAR(ground_truth(lending.chain, parse_pse(kDemographicParityText, lending.states)), 0.3, 1e-15);
  const ChainSpec admission = admission_chain();
  EXPECT_NEAR(ground_truth(admission.chain, parse_pse(social_burden_text(10), admission.states)), 10.0 / 3.0,
              1e-12);
}

TEST(ChainConfig, JsonRoundTrip) {
  std::istringstream in(R"({"states": 3, "names": ["a","b","c"], "initial": "b",
                            "rows": [[0,1,0],[0.5,0,0.5],[1,0,0]]})");
  const ChainSpec spec = load_chain(in);
  EXPECT_EQ(spec.chain.initial().index, 1u);
  EXPECT_EQ(spec.states.resolve("c").index, 2u);
  std::istringstream again(chain_to_json(spec));
  const ChainSpec copy = load_chain(again);
  EXPECT_EQ(copy.states.names(), spec.states.names());
  EXPECT_EQ(copy.chain.matrix().at(1, 2), 0.5);
}

TEST(ChainConfig, Errors) {
  std::istringstream bad_json("{");
  EXPECT_THROW(load_chain(bad_json), ValidationError);
  std::istringstream bad_rows(R"({"states": 2, "rows": [[1,0]]})");
  EXPECT_THROW(load_chain(bad_rows), ValidationError);
  std::istringstream bad_initial(R"({"states": 2, "initial": 3, "rows": [[1,0],[0,1]]})");
  EXPECT_THROW(load_chain(bad_initial), UnknownStateError);
}

TEST(StateDeclaration, Parse) {
  std::istringstream in("# states\n2 b\n1 a\n");
  const StateSpace s = StateSpace::from_declaration(in);
  EXPECT_EQ(s.names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.resolve("2").index, 1u);
  std::istringstream gap("1 a\n3 c\n");
  EXPECT_THROW(StateSpace::from_declaration(gap), ValidationError);
  std::istringstream dup("1 a\n2 a\n");
  EXPECT_THROW(StateSpace::from_declaration(dup), ValidationError);
}

TEST(Trace, ReadReportsLine) {
  const StateSpace s(std::vector<std::string>{"a", "b"});
  std::istringstream ok("a\nb\n\n2\n");
  EXPECT_EQ(read_path(ok, s).size(), 3u);
  std::istringstream bad("a\nb\nzz\n");
  try {
    read_path(bad, s);
    FAIL();
  } catch (const UnknownStateError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}
