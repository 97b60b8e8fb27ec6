#include <gtest/gtest.h>

#include <random>

#include "s0l/procgen.hpp"
#include "s0l/text_format.hpp"

using namespace s0l;

TEST(GrammarFormat, ParsesAllForms) {
  auto g = parse_grammar(
      "# header\n"
      "alphabet: B A\n"
      "axiom: AB @ 0.25   # trailing comment\n"
      "axiom: A @ 0.75\n"
      "\n"
      "A -> AB : 0.5\n"
      "A\t->\tA : 0.5\n"
      "B -> A : 1\n");
  EXPECT_EQ(g.alphabet, (std::vector<Symbol>{'A', 'B'}));
  ASSERT_EQ(g.axioms.size(), 2u);
  EXPECT_EQ(g.axioms[0], (Axiom{"AB", 0.25}));
  ASSERT_EQ(g.productions.size(), 3u);
  EXPECT_EQ(g.productions[1].successor, "A");
  EXPECT_TRUE(validate(g).ok());
}

TEST(GrammarFormat, ErrorsNameTheLine) {
  const char* bad[] = {
      "alphabet: A\nA -> A 1\n",
      "alphabet: A\nA -> A : x\n",
      "alphabet: AB\n",
      "alphabet: A\naxiom: A 1\n",
      "alphabet: A\nalphabet: A\n",
      "A -> A : 1\n",
  };
  const std::size_t lines[] = {2, 2, 1, 2, 2, 1};
  for (std::size_t i = 0; i < std::size(bad); ++i) {
    try {
      parse_grammar(bad[i]);
      FAIL() << bad[i];
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), lines[i]) << bad[i];
      EXPECT_NE(std::string(e.what()).find("line " + std::to_string(lines[i])), std::string::npos);
    }
  }
}

TEST(GrammarFormat, RoundTripKeepsExactProbabilities) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    GeneratorConfig cfg;
    cfg.successors = 3 + seed % 7;
    cfg.probability_granularity = 1000003;
    Rng rng(seed);
    auto g = generate_system(cfg, rng);
    // Awkward values on purpose.
    for (auto& p : g.productions) p.probability = std::nextafter(p.probability, 0.0);
    auto back = parse_grammar(to_string(g));
    EXPECT_EQ(back, g);
    EXPECT_EQ(to_string(back), to_string(g));
  }
}

TEST(SequenceFormat, RoundTrip) {
  SequenceSet rho{{{"A", "AB", "ABA"}, {"B", "BB", "BBB"}}};
  auto text = to_string(rho);
  EXPECT_EQ(text, "A\nAB\nABA\n---\nB\nBB\nBBB\n");
  EXPECT_EQ(parse_sequences(text), rho);
  EXPECT_EQ(to_string(parse_sequences(text)), text);
}

TEST(SequenceFormat, CommentsAndErrors) {
  EXPECT_EQ(parse_sequences("# c\nA # x\nAB\n").sequences.size(), 1u);
  EXPECT_THROW(parse_sequences(""), ParseError);
  EXPECT_THROW(parse_sequences("---\nA\n"), ParseError);
  EXPECT_THROW(parse_sequences("A B\n"), ParseError);
  try {
    parse_sequences("A\nA:B\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::ostringstream os;
  EXPECT_THROW(write_sequences(os, SequenceSet{{{"---", "---A"}}}), std::invalid_argument);
}

TEST(SequenceFormat, GeneratedInputsRoundTrip) {
  GeneratorConfig cfg;
  cfg.successors = 5;
  cfg.sequences = 3;
  cfg.words = 4;
  cfg.seed = 77;
  auto c = generate_case(cfg);
  EXPECT_EQ(parse_sequences(to_string(c.inputs)), c.inputs);
}

TEST(FormatDouble, ShortestRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1.0), "1");
}
