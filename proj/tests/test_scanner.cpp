#include <gtest/gtest.h>

#include <map>
#include <random>

#include "s0l/procgen.hpp"
#include "s0l/scanner.hpp"
#include "s0l/text_format.hpp"

using namespace s0l;

namespace {

const SequenceSet kExample1{{{"AAA", "AAAAAABBB"}}};

std::map<Word, double> successors_of(const S0LSystem& g, Symbol a) {
  std::map<Word, double> out;
  for (const auto& p : g.productions) {
    if (p.predecessor == a) out[p.successor] = p.probability;
  }
  return out;
}

SequenceSet small_case(std::uint64_t seed, std::size_t sequences = 1, std::size_t words = 3) {
  GeneratorConfig cfg;
  cfg.successors = 3 + seed % 3;
  cfg.seed = seed;
  cfg.words = words;
  cfg.sequences = sequences;
  // Some seeds cannot produce distinct sequences; step to the next one.
  for (;; cfg.seed += 7919) {
    try {
      return generate_case(cfg).inputs;
    } catch (const GenerationError&) {
    }
  }
}

SearchVector random_vector(Mode mode, std::size_t n, int cap, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 10);
  std::uniform_int_distribution<int> budget(0, std::min(cap, 6));
  std::vector<int> e;
  for (std::size_t z = 0; z < n; ++z) {
    if (mode == Mode::prefix_limited) e.push_back(budget(rng));
    e.push_back(len(rng));
  }
  return {mode, e, {}};
}

// Fills extensions until the scan stops asking for them.
ScanOutcome scan_extended(const SequenceSet& rho, SearchVector& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 10);
  while (true) {
    auto out = scan(rho, v);
    if (out.status != ScanStatus::needs_extension) return out;
    v.extensions.push_back(len(rng));
  }
}

void expect_same(const ScanOutcome& a, const ScanOutcome& b) {
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.system, b.system);
  if (a.ok()) {
    EXPECT_EQ(a.log_probability, b.log_probability);
  }
}

}  // namespace

TEST(FeasibleLengthBounds, Examples) {
  auto a = feasible_length_bounds("AAA", "AAAAAABBB", 1, 0);
  EXPECT_EQ(a.min, 1);
  EXPECT_EQ(a.max, 7);
  auto b = feasible_length_bounds("A", "AB", 1, 0);
  EXPECT_EQ(b.max, 2);
  EXPECT_FALSE(feasible_length_bounds("AA", "A", 1, 0).feasible());
}

TEST(GreedySelect, Examples) {
  SuccessorTable t;
  t.record('A', "AAA");
  const auto* g = greedy_select(t, 'A', "AAABBB", 4);
  ASSERT_NE(g, nullptr);
  EXPECT_EQ(g->successor, "AAA");

  SuccessorTable empty;
  EXPECT_EQ(greedy_select(empty, 'A', "AAABBB", 4), nullptr);

  SuccessorTable tie;
  for (int i = 0; i < 3; ++i) tie.record('A', "AB");
  for (int i = 0; i < 3; ++i) tie.record('A', "A");
  for (int run = 0; run < 3; ++run) {
    const auto* w = greedy_select(tie, 'A', "ABC", 3);
    ASSERT_NE(w, nullptr);
    EXPECT_EQ(w->successor, "AB");
  }
}

TEST(GreedySelect, RespectsCountAndMaxLength) {
  SuccessorTable t;
  t.record('A', "AB");
  t.record('A', "A");
  t.record('A', "A");
  EXPECT_EQ(greedy_select(t, 'A', "ABC", 3)->successor, "A");
  EXPECT_EQ(greedy_select(t, 'A', "BC", 3), nullptr);
  t.record('A', "ABC");
  for (int i = 0; i < 5; ++i) t.record('A', "ABC");
  EXPECT_EQ(greedy_select(t, 'A', "ABCD", 2)->successor, "A");
  EXPECT_EQ(greedy_select(t, 'A', "ABCD", 3)->successor, "ABC");
}

TEST(SuccessorTable, UndoRestoresState) {
  std::mt19937_64 rng(4);
  const char* words[] = {"A", "AB", "B", "BA", "ABA"};
  for (int trial = 0; trial < 200; ++trial) {
    SuccessorTable t;
    for (int i = 0; i < 5; ++i) t.record("AB"[rng() % 2], words[rng() % 5]);
    const double before = t.running_log_likelihood();
    const double exact = t.exact_log_likelihood();
    auto snapshot = [&] {
      std::vector<std::tuple<Symbol, Word, std::size_t, std::size_t>> s;
      for (Symbol a : t.symbols()) {
        for (const auto& e : t.successors(a)) s.emplace_back(a, e.successor, e.count, e.created);
      }
      return s;
    };
    const auto state = snapshot();
    std::vector<SuccessorTable::Undo> undo;
    for (int i = 0; i < 6; ++i) {
      undo.emplace_back();
      t.record("AB"[rng() % 2], words[rng() % 5], &undo.back());
    }
    while (!undo.empty()) {
      t.undo(undo.back());
      undo.pop_back();
    }
    EXPECT_EQ(snapshot(), state);
    EXPECT_EQ(t.running_log_likelihood(), before);
    EXPECT_EQ(t.exact_log_likelihood(), exact);
  }
}

TEST(SuccessorTable, RunningLikelihoodMatchesExact) {
  std::mt19937_64 rng(8);
  SuccessorTable t;
  const char* words[] = {"A", "AB", "B", "BA"};
  for (int i = 0; i < 500; ++i) {
    t.record("ABC"[rng() % 3], words[rng() % 4]);
    EXPECT_NEAR(t.running_log_likelihood(), t.exact_log_likelihood(),
                1e-9 * (1 + std::abs(t.exact_log_likelihood())));
  }
}

TEST(Scan, ExampleOnePlain) {
  auto out = scan(kExample1, SearchVector::plain({3, 4}));
  ASSERT_TRUE(out.ok());
  const auto a = successors_of(out.system, 'A');
  ASSERT_EQ(a.size(), 2u);
  EXPECT_DOUBLE_EQ(a.at("AAA"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(a.at("BBB"), 1.0 / 3.0);
  EXPECT_EQ(out.lengths_used, 1u);
  EXPECT_EQ(out.entries_read, 1u);
  EXPECT_NEAR(out.log_probability, 2 * std::log(2.0 / 3.0) + std::log(1.0 / 3.0), 1e-12);
}

TEST(Scan, ExampleOnePrefixLimited) {
  auto out = scan(kExample1, SearchVector::prefix_limited({0, 3, 0, 4}));
  ASSERT_TRUE(out.ok());
  const auto a = successors_of(out.system, 'A');
  ASSERT_EQ(a.size(), 3u);
  for (const char* w : {"AAA", "AAAB", "BB"}) EXPECT_DOUBLE_EQ(a.at(w), 1.0 / 3.0) << w;
  EXPECT_EQ(out.lengths_used, 2u);
  ASSERT_EQ(out.derivations.size(), 1u);
  EXPECT_TRUE(is_consistent(out.derivations[0]));
}

TEST(Scan, ShrinkingIsIncompatible) {
  auto out = scan(SequenceSet{{{"AA", "A"}}}, SearchVector::plain({1}));
  EXPECT_EQ(out.status, ScanStatus::incompatible);
  EXPECT_EQ(out.failure.symbol, 1u);
}

TEST(Scan, LengthTooLargeMarksLargerValues) {
  auto out = scan(kExample1, SearchVector::plain({8}));
  EXPECT_EQ(out.status, ScanStatus::incompatible);
  EXPECT_TRUE(out.larger_values_fail);
  EXPECT_EQ(out.entries_read, 1u);
}

TEST(Scan, ExtensionRequestedThenLimited) {
  SequenceSet rho{{{"AB", "ABBA"}}};
  // B never seen before; A takes one symbol, B needs a length: y runs out.
  auto first = scan(rho, SearchVector::plain({1}));
  ASSERT_TRUE(first.ok());
  SequenceSet three{{{"ABC", "AABBCC"}}};
  auto need = scan(three, SearchVector::plain({2}));
  EXPECT_EQ(need.status, ScanStatus::needs_extension);
  SearchVector v = SearchVector::plain({2});
  v.extensions = {2};
  auto done = scan(three, v);
  ASSERT_TRUE(done.ok());
  EXPECT_EQ(successors_of(done.system, 'B').begin()->first, "BB");
  SequenceSet four{{{"ABCD", "AABBCCDD"}}};
  SearchVector w = SearchVector::plain({2});
  w.extensions = {2};
  EXPECT_EQ(scan(four, w).status, ScanStatus::incompatible);
  EXPECT_EQ(scan(four, w, 2).status, ScanStatus::needs_extension);
}

TEST(Scan, IdentityForSymbolsNeverRewritten) {
  auto out = scan(SequenceSet{{{"A", "AB"}}}, SearchVector::plain({1}));
  ASSERT_TRUE(out.ok());
  ASSERT_NE(out.system.find('B', "B"), nullptr);
  EXPECT_TRUE(validate(out.system).ok());
}

// Successful scans replay: traces equal the input, probabilities are counts
// over totals, and the reported fitness is the recomputed derivation
// probability.
TEST(ScanProperties, SuccessesReplayExactly) {
  std::mt19937_64 rng(21);
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto rho = small_case(seed, 1 + seed % 3);
    for (int k = 0; k < 30; ++k) {
      const Mode mode = k % 2 ? Mode::plain : Mode::prefix_limited;
      auto v = random_vector(mode, 3, budget_cap(rho), rng);
      auto out = scan_extended(rho, v, rng);
      if (!out.ok()) continue;
      ++successes;
      ASSERT_TRUE(validate(out.system).ok());
      std::map<std::pair<Symbol, Word>, double> uses;
      std::map<Symbol, double> totals;
      double total = 0.0;
      for (std::size_t i = 0; i < rho.sequences.size(); ++i) {
        const auto& d = out.derivations[i];
        ASSERT_EQ(d.trace, rho.sequences[i]);
        ASSERT_TRUE(is_consistent(d));
        total += derivation_log_probability(out.system, d);
        for (const auto& step : d.sigma) {
          for (const auto& p : step) {
            uses[{p.predecessor, p.successor}] += 1;
            totals[p.predecessor] += 1;
          }
        }
      }
      EXPECT_NEAR(total, out.log_probability, 1e-9 * (1 + std::abs(total)));
      for (const auto& [rule, n] : uses) {
        EXPECT_NEAR(out.system.find(rule.first, rule.second)->probability,
                    n / totals[rule.first], 1e-12);
      }
    }
  }
  EXPECT_GT(successes, 50);
}

TEST(ScanProperties, Deterministic) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rho = small_case(seed, 2);
    auto v = random_vector(Mode::prefix_limited, 3, budget_cap(rho), rng);
    auto a = scan_extended(rho, v, rng);
    auto b = scan(rho, v);
    expect_same(a, b);
  }
}

// Entries past entries_read, larger slack budgets and larger too-long
// lengths leave the outcome unchanged.
TEST(ScanProperties, PruningMetadataIsSound) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(1, 10);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto rho = small_case(seed, 1 + seed % 2);
    const int cap = budget_cap(rho);
    for (int k = 0; k < 25; ++k) {
      const Mode mode = k % 3 ? Mode::prefix_limited : Mode::plain;
      auto v = random_vector(mode, 3, cap, rng);
      auto base = scan_extended(rho, v, rng);

      SearchVector changed = v;
      for (std::size_t i = base.entries_read; i < changed.entries.size(); ++i) {
        const bool budget = mode == Mode::prefix_limited && i % 2 == 0;
        changed.entries[i] = budget ? int(rng() % 5) : len(rng);
      }
      auto tail = scan(rho, changed);
      if (base.status != ScanStatus::needs_extension) expect_same(base, tail);

      for (const auto& s : base.slack_budgets) {
        ASSERT_LT(s.index, base.entries_read);
        SearchVector bigger = v;
        bigger.entries[s.index] = std::max<int>(bigger.entries[s.index], s.greedy_choices) + 3;
        expect_same(base, scan(rho, bigger));
        SearchVector exact = v;
        exact.entries[s.index] = static_cast<int>(s.greedy_choices);
        expect_same(base, scan(rho, exact));
      }
      if (base.larger_values_fail) {
        SearchVector larger = v;
        const std::size_t idx = base.entries_read - 1;
        if (idx < larger.entries.size() && larger.entries[idx] < 10) {
          larger.entries[idx] += 1;
          EXPECT_EQ(scan(rho, larger).status, ScanStatus::incompatible);
        }
      }
    }
  }
}

// Any plain success is reproduced by the prefix-limited form with budgets
// at the cap.
TEST(ScanProperties, PrefixLimitedSubsumesPlain) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto rho = small_case(seed, 1 + seed % 3);
    const int cap = budget_cap(rho);
    for (int k = 0; k < 20; ++k) {
      auto v = random_vector(Mode::plain, 3, cap, rng);
      auto plain = scan_extended(rho, v, rng);
      if (!plain.ok()) continue;
      SearchVector pl;
      pl.mode = Mode::prefix_limited;
      for (int y : v.entries) {
        pl.entries.push_back(cap);
        pl.entries.push_back(y);
      }
      pl.extensions = v.extensions;
      auto limited = scan(rho, pl);
      expect_same(plain, limited);
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(ScanProperties, BoundAbortsOnlyBelowBound) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto rho = small_case(seed, 2);
    auto v = random_vector(Mode::plain, 3, 0, rng);
    auto full = scan_extended(rho, v, rng);
    if (!full.ok()) continue;
    ScanOptions loose;
    loose.bound = full.log_probability - 1e-6;
    EXPECT_TRUE(scan(rho, v, loose).ok());
    ScanOptions tight;
    tight.bound = full.log_probability + 1e-6;
    EXPECT_EQ(scan(rho, v, tight).status, ScanStatus::dominated);
  }
}

TEST(BudgetCap, CountsPredecessorPositions) {
  EXPECT_EQ(budget_cap(kExample1), 3);
  EXPECT_EQ(budget_cap(SequenceSet{{{"A", "AB", "ABA"}, {"AA", "AAA", "AAAA"}}}), 1 + 2 + 2 + 3);
}
