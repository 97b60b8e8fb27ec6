#pragma once

// Procedural benchmark generation: random S0L-systems whose shape statistics
// (successors per symbol, successor lengths, distinct symbols per successor)
// follow those observed in published L-systems, plus input sequences derived
// from them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "s0l/grammar.hpp"

namespace s0l {

class GenerationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kDefaultSymbolPool = "ABCDEFGHIJK";
inline constexpr std::size_t kResampleBudget = 1000;

struct GeneratorConfig {
  std::size_t successors = 3;  // S, total production count
  bool forbid_prefix_pairs = false;
  std::uint64_t seed = 0;
  std::size_t words = 5;  // m, words per sequence
  std::size_t sequences = 1;  // M
  std::string symbol_pool{kDefaultSymbolPool};
  /// Probabilities are drawn in steps of 1/granularity.
  int probability_granularity = 100;
  bool include_axiom = false;

  bool valid() const {
    return successors >= 3 && words >= 2 && sequences >= 1 && !symbol_pool.empty() &&
           probability_granularity >= 2;
  }
};

struct GeneratedCase {
  std::string id;
  S0LSystem system;
  SequenceSet inputs;
  std::vector<Derivation> derivations;
  double log_probability = 0.0;
  std::uint64_t seed = 0;
  std::size_t successors = 0;
};

/// Successor-count draw for one symbol: 1, 2, 3 with 50/40/10%.
inline int draw_successor_count(Rng& rng) {
  std::discrete_distribution<int> d({50.0, 40.0, 10.0});
  return d(rng) + 1;
}

/// Per-symbol successor counts summing to `total`. Symbol i of the result is
/// the i-th pool symbol. At least one symbol always gets two or more.
inline std::vector<int> assign_successor_counts(std::size_t total, Rng& rng,
                                                std::size_t pool_size = kDefaultSymbolPool.size()) {
  if (total < 3) throw GenerationError("need at least 3 successors");
  std::vector<int> counts;
  std::size_t sum = 0;
  while (sum < total) {
    if (counts.size() == pool_size) {
      throw GenerationError("symbol pool exhausted before reaching " + std::to_string(total) +
                            " successors");
    }
    auto c = static_cast<std::size_t>(draw_successor_count(rng));
    c = std::min(c, total - sum);
    counts.push_back(static_cast<int>(c));
    sum += c;
  }
  const bool deterministic =
      std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; });
  if (deterministic) {
    // Give one symbol a second successor and drop another.
    std::uniform_int_distribution<std::size_t> pick(0, counts.size() - 1);
    const std::size_t gains = pick(rng);
    std::size_t loses = pick(rng);
    while (loses == gains) loses = pick(rng);
    ++counts[gains];
    counts.erase(counts.begin() + static_cast<long>(loses));
  }
  return counts;
}

/// n probabilities, each at least 1/granularity, summing to one.
inline std::vector<double> assign_probabilities(std::size_t n, Rng& rng, int granularity = 100) {
  if (n == 0) throw GenerationError("no successors");
  if (n == 1) return {1.0};
  if (static_cast<std::size_t>(granularity) < n) {
    throw GenerationError("granularity too coarse for " + std::to_string(n) + " successors");
  }
  std::vector<int> units;
  int remaining = granularity;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const int upper = remaining - static_cast<int>(n - k - 1);
    const int p = std::uniform_int_distribution<int>(1, upper)(rng);
    units.push_back(p);
    remaining -= p;
  }
  units.push_back(remaining);
  std::vector<double> out;
  for (int u : units) out.push_back(static_cast<double>(u) / granularity);
  return out;
}

/// Successor length over 1..10 with weights 4,16,20,20,20,16,4,2,1,1 (%).
inline int sample_successor_length(Rng& rng) {
  // Quoted weights add to 104. 3-5 and 8-10 keep their quoted values, the
  // other four give up the extra 4 points in proportion.
  static const std::array<double, 10> weights{3.6, 14.4, 20, 20, 20, 14.4, 3.6, 2, 1, 1};
  std::discrete_distribution<int> d(weights.begin(), weights.end());
  return d(rng) + 1;
}

/// A word of the given length using exactly k distinct alphabet symbols, with
/// k uniform over 1..min(5, length, |alphabet|).
inline Word sample_successor_word(std::size_t length, const std::vector<Symbol>& alphabet,
                                  Rng& rng) {
  if (length < 1) throw GenerationError("successor length must be positive");
  if (alphabet.empty()) throw GenerationError("empty alphabet");
  const std::size_t max_distinct = std::min<std::size_t>({5, length, alphabet.size()});
  const auto distinct = std::uniform_int_distribution<std::size_t>(1, max_distinct)(rng);

  std::vector<Symbol> chosen;
  std::sample(alphabet.begin(), alphabet.end(), std::back_inserter(chosen), distinct, rng);
  std::shuffle(chosen.begin(), chosen.end(), rng);

  Word w(chosen.begin(), chosen.end());
  std::uniform_int_distribution<std::size_t> pick(0, chosen.size() - 1);
  while (w.size() < length) w.push_back(chosen[pick(rng)]);
  std::shuffle(w.begin(), w.end(), rng);
  return w;
}

/// One is a prefix of the other (including equality).
inline bool prefix_related(const Word& a, const Word& b) {
  return a.size() <= b.size() ? b.starts_with(a) : a.starts_with(b);
}

inline bool has_prefix_pair(const S0LSystem& g) {
  for (std::size_t i = 0; i < g.productions.size(); ++i) {
    for (std::size_t j = i + 1; j < g.productions.size(); ++j) {
      const auto& a = g.productions[i];
      const auto& b = g.productions[j];
      if (a.predecessor == b.predecessor && prefix_related(a.successor, b.successor)) return true;
    }
  }
  return false;
}

inline S0LSystem generate_system(const GeneratorConfig& config, Rng& rng) {
  if (!config.valid()) throw GenerationError("invalid generator configuration");
  const auto counts = assign_successor_counts(config.successors, rng, config.symbol_pool.size());

  S0LSystem g;
  g.alphabet.assign(config.symbol_pool.begin(),
                    config.symbol_pool.begin() + static_cast<long>(counts.size()));
  normalize_alphabet(g.alphabet);

  for (std::size_t s = 0; s < counts.size(); ++s) {
    const Symbol a = config.symbol_pool[s];
    const auto n = static_cast<std::size_t>(counts[s]);
    const auto probs = assign_probabilities(n, rng, config.probability_granularity);
    std::vector<Word> chosen;
    for (std::size_t k = 0; k < n; ++k) {
      Word w;
      std::size_t attempts = 0;
      while (true) {
        if (++attempts > kResampleBudget) {
          throw GenerationError(std::string("cannot draw distinct successors for ") + a);
        }
        w = sample_successor_word(static_cast<std::size_t>(sample_successor_length(rng)),
                                  g.alphabet, rng);
        const bool clash = std::any_of(chosen.begin(), chosen.end(), [&](const Word& o) {
          return config.forbid_prefix_pairs ? prefix_related(o, w) : o == w;
        });
        if (!clash) break;
      }
      chosen.push_back(w);
      g.productions.push_back({a, std::move(w), probs[k]});
    }
  }
  g.axioms.push_back(
      {sample_successor_word(static_cast<std::size_t>(sample_successor_length(rng)), g.alphabet,
                             rng),
       1.0});
  return g;
}

/// M pairwise-distinct sequences of `words` words derived from `system`.
inline void derive_inputs(const S0LSystem& system, std::size_t sequences, std::size_t words,
                          bool include_axiom, Rng& rng, GeneratedCase& out) {
  out.inputs.sequences.clear();
  out.derivations.clear();
  std::size_t rejected = 0;
  while (out.inputs.sequences.size() < sequences) {
    auto d = derive_sequence(system, words - 1, rng);
    const bool duplicate = std::find(out.inputs.sequences.begin(), out.inputs.sequences.end(),
                                     d.trace) != out.inputs.sequences.end();
    if (duplicate) {
      if (++rejected >= kResampleBudget) {
        throw GenerationError("system keeps producing duplicate sequences");
      }
      continue;
    }
    rejected = 0;
    out.inputs.sequences.push_back(d.trace);
    out.derivations.push_back(std::move(d));
  }
  std::vector<double> logs;
  for (const auto& d : out.derivations) {
    logs.push_back(derivation_log_probability(system, d, include_axiom));
  }
  out.log_probability = joint_log_probability(logs);
}

inline GeneratedCase generate_case(const GeneratorConfig& config, Rng& rng) {
  GeneratedCase c;
  c.system = generate_system(config, rng);
  c.seed = config.seed;
  c.successors = config.successors;
  derive_inputs(c.system, config.sequences, config.words, config.include_axiom, rng, c);
  return c;
}

/// Seeds a generator with the case's own stream so results do not depend on
/// generation order.
inline GeneratedCase generate_case(const GeneratorConfig& config) {
  Rng rng(config.seed);
  return generate_case(config, rng);
}

// ---------------------------------------------------------------------------
// Data sets

enum class DatasetKind { prefix_free, unrestricted, varying_m };

struct DatasetOptions {
  double scale = 1.0;  // fraction of the 60 systems per setting
  std::size_t words = 5;
  std::size_t min_successors = 0;  // 0 = kind default
  std::size_t max_successors = 0;
  std::size_t max_sequences = 10;  // varying_m: M = 1..max_sequences
  /// Attempts per case before giving up on a seed family.
  std::size_t attempts = 100;
};

inline std::size_t systems_per_setting(double scale) {
  return static_cast<std::size_t>(std::max(1.0, std::round(60.0 * scale)));
}

inline std::uint64_t case_seed(std::uint64_t master, std::uint64_t index, std::uint64_t attempt) {
  std::uint64_t z = master ^ (0x9e3779b97f4a7c15ULL * (index + 1)) ^ (attempt << 48);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

template <typename Make>
auto retry_case(std::uint64_t master, std::uint64_t index, std::size_t attempts,
                         Make make) {
  std::string last_error;
  for (std::size_t a = 0; a < attempts; ++a) {
    const auto seed = case_seed(master, index, a);
    try {
      return make(seed);
    } catch (const GenerationError& e) {
      last_error = e.what();
    }
  }
  throw GenerationError("case " + std::to_string(index) + " (seed " +
                        std::to_string(case_seed(master, index, 0)) + "): " + last_error);
}

inline std::string pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))),
                     '0') +
         s;
}

}  // namespace detail

inline std::vector<GeneratedCase> generate_dataset(DatasetKind kind, std::uint64_t seed,
                                                   const DatasetOptions& options = {}) {
  std::vector<GeneratedCase> out;
  const std::size_t per = systems_per_setting(options.scale);
  std::uint64_t index = 0;

  if (kind == DatasetKind::prefix_free || kind == DatasetKind::unrestricted) {
    const std::size_t lo = options.min_successors ? options.min_successors : 3;
    const std::size_t hi =
        options.max_successors ? options.max_successors : (kind == DatasetKind::prefix_free ? 10 : 9);
    for (std::size_t s = lo; s <= hi; ++s) {
      for (std::size_t k = 0; k < per; ++k, ++index) {
        auto c = detail::retry_case(seed, index, options.attempts, [&](std::uint64_t cs) {
          GeneratorConfig cfg;
          cfg.successors = s;
          cfg.forbid_prefix_pairs = kind == DatasetKind::prefix_free;
          cfg.seed = cs;
          cfg.words = options.words;
          cfg.sequences = 1;
          return generate_case(cfg);
        });
        c.id = (kind == DatasetKind::prefix_free ? "pl-S" : "npl-S") + detail::pad(s, 2) + "-" +
               detail::pad(k, 3);
        out.push_back(std::move(c));
      }
    }
    return out;
  }

  const std::size_t lo = options.min_successors ? options.min_successors : 3;
  const std::size_t hi = options.max_successors ? options.max_successors : 9;
  for (std::size_t k = 0; k < per; ++k, ++index) {
    // One hidden system, then one input set per M from the same system. A
    // degenerate system is retried as a whole.
    auto family = detail::retry_case(seed, index, options.attempts, [&](std::uint64_t cs) {
      Rng rng(cs);
      GeneratorConfig cfg;
      cfg.successors = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
      cfg.seed = cs;
      cfg.words = options.words;
      const auto system = generate_system(cfg, rng);
      std::vector<GeneratedCase> cases;
      for (std::size_t m = 1; m <= options.max_sequences; ++m) {
        GeneratedCase c;
        c.system = system;
        c.seed = cs;
        c.successors = cfg.successors;
        Rng inputs(case_seed(cs, m, 0));
        derive_inputs(system, m, cfg.words, cfg.include_axiom, inputs, c);
        c.id = "vm-" + detail::pad(k, 3) + "-M" + detail::pad(m, 2);
        cases.push_back(std::move(c));
      }
      return cases;
    });
    for (auto& c : family) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace s0l
