#pragma once

// Stochastic context-free L-systems: data model, validation, stochastic
// derivation and derivation probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace s0l {

using Symbol = char;
using Word = std::string;
using Rng = std::mt19937_64;

inline constexpr double kProbabilityTolerance = 1e-9;

class GrammarError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A symbol is any printable, non-blank ASCII character other than the
/// three characters the text formats reserve (`#`, `:`, `@`).
inline bool is_valid_symbol(Symbol c) {
  const auto u = static_cast<unsigned char>(c);
  return u > 0x20 && u < 0x7f && c != '#' && c != ':' && c != '@';
}

struct Production {
  Symbol predecessor{};
  Word successor;
  double probability = 1.0;

  bool same_rule(const Production& other) const {
    return predecessor == other.predecessor && successor == other.successor;
  }
  bool operator==(const Production&) const = default;
};

struct Axiom {
  Word word;
  double probability = 1.0;
  bool operator==(const Axiom&) const = default;
};

struct S0LSystem {
  std::vector<Symbol> alphabet;  // sorted, unique
  std::vector<Axiom> axioms;
  std::vector<Production> productions;

  bool has_symbol(Symbol s) const {
    return std::binary_search(alphabet.begin(), alphabet.end(), s);
  }

  std::vector<const Production*> productions_of(Symbol s) const {
    std::vector<const Production*> out;
    for (const auto& p : productions) {
      if (p.predecessor == s) out.push_back(&p);
    }
    return out;
  }

  /// Production with the given predecessor and successor, or nullptr.
  const Production* find(Symbol predecessor, const Word& successor) const {
    for (const auto& p : productions) {
      if (p.predecessor == predecessor && p.successor == successor) return &p;
    }
    return nullptr;
  }

  const Axiom* find_axiom(const Word& word) const {
    for (const auto& a : axioms) {
      if (a.word == word) return &a;
    }
    return nullptr;
  }

  bool operator==(const S0LSystem&) const = default;
};

/// Sorts and deduplicates an alphabet in place.
inline void normalize_alphabet(std::vector<Symbol>& alphabet) {
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
}

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate(const S0LSystem& system) {
  ValidationReport report;
  auto complain = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  auto check_word = [&](const Word& w, const std::string& where) {
    if (w.empty()) {
      complain(where + " is empty");
      return;
    }
    for (Symbol c : w) {
      if (!system.has_symbol(c)) {
        complain(where + " uses symbol " + std::string(1, c) + " outside the alphabet");
      }
    }
  };

  if (system.alphabet.empty()) complain("alphabet is empty");
  for (Symbol s : system.alphabet) {
    if (!is_valid_symbol(s)) complain("invalid symbol character in alphabet");
  }
  if (!std::is_sorted(system.alphabet.begin(), system.alphabet.end()) ||
      std::adjacent_find(system.alphabet.begin(), system.alphabet.end()) != system.alphabet.end()) {
    complain("alphabet is not a sorted set");
  }

  if (system.axioms.empty()) complain("no axiom");
  double start_total = 0.0;
  for (const auto& a : system.axioms) {
    check_word(a.word, "axiom " + a.word);
    if (!(a.probability > 0.0 && a.probability <= 1.0)) {
      complain("axiom " + a.word + " probability outside (0,1]");
    }
    start_total += a.probability;
  }
  for (std::size_t i = 0; i < system.axioms.size(); ++i) {
    for (std::size_t j = i + 1; j < system.axioms.size(); ++j) {
      if (system.axioms[i].word == system.axioms[j].word) {
        complain("duplicate axiom " + system.axioms[i].word);
      }
    }
  }
  if (!system.axioms.empty() && std::abs(start_total - 1.0) > kProbabilityTolerance) {
    std::ostringstream os;
    os << "axiom probabilities sum to " << start_total;
    complain(os.str());
  }

  std::map<Symbol, double> totals;
  for (std::size_t i = 0; i < system.productions.size(); ++i) {
    const auto& p = system.productions[i];
    const std::string name = std::string(1, p.predecessor) + "->" + p.successor;
    if (!system.has_symbol(p.predecessor)) {
      complain("production " + name + " has predecessor outside the alphabet");
    }
    check_word(p.successor, "successor of " + name);
    if (!(p.probability > 0.0 && p.probability <= 1.0)) {
      complain("production " + name + " probability outside (0,1]");
    }
    for (std::size_t j = i + 1; j < system.productions.size(); ++j) {
      if (p.same_rule(system.productions[j])) complain("duplicate production " + name);
    }
    totals[p.predecessor] += p.probability;
  }
  for (Symbol s : system.alphabet) {
    auto it = totals.find(s);
    if (it == totals.end()) {
      complain(std::string(1, s) + " has no production");
    } else if (std::abs(it->second - 1.0) > kProbabilityTolerance) {
      std::ostringstream os;
      os << s << " probabilities sum to " << it->second;
      complain(os.str());
    }
  }
  return report;
}

/// Throws GrammarError listing every violation.
inline void require_valid(const S0LSystem& system) {
  auto report = validate(system);
  if (report.ok()) return;
  std::string msg = "invalid S0L-system:";
  for (const auto& v : report.violations) msg += "\n  " + v;
  throw GrammarError(msg);
}

// ---------------------------------------------------------------------------
// Derivation

/// A trace together with the production applied at every (step, position).
struct Derivation {
  std::vector<Word> trace;
  std::vector<std::vector<Production>> sigma;  // sigma[j][l] rewrites trace[j][l]

  std::size_t steps() const { return sigma.size(); }
};

/// True iff sigma is shaped like the trace and every step concatenates to
/// the next word.
inline bool is_consistent(const Derivation& d) {
  if (d.trace.empty() || d.sigma.size() + 1 != d.trace.size()) return false;
  for (std::size_t j = 0; j < d.sigma.size(); ++j) {
    const Word& from = d.trace[j];
    if (d.sigma[j].size() != from.size()) return false;
    Word joined;
    for (std::size_t l = 0; l < from.size(); ++l) {
      if (d.sigma[j][l].predecessor != from[l]) return false;
      joined += d.sigma[j][l].successor;
    }
    if (joined != d.trace[j + 1]) return false;
  }
  return true;
}

namespace detail {

/// Productions grouped per symbol for sampling.
class SuccessorSampler {
public:
  explicit SuccessorSampler(const S0LSystem& system) : system_(&system) {
    for (std::size_t i = 0; i < system.productions.size(); ++i) {
      auto& g = groups_[system.productions[i].predecessor];
      g.indices.push_back(i);
      g.weights.push_back(system.productions[i].probability);
    }
  }

  const Production& sample(Symbol s, Rng& rng) const {
    auto it = groups_.find(s);
    if (it == groups_.end()) {
      throw GrammarError(std::string("symbol ") + s + " has no production");
    }
    const auto& g = it->second;
    if (g.indices.size() == 1) return system_->productions[g.indices.front()];
    std::discrete_distribution<std::size_t> pick(g.weights.begin(), g.weights.end());
    return system_->productions[g.indices[pick(rng)]];
  }

private:
  struct Group {
    std::vector<std::size_t> indices;
    std::vector<double> weights;
  };
  const S0LSystem* system_;
  std::map<Symbol, Group> groups_;
};

inline Word derive_step_impl(const SuccessorSampler& sampler, const S0LSystem& system,
                             const Word& word, Rng& rng, std::vector<Production>& applied) {
  if (word.empty()) throw GrammarError("cannot rewrite an empty word");
  Word next;
  applied.clear();
  applied.reserve(word.size());
  for (Symbol c : word) {
    if (!system.has_symbol(c)) {
      throw GrammarError(std::string("unknown symbol ") + c);
    }
    const Production& p = sampler.sample(c, rng);
    next += p.successor;
    applied.push_back(p);
  }
  return next;
}

}  // namespace detail

struct StepResult {
  Word next;
  std::vector<Production> applied;
};

/// One parallel rewriting step; every symbol independently samples a
/// successor according to its production probabilities.
inline StepResult derive_step(const S0LSystem& system, const Word& word, Rng& rng) {
  detail::SuccessorSampler sampler(system);
  StepResult out;
  out.next = detail::derive_step_impl(sampler, system, word, rng, out.applied);
  return out;
}

/// Samples an axiom per the start probabilities and rewrites it `steps` times.
inline Derivation derive_sequence(const S0LSystem& system, std::size_t steps, Rng& rng) {
  if (steps < 1) throw GrammarError("derivation needs at least one step");
  if (system.axioms.empty()) throw GrammarError("system has no axiom");
  detail::SuccessorSampler sampler(system);

  Derivation d;
  std::size_t axiom = 0;
  if (system.axioms.size() > 1) {
    std::vector<double> w;
    for (const auto& a : system.axioms) w.push_back(a.probability);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    axiom = pick(rng);
  }
  d.trace.push_back(system.axioms[axiom].word);
  for (std::size_t j = 0; j < steps; ++j) {
    std::vector<Production> applied;
    Word next = detail::derive_step_impl(sampler, system, d.trace.back(), rng, applied);
    d.sigma.push_back(std::move(applied));
    d.trace.push_back(std::move(next));
  }
  return d;
}

/// log P(d). Probabilities are looked up in `system`, not taken from sigma.
inline double derivation_log_probability(const S0LSystem& system, const Derivation& d,
                                         bool include_axiom = false) {
  double total = 0.0;
  if (include_axiom) {
    if (d.trace.empty()) throw GrammarError("derivation has an empty trace");
    const Axiom* a = system.find_axiom(d.trace.front());
    if (a == nullptr) throw GrammarError("derivation starts from a word that is not an axiom");
    total += std::log(a->probability);
  }
  // Repeated rules are common; count them and take each log once.
  std::map<std::pair<Symbol, Word>, std::size_t> uses;
  for (const auto& step : d.sigma) {
    for (const auto& p : step) ++uses[{p.predecessor, p.successor}];
  }
  for (const auto& [rule, n] : uses) {
    const Production* p = system.find(rule.first, rule.second);
    if (p == nullptr) {
      throw GrammarError(std::string("derivation uses ") + rule.first + "->" + rule.second +
                         " which is not a production of the system");
    }
    total += static_cast<double>(n) * std::log(p->probability);
  }
  return total;
}

/// Log of the product of independent derivation probabilities.
inline double joint_log_probability(std::span<const double> log_probabilities) {
  if (log_probabilities.empty()) throw std::invalid_argument("no derivations");
  return std::accumulate(log_probabilities.begin(), log_probabilities.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Observed input

/// M sequences of m words each.
struct SequenceSet {
  std::vector<std::vector<Word>> sequences;

  std::size_t size() const { return sequences.size(); }
  std::size_t words_per_sequence() const {
    return sequences.empty() ? 0 : sequences.front().size();
  }
  bool operator==(const SequenceSet&) const = default;
};

inline ValidationReport validate(const SequenceSet& rho) {
  ValidationReport report;
  if (rho.sequences.empty()) {
    report.violations.push_back("no sequences");
    return report;
  }
  const std::size_t m = rho.sequences.front().size();
  if (m < 2) report.violations.push_back("sequences need at least two words");
  for (std::size_t i = 0; i < rho.sequences.size(); ++i) {
    const auto& seq = rho.sequences[i];
    if (seq.size() != m) {
      report.violations.push_back("sequence " + std::to_string(i + 1) + " has " +
                                  std::to_string(seq.size()) + " words, expected " +
                                  std::to_string(m));
    }
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (seq[j].empty()) {
        report.violations.push_back("sequence " + std::to_string(i + 1) + " word " +
                                    std::to_string(j + 1) + " is empty");
      }
      for (Symbol c : seq[j]) {
        if (!is_valid_symbol(c)) {
          report.violations.push_back("sequence " + std::to_string(i + 1) +
                                      " contains an invalid symbol character");
          break;
        }
      }
    }
  }
  return report;
}

/// Truncates every sequence to the length of the shortest one.
inline SequenceSet truncate_to_common_length(SequenceSet rho) {
  if (rho.sequences.empty()) return rho;
  std::size_t m = rho.sequences.front().size();
  for (const auto& s : rho.sequences) m = std::min(m, s.size());
  for (auto& s : rho.sequences) s.resize(m);
  return rho;
}

inline std::vector<Symbol> infer_alphabet(const SequenceSet& rho) {
  std::vector<Symbol> out;
  for (const auto& seq : rho.sequences) {
    for (const auto& w : seq) out.insert(out.end(), w.begin(), w.end());
  }
  normalize_alphabet(out);
  return out;
}

/// Distinct first words in order of first appearance, weighted by count / M.
inline std::vector<Axiom> infer_axioms(const SequenceSet& rho) {
  std::vector<Axiom> out;
  std::vector<std::size_t> counts;
  for (const auto& seq : rho.sequences) {
    if (seq.empty()) continue;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Axiom& a) { return a.word == seq.front(); });
    if (it == out.end()) {
      out.push_back({seq.front(), 0.0});
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it - out.begin())];
    }
  }
  const auto total = static_cast<double>(rho.sequences.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].probability = static_cast<double>(counts[i]) / total;
  }
  return out;
}

}  // namespace s0l
