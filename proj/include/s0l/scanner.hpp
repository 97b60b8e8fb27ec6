#pragma once

// Greedy successor-selection scan. A search vector of successor lengths (and,
// in prefix-limited mode, greedy budgets) is turned into productions and
// derivations for every observed sequence by scanning each word pair left to
// right and applying, at every symbol, the first applicable rule:
//
//   1. last symbol of the word: take everything that remains,
//   2. greedy: reuse the most frequently chosen known successor that matches,
//   3. build a successor whose length is the next vector entry,
//   4. fail.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "s0l/grammar.hpp"

namespace s0l {

inline constexpr int kMinSuccessorLength = 1;
inline constexpr int kMaxSuccessorLength = 10;

enum class Mode { plain, prefix_limited };

/// Integer vector parameterizing a scan.
///
/// Plain form holds y_1..y_N. Prefix-limited form interleaves greedy budgets:
/// t_1, y_1, ..., t_N, y_N, where t_z bounds how many greedy choices may be
/// made before y_z must be used. Extension entries are extra successor lengths
/// appended after the base entries when a scan runs out.
struct SearchVector {
  Mode mode = Mode::plain;
  std::vector<int> entries;
  std::vector<int> extensions;

  static SearchVector plain(std::vector<int> lengths) {
    return {Mode::plain, std::move(lengths), {}};
  }
  static SearchVector prefix_limited(std::vector<int> interleaved) {
    return {Mode::prefix_limited, std::move(interleaved), {}};
  }

  std::size_t dimensions() const {
    return mode == Mode::plain ? entries.size() : entries.size() / 2;
  }
  /// Entries in flat order: base entries then extensions.
  std::size_t flat_size() const { return entries.size() + extensions.size(); }
  int flat(std::size_t i) const {
    return i < entries.size() ? entries[i] : extensions[i - entries.size()];
  }
  std::vector<int> flattened() const {
    std::vector<int> out = entries;
    out.insert(out.end(), extensions.begin(), extensions.end());
    return out;
  }

  /// Flat index of the successor length used by dimension z (0-based).
  std::size_t length_index(std::size_t z) const {
    const std::size_t n = dimensions();
    if (z >= n) return entries.size() + (z - n);
    return mode == Mode::plain ? z : 2 * z + 1;
  }
  /// Flat index of the greedy budget of dimension z (prefix-limited, z < N).
  std::size_t budget_index(std::size_t z) const { return 2 * z; }

  bool well_formed() const {
    if (mode == Mode::prefix_limited && entries.size() % 2 != 0) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const bool is_budget = mode == Mode::prefix_limited && i % 2 == 0;
      if (is_budget ? entries[i] < 0
                    : entries[i] < kMinSuccessorLength || entries[i] > kMaxSuccessorLength) {
        return false;
      }
    }
    for (int e : extensions) {
      if (e < kMinSuccessorLength || e > kMaxSuccessorLength) return false;
    }
    return true;
  }

  bool operator==(const SearchVector&) const = default;
};

// ---------------------------------------------------------------------------

/// Per-symbol successors chosen so far, with selection counts.
///
/// Also maintains the log-likelihood of all selections under count-normalized
/// probabilities, sum_A sum_k c_k log(c_k / n_A), incrementally. That quantity
/// never increases as selections are added.
class SuccessorTable {
public:
  struct Entry {
    Word successor;
    std::size_t count = 0;
    std::size_t created = 0;
  };

  const std::vector<Entry>& successors(Symbol s) const { return lists_[index(s)]; }
  std::size_t total(Symbol s) const { return totals_[index(s)]; }
  /// Largest count among the symbol's successors.
  std::size_t top(Symbol s) const { return tops_[index(s)]; }

  /// Enough to take back one record() call.
  struct Undo {
    std::size_t symbol;
    std::size_t entry;
    bool created;
    double log_likelihood;
    std::size_t top;
  };

  /// Inserts the successor or bumps its count; returns its entry.
  const Entry& record(Symbol s, std::string_view successor) { return record(s, successor, nullptr); }

  const Entry& record(Symbol s, std::string_view successor, Undo* undo) {
    auto& list = lists_[index(s)];
    Entry* hit = nullptr;
    for (auto& e : list) {
      if (e.successor == successor) {
        hit = &e;
        break;
      }
    }
    if (undo != nullptr) {
      *undo = {index(s), hit == nullptr ? list.size() : static_cast<std::size_t>(hit - list.data()),
               hit == nullptr, log_likelihood_, tops_[index(s)]};
    }
    if (hit == nullptr) {
      list.push_back({Word(successor), 0, next_created_++});
      hit = &list.back();
    }
    auto& n = totals_[index(s)];
    log_likelihood_ += xlogx(hit->count + 1) - xlogx(hit->count);
    log_likelihood_ -= xlogx(n + 1) - xlogx(n);
    ++hit->count;
    ++n;
    tops_[index(s)] = std::max(tops_[index(s)], hit->count);
    return *hit;
  }

  /// Reverts the matching record(); calls must be undone newest first.
  void undo(const Undo& u) {
    auto& list = lists_[u.symbol];
    --list[u.entry].count;
    --totals_[u.symbol];
    if (u.created) {
      list.pop_back();
      --next_created_;
    }
    log_likelihood_ = u.log_likelihood;
    tops_[u.symbol] = u.top;
  }

  /// Running value; may carry rounding drift, use exact_log_likelihood() for
  /// reported fitness.
  double running_log_likelihood() const { return log_likelihood_; }

  double exact_log_likelihood() const {
    double total = 0.0;
    for (std::size_t s = 0; s < lists_.size(); ++s) {
      if (totals_[s] == 0) continue;
      const double log_n = std::log(static_cast<double>(totals_[s]));
      for (const auto& e : lists_[s]) {
        const auto c = static_cast<double>(e.count);
        total += c * (std::log(c) - log_n);
      }
    }
    return total;
  }

  /// Symbols with at least one recorded successor, ascending.
  std::vector<Symbol> symbols() const {
    std::vector<Symbol> out;
    for (std::size_t s = 0; s < lists_.size(); ++s) {
      if (!lists_[s].empty()) out.push_back(static_cast<Symbol>(s));
    }
    return out;
  }

private:
  static std::size_t index(Symbol s) { return static_cast<unsigned char>(s) & 0x7f; }
  static double xlogx(std::size_t x) {
    return x == 0 ? 0.0 : static_cast<double>(x) * std::log(static_cast<double>(x));
  }

  std::array<std::vector<Entry>, 128> lists_{};
  std::array<std::size_t, 128> totals_{};
  std::array<std::size_t, 128> tops_{};
  std::size_t next_created_ = 0;
  double log_likelihood_ = 0.0;
};

/// Longest successor that still leaves one symbol for each remaining
/// predecessor. `position` is 1-based; `matched` symbols of `next` are taken.
struct LengthBounds {
  long min = 1;
  long max = 0;
  bool feasible() const { return max >= min; }
};

inline LengthBounds feasible_length_bounds(const Word& current, const Word& next,
                                           std::size_t position, std::size_t matched) {
  const auto remaining_predecessors = static_cast<long>(current.size() - position);
  return {1, static_cast<long>(next.size()) - static_cast<long>(matched) - remaining_predecessors};
}

/// Highest-count known successor of `symbol` that prefixes `suffix` and is no
/// longer than `max_length`; earliest created wins ties.
inline const SuccessorTable::Entry* greedy_select(const SuccessorTable& table, Symbol symbol,
                                                  std::string_view suffix, long max_length) {
  const SuccessorTable::Entry* best = nullptr;
  for (const auto& e : table.successors(symbol)) {
    if (static_cast<long>(e.successor.size()) > max_length) continue;
    if (!suffix.starts_with(e.successor)) continue;
    if (best == nullptr || e.count > best->count) best = &e;
  }
  return best;
}

// ---------------------------------------------------------------------------

enum class ScanStatus {
  success,
  incompatible,
  needs_extension,
  /// Aborted because the running log-likelihood fell below ScanOptions::bound.
  dominated,
};

struct ScanPosition {
  std::size_t sequence = 0;  // 0-based
  std::size_t word = 0;      // index of the predecessor word, 0-based
  std::size_t symbol = 0;    // 1-based position within that word
};

struct ScanOptions {
  std::size_t extension_limit = 1;
  /// Abort once the running log-likelihood drops strictly below this value.
  double bound = -std::numeric_limits<double>::infinity();
  bool build_derivations = true;
};

struct ScanOutcome {
  ScanStatus status = ScanStatus::incompatible;

  // success
  S0LSystem system;
  std::vector<Derivation> derivations;
  double log_probability = -std::numeric_limits<double>::infinity();

  ScanPosition failure;  // incompatible

  /// Length of the flat prefix of the vector that was read. The outcome is a
  /// function of that prefix alone.
  std::size_t entries_read = 0;
  /// Successor-length entries consumed by rule 3 (highest cursor reached).
  std::size_t lengths_used = 0;
  /// The failure was caused by the last read entry being too large; every
  /// larger value at that position fails the same way.
  bool larger_values_fail = false;
  /// Greedy budgets (flat index < entries_read) that never refused a greedy
  /// choice, with the number of greedy choices made under them. Any larger
  /// budget at such an index gives the same outcome.
  struct BudgetSlack {
    std::size_t index;
    std::size_t greedy_choices;
  };
  std::vector<BudgetSlack> slack_budgets;

  bool ok() const { return status == ScanStatus::success; }
};

namespace detail {

struct Choice {
  std::size_t start;
  std::size_t length;
};

class Scanner {
public:
  Scanner(const SequenceSet& rho, const SearchVector& y, const ScanOptions& opt)
      : rho_(rho), y_(y), opt_(opt), n_(y.dimensions()) {}

  ScanOutcome run() {
    ScanOutcome out;
    if (opt_.build_derivations) choices_.resize(rho_.sequences.size());
    for (std::size_t i = 0; i < rho_.sequences.size(); ++i) {
      const auto& seq = rho_.sequences[i];
      if (opt_.build_derivations) choices_[i].resize(seq.size() > 0 ? seq.size() - 1 : 0);
      for (std::size_t j = 0; j + 1 < seq.size(); ++j) {
        extensions_this_word_ = 0;
        auto status = scan_pair(i, j, out);
        if (status != ScanStatus::success) return finish(out, status);
      }
    }
    return finish(out, ScanStatus::success);
  }

private:
  void read(std::size_t flat) { read_ = std::max(read_, flat + 1); }

  void close_phase() {
    if (y_.mode == Mode::prefix_limited && cursor_ < n_ && !refused_) {
      slack_.push_back({y_.budget_index(cursor_), greedy_used_});
    }
    greedy_used_ = 0;
    refused_ = false;
  }

  ScanStatus take(Symbol a, std::string_view successor, std::size_t start,
                  std::vector<Choice>* record) {
    table_.record(a, successor);
    if (record != nullptr) record->push_back({start, successor.size()});
    if (table_.running_log_likelihood() < opt_.bound) return ScanStatus::dominated;
    return ScanStatus::success;
  }

  ScanStatus scan_pair(std::size_t i, std::size_t j, ScanOutcome& out) {
    const Word& from = rho_.sequences[i][j];
    const Word& to = rho_.sequences[i][j + 1];
    std::vector<Choice>* record = opt_.build_derivations ? &choices_[i][j] : nullptr;
    std::size_t matched = 0;

    for (std::size_t l = 1; l <= from.size(); ++l) {
      const Symbol a = from[l - 1];
      const auto bounds = feasible_length_bounds(from, to, l, matched);
      if (!bounds.feasible()) {
        out.failure = {i, j, l};
        return ScanStatus::incompatible;
      }
      const std::string_view rest = std::string_view(to).substr(matched);

      // Rule 1.
      if (l == from.size()) {
        if (auto s = take(a, rest, matched, record); s != ScanStatus::success) return s;
        matched = to.size();
        break;
      }

      // Rule 2.
      if (const auto* g = greedy_select(table_, a, rest, bounds.max)) {
        bool allowed = true;
        if (y_.mode == Mode::prefix_limited && cursor_ < n_) {
          read(y_.budget_index(cursor_));
          allowed = greedy_used_ < static_cast<std::size_t>(y_.entries[y_.budget_index(cursor_)]);
          if (!allowed) refused_ = true;
        }
        if (allowed) {
          ++greedy_used_;
          const std::size_t len = g->successor.size();
          if (auto s = take(a, rest.substr(0, len), matched, record); s != ScanStatus::success) {
            return s;
          }
          matched += len;
          continue;
        }
      }

      // Rule 3.
      if (cursor_ >= n_ && extensions_this_word_ >= opt_.extension_limit) {
        out.failure = {i, j, l};
        return ScanStatus::incompatible;
      }
      const std::size_t flat = y_.length_index(cursor_);
      if (flat >= y_.flat_size()) return ScanStatus::needs_extension;
      read(flat);
      const int k = y_.flat(flat);
      if (k < kMinSuccessorLength || k > bounds.max) {
        out.failure = {i, j, l};
        out.larger_values_fail = k > bounds.max;
        return ScanStatus::incompatible;
      }
      if (cursor_ >= n_) ++extensions_this_word_;
      close_phase();
      ++cursor_;
      const auto len = static_cast<std::size_t>(k);
      if (auto s = take(a, rest.substr(0, len), matched, record); s != ScanStatus::success) {
        return s;
      }
      matched += len;
    }
    return ScanStatus::success;
  }

  ScanOutcome& finish(ScanOutcome& out, ScanStatus status) {
    out.status = status;
    out.entries_read = read_;
    out.lengths_used = cursor_;
    if (status != ScanStatus::incompatible) out.larger_values_fail = false;
    close_phase();
    for (const auto& s : slack_) {
      if (s.index < read_) out.slack_budgets.push_back(s);
    }
    if (status == ScanStatus::success) {
      out.log_probability = table_.exact_log_likelihood();
      out.system = build_system();
      if (opt_.build_derivations) out.derivations = build_derivations(out.system);
    }
    return out;
  }

  S0LSystem build_system() const {
    S0LSystem g;
    g.alphabet = infer_alphabet(rho_);
    g.axioms = infer_axioms(rho_);
    for (Symbol s : g.alphabet) {
      const auto& list = table_.successors(s);
      if (list.empty()) {
        // Never rewritten in the input; identity keeps the system total.
        g.productions.push_back({s, Word(1, s), 1.0});
        continue;
      }
      const auto n = static_cast<double>(table_.total(s));
      for (const auto& e : list) {
        g.productions.push_back({s, e.successor, static_cast<double>(e.count) / n});
      }
    }
    return g;
  }

  std::vector<Derivation> build_derivations(const S0LSystem& g) const {
    std::vector<Derivation> out;
    for (std::size_t i = 0; i < rho_.sequences.size(); ++i) {
      Derivation d;
      d.trace = rho_.sequences[i];
      for (std::size_t j = 0; j < choices_[i].size(); ++j) {
        const Word& from = d.trace[j];
        const Word& to = d.trace[j + 1];
        std::vector<Production> step;
        step.reserve(from.size());
        for (std::size_t l = 0; l < from.size(); ++l) {
          const auto& c = choices_[i][j][l];
          Word succ = to.substr(c.start, c.length);
          step.push_back(*g.find(from[l], succ));
        }
        d.sigma.push_back(std::move(step));
      }
      out.push_back(std::move(d));
    }
    return out;
  }

  const SequenceSet& rho_;
  const SearchVector& y_;
  const ScanOptions& opt_;
  const std::size_t n_;

  SuccessorTable table_;
  std::vector<std::vector<std::vector<Choice>>> choices_;
  std::size_t cursor_ = 0;
  std::size_t read_ = 0;
  std::size_t greedy_used_ = 0;
  bool refused_ = false;
  std::size_t extensions_this_word_ = 0;
  std::vector<ScanOutcome::BudgetSlack> slack_;
};

}  // namespace detail

/// Runs the greedy scan of every sequence of `rho` (in order, sharing one
/// successor table) under the search vector `y`.
inline ScanOutcome scan(const SequenceSet& rho, const SearchVector& y,
                        const ScanOptions& options = {}) {
  return detail::Scanner(rho, y, options).run();
}

inline ScanOutcome scan(const SequenceSet& rho, const SearchVector& y,
                        std::size_t extension_limit) {
  ScanOptions opt;
  opt.extension_limit = extension_limit;
  return scan(rho, y, opt);
}

/// Largest greedy budget worth searching: the number of predecessor positions
/// in the input. No phase can make more greedy choices than that.
inline int budget_cap(const SequenceSet& rho) {
  std::size_t positions = 0;
  for (const auto& seq : rho.sequences) {
    for (std::size_t j = 0; j + 1 < seq.size(); ++j) positions += seq[j].size();
  }
  return static_cast<int>(positions);
}

}  // namespace s0l
