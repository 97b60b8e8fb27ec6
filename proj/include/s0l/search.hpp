#pragma once

// Hybrid search over scan vectors: every candidate vector is turned into an
// S0L-system by the greedy scan, and the system whose recovered derivations
// are most probable is kept. Two strategies drive the candidates: exhaustive
// depth-first enumeration with pruning, and a standard genetic algorithm.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "s0l/grammar.hpp"
#include "s0l/scanner.hpp"

namespace s0l {

enum class Strategy { exhaustive, genetic };

inline constexpr double kFailedFitness = -std::numeric_limits<double>::infinity();

struct SearchConfig {
  std::size_t dimensions = 1;  // N
  Mode mode = Mode::plain;
  Strategy strategy = Strategy::exhaustive;
  std::chrono::nanoseconds time_budget = std::chrono::hours(12);
  std::size_t extension_limit = 1;
  /// Exhaustive only: skip vectors whose read prefix is already decided.
  bool prefix_pruning = true;
  /// Exhaustive only: branch inside a single resumable scan instead of
  /// rescanning each vector from the start. Needs prefix_pruning.
  bool incremental = true;
  /// Exhaustive only: abort scans that can no longer beat the incumbent.
  bool bound_pruning = true;
  /// Add log I(x) of each sequence's first word to the fitness.
  bool include_axiom = false;
  /// One line per improvement when set.
  std::ostream* progress = nullptr;
};

struct SgaParams {
  std::size_t population = 50;
  double crossover = 0.9;
  double mutation = 0.01;
  std::uint64_t seed = 0;
  /// Hard stop in addition to convergence; 0 means none.
  std::size_t max_generations = 0;

  bool valid() const {
    return population >= 2 && population % 2 == 0 && crossover >= 0.0 && crossover <= 1.0 &&
           mutation >= 0.0 && mutation <= 1.0;
  }
};

struct Candidate {
  S0LSystem system;
  std::vector<Derivation> derivations;
  double log_probability = kFailedFitness;
  SearchVector vector;
};

struct SearchResult {
  std::optional<Candidate> best;
  std::size_t evaluated = 0;
  std::chrono::nanoseconds elapsed{0};
  bool exhausted = false;  // exhaustive search finished its enumeration
  bool converged = false;  // genetic search met its convergence rule
  bool timed_out = false;
  std::size_t generations = 0;

  bool found() const { return best.has_value(); }
};

// ---------------------------------------------------------------------------
// Exhaustive depth-first enumeration

/// Enumerates search vectors depth first, leading entries varying slowest.
///
/// After each vector is evaluated, report() receives the scan outcome. The
/// outcome depends only on the prefix of entries the scan read, so the rest
/// of that prefix's subtree is skipped. Greedy budgets are tried unrestricted
/// first; the greedy count observed then bounds the restricted values worth
/// trying, 0 .. count-1.
class DepthFirstEnumerator {
public:
  DepthFirstEnumerator(Mode mode, std::size_t dimensions, int budget_cap, bool pruning)
      : mode_(mode), dims_(dimensions), cap_(std::max(budget_cap, 0)), pruning_(pruning) {
    const std::size_t base = mode == Mode::plain ? dimensions : 2 * dimensions;
    for (std::size_t p = 0; p < base; ++p) push_position(p);
    done_ = base == 0;
  }

  /// The next vector to evaluate, or nullopt when the space is exhausted.
  std::optional<SearchVector> next() const {
    if (done_) return std::nullopt;
    SearchVector v;
    v.mode = mode_;
    const std::size_t base = base_size();
    v.entries.assign(values_.begin(), values_.begin() + static_cast<long>(base));
    v.extensions.assign(values_.begin() + static_cast<long>(base), values_.end());
    return v;
  }

  void report(const ScanOutcome& outcome) {
    if (done_) return;
    if (outcome.status == ScanStatus::needs_extension) {
      push_position(values_.size());
      return;
    }
    std::size_t depth = values_.size();
    if (pruning_) {
      depth = outcome.entries_read;
      if (depth == 0) {
        done_ = true;
        return;
      }
      if (outcome.larger_values_fail) saturated_[depth - 1] = true;
      for (const auto& slack : outcome.slack_budgets) {
        const std::size_t idx = slack.index;
        if (idx >= values_.size()) continue;
        if (values_[idx] == cap_) {
          greedy_seen_[idx] =
              std::max(greedy_seen_[idx], static_cast<long>(slack.greedy_choices));
        } else {
          saturated_[idx] = true;
        }
      }
    }
    advance(depth - 1);
  }

  bool done() const { return done_; }

private:
  std::size_t base_size() const { return mode_ == Mode::plain ? dims_ : 2 * dims_; }
  bool is_budget(std::size_t p) const { return mode_ == Mode::prefix_limited && p < base_size() && p % 2 == 0; }

  int first_value(std::size_t p) const {
    if (!is_budget(p)) return kMinSuccessorLength;
    return pruning_ ? cap_ : 0;
  }

  void push_position(std::size_t p) {
    values_.resize(p + 1);
    saturated_.resize(p + 1);
    greedy_seen_.resize(p + 1);
    values_[p] = first_value(p);
    saturated_[p] = false;
    greedy_seen_[p] = 0;
  }

  /// Next value at position p, or nullopt when its range is used up.
  std::optional<int> successor_value(std::size_t p) const {
    if (saturated_[p]) return std::nullopt;
    const int v = values_[p];
    if (!is_budget(p)) {
      if (v >= kMaxSuccessorLength) return std::nullopt;
      return v + 1;
    }
    if (!pruning_) {
      if (v >= cap_) return std::nullopt;
      return v + 1;
    }
    if (v == cap_) {
      if (greedy_seen_[p] <= 0) return std::nullopt;
      return 0;
    }
    if (v + 1 >= greedy_seen_[p]) return std::nullopt;
    return v + 1;
  }

  void advance(std::size_t p) {
    const std::size_t base = base_size();
    while (true) {
      if (auto v = successor_value(p)) {
        values_[p] = *v;
        saturated_[p] = false;
        values_.resize(p + 1);
        saturated_.resize(p + 1);
        greedy_seen_.resize(p + 1);
        for (std::size_t q = p + 1; q < base; ++q) push_position(q);
        return;
      }
      if (p == 0) {
        done_ = true;
        return;
      }
      --p;
    }
  }

  Mode mode_;
  std::size_t dims_;
  int cap_;
  bool pruning_;
  bool done_ = false;
  std::vector<int> values_;
  std::vector<bool> saturated_;
  std::vector<long> greedy_seen_;
};

// ---------------------------------------------------------------------------
// Genetic algorithm

struct Genome {
  SearchVector vector;
  double fitness = kFailedFitness;
};

namespace detail {

inline int random_gene(Mode mode, std::size_t flat, int budget_cap, Rng& rng) {
  if (mode == Mode::prefix_limited && flat % 2 == 0) {
    return std::uniform_int_distribution<int>(0, std::max(budget_cap, 0))(rng);
  }
  return std::uniform_int_distribution<int>(kMinSuccessorLength, kMaxSuccessorLength)(rng);
}

/// Selection weights: rank among successful genomes (ties share the mean
/// rank), zero for failed ones; uniform when every genome failed.
inline std::vector<double> rank_weights(const std::vector<Genome>& population) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (std::isfinite(population[i].fitness)) order.push_back(i);
  }
  std::vector<double> w(population.size(), 0.0);
  if (order.empty()) {
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return population[a].fitness < population[b].fitness;
  });
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && population[order[j]].fitness == population[order[i]].fitness) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) w[order[k]] = mean_rank;
    i = j;
  }
  return w;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Initial population of uniformly random vectors.
inline std::vector<SearchVector> sga_init(const SgaParams& params, const SearchConfig& config,
                                          int budget_cap) {
  Rng rng(detail::mix_seed(params.seed, 0xA11CE));
  const std::size_t genes =
      config.mode == Mode::plain ? config.dimensions : 2 * config.dimensions;
  std::vector<SearchVector> out;
  out.reserve(params.population);
  for (std::size_t i = 0; i < params.population; ++i) {
    SearchVector v;
    v.mode = config.mode;
    for (std::size_t g = 0; g < genes; ++g) {
      v.entries.push_back(detail::random_gene(config.mode, g, budget_cap, rng));
    }
    out.push_back(std::move(v));
  }
  return out;
}

/// Selection, uniform crossover, uniform mutation and elite survival.
/// `evaluate(vector, index)` scores an offspring; index is its position in
/// the offspring batch.
template <typename Evaluate>
std::vector<Genome> sga_iterate(const std::vector<Genome>& population, const SgaParams& params,
                                int budget_cap, Rng& rng, Evaluate&& evaluate) {
  const std::size_t size = population.size();
  const auto weights = detail::rank_weights(population);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::bernoulli_distribution swap(params.crossover);
  std::bernoulli_distribution mutate(params.mutation);

  std::vector<SearchVector> offspring;
  offspring.reserve(size);
  for (std::size_t pair = 0; pair < size / 2; ++pair) {
    SearchVector a = population[pick(rng)].vector;
    SearchVector b = population[pick(rng)].vector;
    a.extensions.clear();
    b.extensions.clear();
    for (std::size_t g = 0; g < a.entries.size(); ++g) {
      if (swap(rng)) std::swap(a.entries[g], b.entries[g]);
    }
    offspring.push_back(std::move(a));
    offspring.push_back(std::move(b));
  }
  for (auto& child : offspring) {
    for (std::size_t g = 0; g < child.entries.size(); ++g) {
      if (mutate(rng)) child.entries[g] = detail::random_gene(child.mode, g, budget_cap, rng);
    }
  }

  std::vector<Genome> merged = population;
  merged.reserve(2 * size);
  for (std::size_t i = 0; i < offspring.size(); ++i) {
    Genome g{std::move(offspring[i]), kFailedFitness};
    g.fitness = evaluate(g.vector, i);
    merged.push_back(std::move(g));
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Genome& x, const Genome& y) { return x.fitness > y.fitness; });
  merged.resize(size);
  return merged;
}

/// Convergence: stop once as many generations have passed without a new best
/// as the generation index at which the current best was found (at least one).
inline bool sga_terminated(std::size_t generations_since_improvement,
                           std::size_t generation_of_best) {
  return generations_since_improvement >= std::max<std::size_t>(generation_of_best, 1);
}

// ---------------------------------------------------------------------------
// Driver

namespace detail {

class SearchDriver {
public:
  SearchDriver(const SequenceSet& rho, const SearchConfig& config)
      : rho_(rho), config_(config), start_(std::chrono::steady_clock::now()) {
    if (config.include_axiom) {
      const auto axioms = infer_axioms(rho);
      for (const auto& seq : rho.sequences) {
        for (const auto& a : axioms) {
          if (a.word == seq.front()) axiom_term_ += std::log(a.probability);
        }
      }
    }
  }

  bool out_of_time() {
    if (std::chrono::steady_clock::now() - start_ >= config_.time_budget) {
      result_.timed_out = true;
    }
    return result_.timed_out;
  }

  /// Scans one vector. `bounded` enables incumbent-based abortion.
  ScanOutcome evaluate(const SearchVector& v, bool bounded) {
    ScanOptions opt;
    opt.extension_limit = config_.extension_limit;
    opt.build_derivations = false;
    if (bounded && result_.best) {
      const double best = result_.best->log_probability - axiom_term_;
      opt.bound = best - 1e-9 * (1.0 + std::abs(best));
    }
    ++result_.evaluated;
    auto out = scan(rho_, v, opt);
    if (out.ok()) offer(v, out.log_probability + axiom_term_);
    return out;
  }

  double fitness_of(const ScanOutcome& out) const {
    return out.ok() ? out.log_probability + axiom_term_ : kFailedFitness;
  }

  void offer(const SearchVector& v, double fitness) {
    if (result_.best && !(fitness > result_.best->log_probability)) return;
    ScanOptions opt;
    opt.extension_limit = config_.extension_limit;
    auto full = scan(rho_, v, opt);
    if (!full.ok() || std::abs(full.log_probability + axiom_term_ - fitness) >
                          1e-9 * (1.0 + std::abs(fitness))) {
      throw std::logic_error("rescan of an improving vector disagrees with its fitness");
    }
    Candidate c;
    c.system = std::move(full.system);
    c.derivations = std::move(full.derivations);
    c.log_probability = fitness;
    c.vector = v;
    result_.best = std::move(c);
    if (config_.progress != nullptr) {
      *config_.progress << "elapsed_ms=" << elapsed_ms() << " evaluated=" << result_.evaluated
                        << " best_log_probability=" << fitness << '\n';
    }
  }

  SearchResult finish() {
    result_.elapsed = std::chrono::steady_clock::now() - start_;
    return std::move(result_);
  }

  SearchResult& result() { return result_; }
  double axiom_term() const { return axiom_term_; }
  /// A fitness of zero (before the axiom term) cannot be beaten.
  bool optimal() const { return result_.best && result_.best->log_probability - axiom_term_ >= 0.0; }

private:
  long long elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

  const SequenceSet& rho_;
  const SearchConfig& config_;
  std::chrono::steady_clock::time_point start_;
  double axiom_term_ = 0.0;
  SearchResult result_;
};

/// Exhaustive search without rescanning. The scan runs once; wherever it
/// first needs a vector entry it branches over that entry's values, and the
/// successor table is rolled back on return. In prefix-limited mode a greedy
/// budget is a branch at each greedy opportunity: allow it (budget not yet
/// exhausted) or refuse it (budget equals the choices made so far). Each leaf
/// is one class of vectors sharing an outcome, counted as one evaluation.
class IncrementalExplorer {
public:
  IncrementalExplorer(const SequenceSet& rho, const SearchConfig& config, SearchDriver& driver)
      : rho_(rho), config_(config), driver_(driver), cap_(budget_cap(rho)),
        lengths_(config.dimensions, kMinSuccessorLength), budgets_(config.dimensions, cap_) {
    std::size_t positions = 0;
    for (const auto& seq : rho.sequences) {
      for (std::size_t j = 0; j + 1 < seq.size(); ++j) {
        for (Symbol a : seq[j]) ++remaining_[index(a)];
        positions += seq[j].size();
      }
    }
    for (std::size_t a = 0; a < remaining_.size(); ++a) {
      if (remaining_[a] > 0) symbols_.push_back(a);
    }
    xlogx_.resize(positions + 2, 0.0);
    for (std::size_t x = 1; x < xlogx_.size(); ++x) {
      xlogx_[x] = static_cast<double>(x) * std::log(static_cast<double>(x));
    }
    update_bound();
  }

  /// False when stopped by the time budget.
  bool run() {
    if (driver_.optimal()) return true;
    run_from(State{});
    return !stopped_ || driver_.optimal();
  }

private:
  struct State {
    std::size_t i = 0, j = 0, l = 1, matched = 0;
    std::size_t cursor = 0, greedy = 0, extensions = 0;
  };

  bool limited(const State& s) const {
    return config_.mode == Mode::prefix_limited && s.cursor < config_.dimensions;
  }

  static std::size_t index(Symbol a) { return static_cast<unsigned char>(a) & 0x7f; }

  bool take(Symbol a, std::string_view successor) {
    undo_.emplace_back();
    --remaining_[index(a)];
    table_.record(a, successor, &undo_.back());
    double best_case = table_.running_log_likelihood();
    if (best_case < bound_) return false;
    // Every symbol still to be scanned adds a selection. The least costly
    // completion gives all of a symbol's remaining selections to its most
    // frequent successor (sum c log c is convex).
    for (std::size_t s : symbols_) {
      const std::size_t r = remaining_[s];
      const std::size_t n = table_.total(static_cast<Symbol>(s));
      if (r == 0 || n == 0) continue;
      const std::size_t c = table_.top(static_cast<Symbol>(s));
      best_case += xlogx_[c + r] - xlogx_[c] - (xlogx_[n + r] - xlogx_[n]);
    }
    return !(best_case < bound_);
  }

  void rollback(std::size_t mark) {
    while (undo_.size() > mark) {
      table_.undo(undo_.back());
      ++remaining_[undo_.back().symbol];
      undo_.pop_back();
    }
  }

  void update_bound() {
    const auto& best = driver_.result().best;
    if (!config_.bound_pruning || !best) return;
    const double b = best->log_probability - driver_.axiom_term();
    bound_ = b - 1e-9 * (1.0 + std::abs(b));
  }

  void leaf() {
    ++driver_.result().evaluated;
    if (driver_.optimal()) stopped_ = true;
    if ((driver_.result().evaluated & 0x3ff) == 0 && driver_.out_of_time()) stopped_ = true;
  }

  void leaf_success(const State& s) {
    leaf();
    const double fitness = table_.exact_log_likelihood() + driver_.axiom_term();
    const auto& best = driver_.result().best;
    if (best && !(fitness > best->log_probability)) return;
    driver_.offer(vector_at(s), fitness);
    update_bound();
  }

  SearchVector vector_at(const State& s) const {
    const std::size_t n = config_.dimensions;
    SearchVector v;
    v.mode = config_.mode;
    for (std::size_t z = 0; z < n; ++z) {
      if (v.mode == Mode::prefix_limited) v.entries.push_back(z < s.cursor ? budgets_[z] : cap_);
      v.entries.push_back(z < s.cursor ? lengths_[z] : kMinSuccessorLength);
    }
    for (std::size_t z = n; z < s.cursor; ++z) v.extensions.push_back(lengths_[z]);
    return v;
  }

  /// Rule 3 at the current symbol, branching over the successor length.
  void build(const State& s, Symbol a, std::string_view rest, long max_length, int budget) {
    if (s.cursor >= config_.dimensions && s.extensions >= config_.extension_limit) {
      leaf();
      return;
    }
    if (s.cursor < config_.dimensions) budgets_[s.cursor] = budget;
    if (lengths_.size() <= s.cursor) lengths_.resize(s.cursor + 1);
    const long top = std::min<long>(max_length, kMaxSuccessorLength);
    for (long k = kMinSuccessorLength; k <= top && !stopped_; ++k) {
      const std::size_t mark = undo_.size();
      lengths_[s.cursor] = static_cast<int>(k);
      if (take(a, rest.substr(0, static_cast<std::size_t>(k)))) {
        State t = s;
        if (t.cursor >= config_.dimensions) ++t.extensions;
        ++t.cursor;
        t.greedy = 0;
        t.matched += static_cast<std::size_t>(k);
        ++t.l;
        run_from(t);
      } else {
        leaf();
      }
      rollback(mark);
    }
  }

  void run_from(State s) {
    const std::size_t mark = undo_.size();
    while (!stopped_) {
      if (s.i >= rho_.sequences.size()) {
        leaf_success(s);
        break;
      }
      const auto& seq = rho_.sequences[s.i];
      if (s.j + 1 >= seq.size()) {
        s = State{s.i + 1, 0, 1, 0, s.cursor, s.greedy, 0};
        continue;
      }
      const Word& from = seq[s.j];
      const Word& to = seq[s.j + 1];
      if (s.l > from.size()) {
        s = State{s.i, s.j + 1, 1, 0, s.cursor, s.greedy, 0};
        continue;
      }
      const Symbol a = from[s.l - 1];
      const auto bounds = feasible_length_bounds(from, to, s.l, s.matched);
      if (!bounds.feasible()) {
        leaf();
        break;
      }
      const std::string_view rest = std::string_view(to).substr(s.matched);

      if (s.l == from.size()) {
        if (!take(a, rest)) {
          leaf();
          break;
        }
        s.matched = to.size();
        ++s.l;
        continue;
      }

      const auto* g = greedy_select(table_, a, rest, bounds.max);
      if (g == nullptr) {
        build(s, a, rest, bounds.max, cap_);
        break;
      }
      const std::size_t len = g->successor.size();
      if (!limited(s)) {
        if (!take(a, rest.substr(0, len))) {
          leaf();
          break;
        }
        s.matched += len;
        ++s.l;
        continue;
      }
      // Allow the greedy choice, then refuse it.
      const std::size_t branch = undo_.size();
      if (take(a, rest.substr(0, len))) {
        State t = s;
        ++t.greedy;
        t.matched += len;
        ++t.l;
        run_from(t);
      } else {
        leaf();
      }
      rollback(branch);
      if (!stopped_) build(s, a, rest, bounds.max, static_cast<int>(s.greedy));
      break;
    }
    rollback(mark);
  }

  const SequenceSet& rho_;
  const SearchConfig& config_;
  SearchDriver& driver_;
  const int cap_;
  SuccessorTable table_;
  std::vector<SuccessorTable::Undo> undo_;
  std::vector<int> lengths_;
  std::vector<int> budgets_;
  std::array<std::size_t, 128> remaining_{};  // predecessor occurrences not yet scanned
  std::vector<std::size_t> symbols_;
  std::vector<double> xlogx_;
  double bound_ = -std::numeric_limits<double>::infinity();
  bool stopped_ = false;
};

// Every plain vector has a prefix-limited twin with unlimited budgets and the
// same outcome, so the plain optimum is a cheap starting incumbent.
inline void seed_from_plain(const SequenceSet& rho, const SearchConfig& config,
                            SearchDriver& driver) {
  SearchConfig plain = config;
  plain.mode = Mode::plain;
  plain.progress = nullptr;
  SearchDriver sub(rho, plain);
  IncrementalExplorer(rho, plain, sub).run();
  driver.result().evaluated += sub.result().evaluated;
  const auto& best = sub.result().best;
  if (!best) return;
  SearchVector v;
  v.mode = Mode::prefix_limited;
  for (int y : best->vector.entries) {
    v.entries.push_back(budget_cap(rho));
    v.entries.push_back(y);
  }
  v.extensions = best->vector.extensions;
  driver.offer(v, best->log_probability);
}

inline SearchResult run_exhaustive(const SequenceSet& rho, const SearchConfig& config) {
  SearchDriver driver(rho, config);
  if (config.incremental && config.prefix_pruning) {
    if (config.mode == Mode::prefix_limited && config.bound_pruning) {
      seed_from_plain(rho, config, driver);
    }
    IncrementalExplorer explorer(rho, config, driver);
    driver.result().exhausted = explorer.run();
    return driver.finish();
  }
  DepthFirstEnumerator dfs(config.mode, config.dimensions, budget_cap(rho),
                           config.prefix_pruning);
  bool optimal = false;
  while (auto v = dfs.next()) {
    if (config.bound_pruning && (optimal = driver.optimal())) break;
    if (driver.out_of_time()) break;
    dfs.report(driver.evaluate(*v, config.bound_pruning));
  }
  driver.result().exhausted = dfs.done() || optimal || (config.bound_pruning && driver.optimal());
  return driver.finish();
}

inline SearchResult run_genetic(const SequenceSet& rho, const SearchConfig& config,
                                const SgaParams& params) {
  SearchDriver driver(rho, config);
  const int cap = budget_cap(rho);
  Rng rng(mix_seed(params.seed, 0x5E1EC7));

  std::size_t generation = 0;
  // Extension genes come from a stream owned by (generation, genome index).
  auto score = [&](SearchVector& v, std::size_t index) {
    Rng genes(mix_seed(mix_seed(params.seed, generation), index));
    while (true) {
      if (driver.out_of_time()) return kFailedFitness;
      auto out = driver.evaluate(v, false);
      if (out.status != ScanStatus::needs_extension) return driver.fitness_of(out);
      v.extensions.push_back(
          std::uniform_int_distribution<int>(kMinSuccessorLength, kMaxSuccessorLength)(genes));
    }
  };

  std::vector<Genome> population;
  for (auto& v : sga_init(params, config, cap)) {
    Genome g{std::move(v), kFailedFitness};
    g.fitness = score(g.vector, population.size());
    population.push_back(std::move(g));
  }
  std::stable_sort(population.begin(), population.end(),
                   [](const Genome& x, const Genome& y) { return x.fitness > y.fitness; });

  std::size_t best_generation = 0;
  double best = driver.result().best ? driver.result().best->log_probability : kFailedFitness;
  while (!driver.out_of_time()) {
    ++generation;
    population = sga_iterate(population, params, cap, rng, [&](const SearchVector& v, std::size_t i) {
      SearchVector copy = v;
      return score(copy, i);
    });
    const double now = driver.result().best ? driver.result().best->log_probability : kFailedFitness;
    if (now > best) {
      best = now;
      best_generation = generation;
    }
    if (sga_terminated(generation - best_generation, best_generation)) {
      driver.result().converged = true;
      break;
    }
    if (params.max_generations != 0 && generation >= params.max_generations) break;
  }
  driver.result().generations = generation;
  return driver.finish();
}

}  // namespace detail

/// Searches for the S0L-system most likely to have produced `rho`.
inline SearchResult run_search(const SequenceSet& rho, const SearchConfig& config,
                               const SgaParams& sga = {}) {
  if (config.dimensions < 1) throw std::invalid_argument("search needs at least one dimension");
  if (config.time_budget <= std::chrono::nanoseconds::zero()) {
    throw std::invalid_argument("time budget must be positive");
  }
  if (config.strategy == Strategy::genetic) {
    if (!sga.valid()) throw std::invalid_argument("invalid genetic algorithm parameters");
    return detail::run_genetic(rho, config, sga);
  }
  return detail::run_exhaustive(rho, config);
}

}  // namespace s0l
