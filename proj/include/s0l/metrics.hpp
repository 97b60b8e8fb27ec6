#pragma once

// Accuracy of an inferred system against the hidden original that generated
// its input, per experiment and aggregated over batches.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "s0l/grammar.hpp"
#include "s0l/procgen.hpp"
#include "s0l/search.hpp"
#include "s0l/text_format.hpp"

namespace s0l {

enum class Direction { system_to_candidate, candidate_to_system };

namespace detail {

inline void require_comparable(const S0LSystem& original, const S0LSystem& candidate) {
  if (original.alphabet.empty()) throw std::invalid_argument("original system has no alphabet");
  for (Symbol s : candidate.alphabet) {
    if (!original.has_symbol(s)) {
      throw std::invalid_argument(std::string("candidate symbol ") + s +
                                  " is not in the original alphabet");
    }
  }
}

inline double alphabet_size(const S0LSystem& original) {
  return static_cast<double>(original.alphabet.size());
}

}  // namespace detail

/// Weighted true positives. S2C sums the original's probabilities of the
/// productions both systems share; C2S sums the candidate's. Both divide by
/// the original's alphabet size.
inline double wtp(const S0LSystem& original, const S0LSystem& candidate, Direction direction) {
  detail::require_comparable(original, candidate);
  double total = 0.0;
  for (const auto& p : original.productions) {
    const Production* q = candidate.find(p.predecessor, p.successor);
    if (q == nullptr) continue;
    total += direction == Direction::system_to_candidate ? p.probability : q->probability;
  }
  return total / detail::alphabet_size(original);
}

/// Probability error: |p_orig - p_cand| for shared productions, p_orig for
/// missing ones, summed and divided by the original's alphabet size.
inline double prob_error(const S0LSystem& original, const S0LSystem& candidate) {
  detail::require_comparable(original, candidate);
  double total = 0.0;
  for (const auto& p : original.productions) {
    const Production* q = candidate.find(p.predecessor, p.successor);
    total += q == nullptr ? p.probability : std::abs(p.probability - q->probability);
  }
  return total / detail::alphabet_size(original);
}

/// Original productions missing from the candidate.
inline std::size_t successor_diff(const S0LSystem& original, const S0LSystem& candidate) {
  return static_cast<std::size_t>(
      std::count_if(original.productions.begin(), original.productions.end(),
                    [&](const Production& p) {
                      return candidate.find(p.predecessor, p.successor) == nullptr;
                    }));
}

struct ComparisonResult {
  double wtp_s2c = 0.0;
  double wtp_c2s = 0.0;
  double prob_error = 0.0;
  std::size_t successor_diff = 0;
  bool success = false;
};

/// Success means the candidate explains the input at least as well as the
/// derivations that actually produced it.
inline ComparisonResult compare(const S0LSystem& original, double generating_log_probability,
                                const std::optional<Candidate>& best) {
  ComparisonResult r;
  if (!best) {
    r.wtp_s2c = 0.0;
    r.wtp_c2s = 0.0;
    r.prob_error = prob_error(original, S0LSystem{});
    r.successor_diff = original.productions.size();
    r.success = false;
    return r;
  }
  r.wtp_s2c = wtp(original, best->system, Direction::system_to_candidate);
  r.wtp_c2s = wtp(original, best->system, Direction::candidate_to_system);
  r.prob_error = prob_error(original, best->system);
  r.successor_diff = successor_diff(original, best->system);
  r.success = best->log_probability >= generating_log_probability;
  return r;
}

inline ComparisonResult compare(const GeneratedCase& c, const SearchResult& result) {
  return compare(c.system, c.log_probability, result.best);
}

struct BatchReport {
  std::size_t experiments = 0;
  double success_rate = 0.0;
  std::chrono::nanoseconds mean_time{0};
  double wtp_s2c = 0.0;
  double wtp_c2s = 0.0;
  double prob_error = 0.0;
  std::size_t diff_max = 0;
  double diff_rate = 0.0;
};

struct Experiment {
  ComparisonResult comparison;
  std::chrono::nanoseconds elapsed{0};
};

inline BatchReport aggregate(const std::vector<Experiment>& results) {
  if (results.empty()) throw std::invalid_argument("cannot aggregate an empty batch");
  BatchReport b;
  b.experiments = results.size();
  const auto n = static_cast<double>(results.size());
  double successes = 0;
  double differing = 0;
  long double nanos = 0;
  for (const auto& e : results) {
    const auto& c = e.comparison;
    successes += c.success ? 1 : 0;
    differing += c.successor_diff != 0 ? 1 : 0;
    nanos += static_cast<long double>(e.elapsed.count());
    b.wtp_s2c += c.wtp_s2c;
    b.wtp_c2s += c.wtp_c2s;
    b.prob_error += c.prob_error;
    b.diff_max = std::max(b.diff_max, c.successor_diff);
  }
  b.success_rate = successes / n;
  b.diff_rate = differing / n;
  b.wtp_s2c /= n;
  b.wtp_c2s /= n;
  b.prob_error /= n;
  b.mean_time = std::chrono::nanoseconds(static_cast<long long>(nanos / n));
  return b;
}

// ---------------------------------------------------------------------------
// Report file: comma-separated rows with a fixed column order, followed by
// `#`-prefixed aggregate lines.

inline constexpr std::string_view kReportHeader =
    "case_id,S,M,success,wtp_s2c,wtp_c2s,e,diff,elapsed_ms";

struct ReportRow {
  std::string case_id;
  std::size_t successors = 0;
  std::size_t sequences = 0;
  ComparisonResult comparison;
  long long elapsed_ms = 0;
};

inline void write_report(std::ostream& out, const std::vector<ReportRow>& rows,
                         const BatchReport& summary) {
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    const auto& c = r.comparison;
    out << r.case_id << ',' << r.successors << ',' << r.sequences << ',' << (c.success ? 1 : 0)
        << ',' << format_double(c.wtp_s2c) << ',' << format_double(c.wtp_c2s) << ','
        << format_double(c.prob_error) << ',' << c.successor_diff << ',' << r.elapsed_ms << '\n';
  }
  out << "# experiments," << summary.experiments << '\n';
  out << "# SR," << format_double(summary.success_rate) << '\n';
  out << "# MTTS_ms,"
      << std::chrono::duration_cast<std::chrono::milliseconds>(summary.mean_time).count() << '\n';
  out << "# wtp_s2c," << format_double(summary.wtp_s2c) << '\n';
  out << "# wtp_c2s," << format_double(summary.wtp_c2s) << '\n';
  out << "# e," << format_double(summary.prob_error) << '\n';
  out << "# diffmax," << summary.diff_max << '\n';
  out << "# diffrate," << format_double(summary.diff_rate) << '\n';
}

/// Reads the rows back; throws on a malformed line.
inline std::vector<ReportRow> parse_report(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kReportHeader) throw ParseError(line_no, "unexpected report header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 9) throw ParseError(line_no, "expected 9 columns");
    try {
      ReportRow r;
      r.case_id = f[0];
      r.successors = std::stoul(f[1]);
      r.sequences = std::stoul(f[2]);
      if (f[3] != "0" && f[3] != "1") throw std::invalid_argument("success");
      r.comparison.success = f[3] == "1";
      r.comparison.wtp_s2c = std::stod(f[4]);
      r.comparison.wtp_c2s = std::stod(f[5]);
      r.comparison.prob_error = std::stod(f[6]);
      r.comparison.successor_diff = std::stoul(f[7]);
      r.elapsed_ms = std::stoll(f[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad field in report row");
    }
  }
  if (!header) throw ParseError(line_no, "missing report header");
  return rows;
}

}  // namespace s0l
