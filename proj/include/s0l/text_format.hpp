#pragma once

// Line-oriented text formats for grammars and observed sequences.
//
// Grammar:
//   # comment
//   alphabet: A B C
//   axiom: <word> @ <prob>          (repeatable)
//   <symbol> -> <word> : <prob>     (repeatable)
//
// Sequences: one word per line, sequences separated by a `---` line.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "s0l/grammar.hpp"

namespace s0l {

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

inline constexpr std::string_view kSequenceSeparator = "---";

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view strip_comment(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) line = line.substr(0, pos);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline double parse_probability(std::string_view token, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(line, "bad probability '" + std::string(token) + "'");
  }
  return value;
}

inline Word parse_word(std::string_view token, std::size_t line) {
  for (char c : token) {
    if (!is_valid_symbol(c)) {
      throw ParseError(line, "invalid symbol character in '" + std::string(token) + "'");
    }
  }
  return Word(token);
}

}  // namespace detail

/// Parses the grammar format. Structural problems throw ParseError; semantic
/// problems (sums, totality) are left to validate().
inline S0LSystem parse_grammar(std::istream& in) {
  S0LSystem g;
  bool have_alphabet = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto tokens = detail::split_ws(detail::strip_comment(raw));
    if (tokens.empty()) continue;

    if (tokens[0] == "alphabet:") {
      if (have_alphabet) throw ParseError(line_no, "alphabet declared twice");
      have_alphabet = true;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].size() != 1 || !is_valid_symbol(tokens[i][0])) {
          throw ParseError(line_no, "alphabet entries must be single symbols, got '" +
                                        std::string(tokens[i]) + "'");
        }
        g.alphabet.push_back(tokens[i][0]);
      }
      normalize_alphabet(g.alphabet);
    } else if (tokens[0] == "axiom:") {
      if (tokens.size() != 4 || tokens[2] != "@") {
        throw ParseError(line_no, "expected 'axiom: <word> @ <prob>'");
      }
      g.axioms.push_back({detail::parse_word(tokens[1], line_no),
                          detail::parse_probability(tokens[3], line_no)});
    } else if (tokens.size() == 5 && tokens[1] == "->" && tokens[3] == ":") {
      if (tokens[0].size() != 1 || !is_valid_symbol(tokens[0][0])) {
        throw ParseError(line_no, "predecessor must be a single symbol");
      }
      g.productions.push_back({tokens[0][0], detail::parse_word(tokens[2], line_no),
                               detail::parse_probability(tokens[4], line_no)});
    } else {
      throw ParseError(line_no, "unrecognized line '" + raw + "'");
    }
  }
  if (!have_alphabet) throw ParseError(line_no, "missing 'alphabet:' line");
  return g;
}

inline S0LSystem parse_grammar(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_grammar(in);
}

inline void write_grammar(std::ostream& out, const S0LSystem& g) {
  out << "alphabet:";
  for (Symbol s : g.alphabet) out << ' ' << s;
  out << '\n';
  for (const auto& a : g.axioms) {
    out << "axiom: " << a.word << " @ " << format_double(a.probability) << '\n';
  }
  for (const auto& p : g.productions) {
    out << p.predecessor << " -> " << p.successor << " : " << format_double(p.probability)
        << '\n';
  }
}

inline std::string to_string(const S0LSystem& g) {
  std::ostringstream os;
  write_grammar(os, g);
  return os.str();
}

inline SequenceSet parse_sequences(std::istream& in) {
  SequenceSet rho;
  std::vector<Word> current;
  std::string raw;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.empty()) rho.sequences.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(in, raw)) {
    ++line_no;
    auto tokens = detail::split_ws(detail::strip_comment(raw));
    if (tokens.empty()) continue;
    if (tokens.size() != 1) throw ParseError(line_no, "expected one word per line");
    if (tokens[0] == kSequenceSeparator) {
      if (current.empty()) throw ParseError(line_no, "empty sequence");
      flush();
      continue;
    }
    current.push_back(detail::parse_word(tokens[0], line_no));
  }
  flush();
  if (rho.sequences.empty()) throw ParseError(line_no, "no sequences");
  return rho;
}

inline SequenceSet parse_sequences(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_sequences(in);
}

inline void write_sequences(std::ostream& out, const SequenceSet& rho) {
  for (std::size_t i = 0; i < rho.sequences.size(); ++i) {
    if (i > 0) out << kSequenceSeparator << '\n';
    for (const auto& w : rho.sequences[i]) {
      if (w == kSequenceSeparator) {
        throw std::invalid_argument("word '---' cannot be written in the sequence format");
      }
      out << w << '\n';
    }
  }
}

inline std::string to_string(const SequenceSet& rho) {
  std::ostringstream os;
  write_sequences(os, rho);
  return os.str();
}

template <typename T, typename Parse>
T read_file(const std::string& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse(in);
}

inline S0LSystem load_grammar(const std::string& path) {
  return read_file<S0LSystem>(path, [](std::istream& in) { return parse_grammar(in); });
}

inline SequenceSet load_sequences(const std::string& path) {
  return read_file<SequenceSet>(path, [](std::istream& in) { return parse_sequences(in); });
}

}  // namespace s0l
