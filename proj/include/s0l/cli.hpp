#pragma once

// Command-line front end: derive, infer, generate, benchmark. run() is the
// whole program minus process plumbing so tests can call it in-process.
//
// Exit codes: 0 ok, 1 usage, 2 invalid input (or generation failure),
// 3 no compatible system, 4 timeout.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "s0l/grammar.hpp"
#include "s0l/metrics.hpp"
#include "s0l/procgen.hpp"
#include "s0l/search.hpp"
#include "s0l/text_format.hpp"

namespace s0l::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInvalidInput = 2,
  kNoSolution = 3,
  kTimeout = 4,
};

/// Tab-separated list of generated cases, one per line after a `#` header.
struct DatasetEntry {
  std::string id;
  std::size_t successors = 0;
  std::size_t sequences = 0;
  std::size_t words = 0;
  std::uint64_t seed = 0;
  std::string grammar;    // relative to the manifest's directory
  std::string sequences_path;
  double log_probability = 0.0;
};

inline constexpr std::string_view kDatasetHeader =
    "# case_id\tS\tM\twords\tseed\tgrammar\tsequences\tlog_probability";

inline void write_dataset_manifest(std::ostream& out, const std::vector<DatasetEntry>& rows) {
  out << kDatasetHeader << '\n';
  for (const auto& r : rows) {
    out << r.id << '\t' << r.successors << '\t' << r.sequences << '\t' << r.words << '\t'
        << r.seed << '\t' << r.grammar << '\t' << r.sequences_path << '\t'
        << format_double(r.log_probability) << '\n';
  }
}

inline std::vector<DatasetEntry> parse_dataset_manifest(std::istream& in) {
  std::vector<DatasetEntry> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');) f.push_back(cell);
    if (f.size() != 8) throw ParseError(line_no, "expected 8 tab-separated fields");
    try {
      rows.push_back({f[0], std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]),
                      std::stoull(f[4]), f[5], f[6], std::stod(f[7])});
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad field in dataset manifest");
    }
  }
  if (rows.empty()) throw ParseError(line_no, "dataset manifest lists no cases");
  return rows;
}

namespace detail {

class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

inline fs::path numbered(const fs::path& path, std::size_t k) {
  fs::path p = path;
  p.replace_filename(path.stem().string() + "-" + std::to_string(k) + path.extension().string());
  return p;
}

inline std::string mode_name(Mode m) { return m == Mode::plain ? "plain" : "pl"; }
inline std::string strategy_name(Strategy s) { return s == Strategy::exhaustive ? "es" : "sga"; }

struct SearchFlags {
  Mode mode = Mode::prefix_limited;
  Strategy strategy = Strategy::exhaustive;
  double time_budget = 12 * 3600.0;  // seconds
  std::uint64_t seed = 0;
  std::size_t extension_limit = 1;
  SgaParams sga;

  void add_to(CLI::App& app) {
    app.add_option("--mode", mode, "plain or pl")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Mode>{{"plain", Mode::plain}, {"pl", Mode::prefix_limited}}));
    app.add_option("--strategy", strategy, "es or sga")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Strategy>{
            {"es", Strategy::exhaustive}, {"sga", Strategy::genetic}}));
    app.add_option("--time-budget", time_budget, "seconds")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed);
    app.add_option("--extension-limit", extension_limit);
    app.add_option("--population", sga.population)->check(CLI::PositiveNumber);
    app.add_option("--crossover", sga.crossover)->check(CLI::Range(0.0, 1.0));
    app.add_option("--mutation", sga.mutation)->check(CLI::Range(0.0, 1.0));
    app.add_option("--max-generations", sga.max_generations);
  }

  SearchConfig config(std::size_t n) const {
    SearchConfig c;
    c.dimensions = n;
    c.mode = mode;
    c.strategy = strategy;
    c.time_budget = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::duration<double>(time_budget));
    c.extension_limit = extension_limit;
    return c;
  }

  ordered_json echo() const {
    ordered_json j;
    j["mode"] = mode_name(mode);
    j["strategy"] = strategy_name(strategy);
    j["time_budget_s"] = time_budget;
    j["seed"] = seed;
    j["extension_limit"] = extension_limit;
    if (strategy == Strategy::genetic) {
      j["population"] = sga.population;
      j["crossover"] = sga.crossover;
      j["mutation"] = sga.mutation;
      j["max_generations"] = sga.max_generations;
    }
    return j;
  }
};

template <typename Load>
auto load_named(const std::string& path, Load load) {
  try {
    return load(path);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline S0LSystem read_grammar(const std::string& path) {
  auto g = load_named(path, load_grammar);
  auto report = validate(g);
  if (!report.ok()) {
    std::string msg = path + ": invalid grammar";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw InputError(msg);
  }
  return g;
}

inline SequenceSet read_sequences(const std::string& path) {
  auto rho = load_named(path, load_sequences);
  auto report = validate(rho);
  if (!report.ok()) {
    std::string msg = path + ": invalid sequences";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw InputError(msg);
  }
  return rho;
}

inline long long ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               t0)
      .count();
}

// ---------------------------------------------------------------------------

inline int cmd_derive(const std::string& grammar_path, std::size_t steps, std::size_t count,
                      std::uint64_t seed, const fs::path& out_path, std::ostream& out,
                      ordered_json& manifest) {
  const auto g = read_grammar(grammar_path);
  manifest["inputs"] = {grammar_path};
  manifest["config"] = {{"steps", steps}, {"count", count}, {"seed", seed}};
  ordered_json outputs = ordered_json::array();
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(seed + k);
    auto d = derive_sequence(g, steps, rng);
    const fs::path path = count == 1 ? out_path : numbered(out_path, k + 1);
    write_text(path, to_string(SequenceSet{{d.trace}}));
    out << path.string() << " log_probability=" << format_double(derivation_log_probability(g, d))
        << '\n';
    outputs.push_back(path.string());
  }
  manifest["outputs"] = outputs;
  return kOk;
}

inline std::string result_text(const Candidate& best, std::size_t n, const SearchFlags& flags,
                               const SearchResult& r) {
  std::ostringstream os;
  os << "# inferred S0L-system\n";
  os << "# n " << n << " mode " << mode_name(flags.mode) << " strategy "
     << strategy_name(flags.strategy) << '\n';
  os << "# log_probability " << format_double(best.log_probability) << '\n';
  os << "# vector";
  for (int v : best.vector.flattened()) os << ' ' << v;
  os << '\n';
  os << "# evaluated " << r.evaluated;
  if (flags.strategy == Strategy::genetic) os << " generations " << r.generations;
  os << (r.timed_out ? " timed_out" : "") << '\n';
  write_grammar(os, best.system);
  return os.str();
}

inline int cmd_infer(const std::string& seq_path, std::size_t n, std::size_t retry_cap,
                     const SearchFlags& flags, const fs::path& out_path, std::ostream& out,
                     ordered_json& manifest) {
  if (n < 1) throw InputError("--n must be at least 1");
  const auto rho = read_sequences(seq_path);
  manifest["inputs"] = {seq_path};
  auto cfg = flags.echo();
  cfg["n"] = n;
  cfg["retry_n"] = retry_cap;
  manifest["config"] = cfg;

  SgaParams sga = flags.sga;
  sga.seed = flags.seed;
  const std::size_t last = std::max(n, retry_cap);
  SearchResult r;
  std::size_t used = n;
  for (; used <= last; ++used) {
    r = run_search(rho, flags.config(used), sga);
    if (r.found() || r.timed_out) break;
  }
  used = std::min(used, last);
  manifest["n_used"] = used;
  manifest["evaluated"] = r.evaluated;

  if (!r.found()) {
    manifest["outputs"] = ordered_json::array();
    out << (r.timed_out ? "timed out without a compatible system\n"
                        : "no compatible system for n=" + std::to_string(used) + "\n");
    return r.timed_out ? kTimeout : kNoSolution;
  }
  write_text(out_path, result_text(*r.best, used, flags, r));
  manifest["outputs"] = {out_path.string()};
  manifest["log_probability"] = r.best->log_probability;
  out << out_path.string() << " log_probability=" << format_double(r.best->log_probability)
      << '\n';
  return r.timed_out ? kTimeout : kOk;
}

inline int cmd_generate(const std::string& kind_name, double scale, std::uint64_t seed,
                        std::size_t words, const fs::path& dir, std::ostream& out,
                        ordered_json& manifest) {
  static const std::map<std::string, DatasetKind> kinds{{"ds-pl", DatasetKind::prefix_free},
                                                        {"ds-npl", DatasetKind::unrestricted},
                                                        {"ds-vm", DatasetKind::varying_m}};
  const auto kind = kinds.at(kind_name);
  if (!(scale > 0.0)) throw InputError("--scale must be positive");
  if (words < 2) throw InputError("--words must be at least 2");
  manifest["config"] = {{"kind", kind_name}, {"scale", scale}, {"seed", seed}, {"words", words}};

  DatasetOptions opt;
  opt.scale = scale;
  opt.words = words;
  const auto cases = generate_dataset(kind, seed, opt);

  std::vector<DatasetEntry> rows;
  for (const auto& c : cases) {
    const std::string g = "cases/" + c.id + ".grammar";
    const std::string s = "cases/" + c.id + ".seq";
    write_text(dir / g, to_string(c.system));
    write_text(dir / s, to_string(c.inputs));
    rows.push_back({c.id, c.successors, c.inputs.size(), words, c.seed, g, s, c.log_probability});
  }
  std::ostringstream os;
  write_dataset_manifest(os, rows);
  write_text(dir / "dataset.tsv", os.str());
  manifest["outputs"] = {(dir / "dataset.tsv").string(), (dir / "cases").string()};
  manifest["cases"] = rows.size();
  out << rows.size() << " cases written to " << dir.string() << '\n';
  return kOk;
}

inline int cmd_benchmark(const std::string& dataset_path, const SearchFlags& flags,
                         std::size_t workers, const fs::path& out_path, std::ostream& out,
                         ordered_json& manifest) {
  std::ifstream in(dataset_path);
  if (!in) throw InputError("cannot open " + dataset_path);
  auto entries = parse_dataset_manifest(in);
  std::sort(entries.begin(), entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });
  const fs::path base = fs::path(dataset_path).parent_path();
  manifest["inputs"] = {dataset_path};
  auto cfg = flags.echo();
  cfg["workers"] = workers;
  cfg["n"] = "S";
  manifest["config"] = cfg;

  struct Loaded {
    S0LSystem system;
    SequenceSet inputs;
  };
  std::vector<Loaded> loaded;
  for (const auto& e : entries) {
    loaded.push_back({read_grammar((base / e.grammar).string()),
                      read_sequences((base / e.sequences_path).string())});
  }

  std::vector<ReportRow> rows(entries.size());
  std::vector<Experiment> experiments(entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < entries.size();) {
      const auto& e = entries[i];
      SgaParams sga = flags.sga;
      sga.seed = s0l::detail::mix_seed(flags.seed, e.seed);
      const auto r = run_search(loaded[i].inputs, flags.config(e.successors), sga);
      auto cmp = compare(loaded[i].system, e.log_probability, r.best);
      if (r.timed_out) cmp.success = false;
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(r.elapsed).count();
      rows[i] = {e.id, e.successors, loaded[i].inputs.size(), cmp, ms};
      experiments[i] = {cmp, r.elapsed};
      std::lock_guard lock(progress);
      out << e.id << " success=" << (cmp.success ? 1 : 0) << (r.timed_out ? " timed_out" : "")
          << " elapsed_ms=" << ms << '\n';
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, entries.size());
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::ostringstream os;
  write_report(os, rows, aggregate(experiments));
  write_text(out_path, os.str());
  manifest["outputs"] = {out_path.string()};
  return kOk;
}

}  // namespace detail

/// Runs one command line. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infer stochastic L-systems from observed derivations"};
  app.require_subcommand(1);

  std::string grammar_path, seq_path, dataset_path, kind = "ds-vm", out_path;
  std::size_t steps = 0, count = 1, n = 0, retry = 0, words = 5, workers = 1;
  std::uint64_t seed = 0;
  double scale = 1.0;
  detail::SearchFlags flags;

  auto* derive = app.add_subcommand("derive", "sample derivations from a grammar");
  derive->add_option("grammar", grammar_path)->required();
  derive->add_option("--steps", steps, "rewriting steps (words = steps + 1)")
      ->required()
      ->check(CLI::PositiveNumber);
  derive->add_option("--count", count)->check(CLI::PositiveNumber);
  derive->add_option("--seed", seed);
  derive->add_option("--out", out_path)->required();

  auto* infer = app.add_subcommand("infer", "infer a grammar from sequences");
  infer->add_option("sequences", seq_path)->required();
  infer->add_option("--n", n, "successor lengths in the search vector")->required();
  infer->add_option("--retry-n", retry, "on no solution, increase n up to this value");
  infer->add_option("--out", out_path)->required();
  flags.add_to(*infer);

  auto* generate = app.add_subcommand("generate", "generate a benchmark data set");
  generate->add_option("--kind", kind)->check(CLI::IsMember({"ds-pl", "ds-npl", "ds-vm"}));
  generate->add_option("--scale", scale);
  generate->add_option("--seed", seed);
  generate->add_option("--words", words, "words per sequence");
  generate->add_option("--out", out_path, "output directory")->required();

  auto* bench = app.add_subcommand("benchmark", "infer every case of a data set and score it");
  bench->add_option("dataset", dataset_path, "dataset.tsv written by generate")->required();
  bench->add_option("--workers", workers)->check(CLI::PositiveNumber);
  bench->add_option("--out", out_path, "report file")->required();
  flags.add_to(*bench);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
    return kUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  ordered_json manifest;
  fs::path manifest_path;
  int code = kOk;
  try {
    if (derive->parsed()) {
      manifest["subcommand"] = "derive";
      manifest_path = out_path + ".run.json";
      code = detail::cmd_derive(grammar_path, steps, count, seed, out_path, out, manifest);
    } else if (infer->parsed()) {
      manifest["subcommand"] = "infer";
      manifest_path = out_path + ".run.json";
      code = detail::cmd_infer(seq_path, n, retry, flags, out_path, out, manifest);
    } else if (generate->parsed()) {
      manifest["subcommand"] = "generate";
      manifest_path = fs::path(out_path) / "run.json";
      code = detail::cmd_generate(kind, scale, seed, words, out_path, out, manifest);
    } else {
      manifest["subcommand"] = "benchmark";
      manifest_path = out_path + ".run.json";
      code = detail::cmd_benchmark(dataset_path, flags, workers, out_path, out, manifest);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kInvalidInput;
  }

  manifest["exit_status"] = code;
  manifest["elapsed_ms"] = detail::ms_since(t0);
  try {
    detail::write_text(manifest_path, manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return code;
}

}  // namespace s0l::cli
