// Copyright 2026 The textpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// textpriv: command-line front end for the word-substitution mechanism and
// its evaluation harness. Every option can also be set through an
// environment variable named TEXTPRIV_<OPTION>, e.g. TEXTPRIV_EPSILON.
//
// Exit codes: 0 success, 1 input/output or data error, 2 usage error.
// Failures print one JSON object on stderr: {"error": {...}}.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "textpriv/textpriv.hpp"

#ifndef TEXTPRIV_VERSION
#define TEXTPRIV_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace textpriv::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Raised for semantically invalid flag combinations found after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string embedding;
  std::size_t dim = 0;
  std::string lexicon;
  std::string vocabulary;
  double epsilon = 10.0;
  std::optional<std::size_t> k;
  std::string mode = "pos_constrained";
  std::optional<std::uint64_t> seed;
  std::string oov = "pass";
  std::size_t queries = 100;
  double quantile = 0.9;
  std::size_t jobs = 0;
  std::string out;
  std::string input;
  std::string word;
  double bin_width = 0.25;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("sha256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (in.bad()) throw IoError("read failure in " + path.string());
  static const char* kHex = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

// Writes through a temporary sibling and renames it into place on commit().
// The temporary is removed if the writer is destroyed uncommitted.
class AtomicFile {
 public:
  explicit AtomicFile(fs::path target)
      : target_(std::move(target)),
        temp_(target_.parent_path() /
              ("." + target_.filename().string() + ".tmp")) {
    out_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot create " + temp_.string());
  }
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      fs::remove(temp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw IoError("write failure on " + target_.string());
    out_.close();
    std::error_code ec;
    fs::rename(temp_, target_, ec);
    if (ec) throw IoError("cannot rename into " + target_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_atomic(const fs::path& path, const std::string& content) {
  AtomicFile file(path);
  file.stream() << content;
  file.commit();
}

// Shared state of one invocation: resolved options, loaded inputs, and the
// manifest under construction.
class Run {
 public:
  Run(std::string command, Options opts)
      : command_(std::move(command)), opts_(std::move(opts)) {
    started_ = utc_now();
    if (!opts_.seed) {
      std::random_device rd;
      opts_.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
      seed_generated_ = true;
    }
    if (!opts_.out.empty()) {
      std::error_code ec;
      fs::create_directories(opts_.out, ec);
      if (ec) throw IoError("cannot create output directory " + opts_.out);
    }
  }

  const Options& opts() const { return opts_; }
  std::uint64_t seed() const { return *opts_.seed; }
  bool to_directory() const { return !opts_.out.empty(); }

  void record_input(const std::string& role, const std::string& path) {
    inputs_[role] = {{"path", path},
                     {"sha256", sha256_file(path)},
                     {"bytes", fs::file_size(path)}};
  }

  void echo(const std::string& key, json value) { config_[key] = std::move(value); }

  const EmbeddingTable& table() {
    if (!table_) {
      if (opts_.embedding.empty()) throw UsageError("--embedding is required");
      table_ = load_table();
    }
    return *table_;
  }

  const PosLexicon& lexicon() {
    if (!lexicon_) {
      if (opts_.lexicon.empty()) throw UsageError("--lexicon is required");
      record_input("lexicon", opts_.lexicon);
      auto loaded = load_lexicon_file(opts_.lexicon);
      lexicon_ = std::move(loaded.lexicon);
      echo("lexicon_duplicate_tokens", loaded.duplicate_tokens);
    }
    return *lexicon_;
  }

  const NearestNeighborIndex& index() {
    if (!index_) index_.emplace(table());
    return *index_;
  }

  // Baseline defaults to k = 1, the constrained rule to k = 20. An explicit
  // k > 1 with baseline is rejected by validation.
  MechanismConfig config(Mode mode) const {
    const std::size_t k = opts_.k.value_or(mode == Mode::kBaseline ? 1 : 20);
    MechanismConfig cfg{opts_.epsilon, k, seed(), mode, OovPolicy::kPassThrough};
    if (opts_.oov == "error") cfg.oov = OovPolicy::kError;
    try {
      cfg.validate();
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }

  Mode mode() const {
    const auto mode = parse_mode(opts_.mode);
    if (!mode) throw UsageError("--mode must be baseline or pos_constrained");
    return *mode;
  }

  // Emits `result` as <name>.json in the output directory, or on stdout with
  // the manifest inlined.
  void emit(const std::string& name, json result,
            std::map<std::string, std::string> extra_files = {}) {
    if (!to_directory()) {
      result["manifest"] = manifest();
      std::cout << result.dump(2) << '\n';
      return;
    }
    const fs::path dir(opts_.out);
    result["manifest"] = "manifest.json";
    const std::string file = name + ".json";
    outputs_.push_back(file);
    for (const auto& [extra, content] : extra_files) {
      write_atomic(dir / extra, content);
      outputs_.push_back(extra);
    }
    write_atomic(dir / file, result.dump(2) + "\n");
    write_manifest();
  }

  void add_output(const std::string& file) { outputs_.push_back(file); }

  void write_manifest() {
    write_atomic(fs::path(opts_.out) / "manifest.json", manifest().dump(2) + "\n");
  }

  json manifest() const {
    json config = config_;
    config["seed"] = seed();
    config["seed_generated"] = seed_generated_;
    return {{"tool", "textpriv"},
            {"version", TEXTPRIV_VERSION},
            {"command", command_},
            {"config", config},
            {"inputs", inputs_},
            {"outputs", outputs_},
            {"started_at", started_},
            {"finished_at", utc_now()}};
  }

 private:
  EmbeddingTable load_table() {
    record_input("embedding", opts_.embedding);
    EmbeddingTable table = [&] {
      std::ifstream probe(opts_.embedding, std::ios::binary);
      if (!probe) throw IoError("cannot open " + opts_.embedding);
      char magic[sizeof kBinaryMagic] = {};
      probe.read(magic, sizeof magic);
      if (probe && std::memcmp(magic, kBinaryMagic, sizeof magic) == 0) {
        probe.seekg(0);
        return read_binary_cache(probe);
      }
      const std::size_t dim =
          opts_.dim != 0 ? opts_.dim : detect_dimension(opts_.embedding);
      auto loaded = load_embeddings_file(opts_.embedding, dim);
      echo("embedding_duplicate_tokens", loaded.duplicate_tokens);
      return std::move(loaded.table);
    }();
    if (!opts_.vocabulary.empty()) {
      record_input("vocabulary", opts_.vocabulary);
      std::ifstream in(opts_.vocabulary);
      if (!in) throw IoError("cannot open " + opts_.vocabulary);
      const auto words = read_word_list(in);
      table = subset(table, words);
    }
    echo("vocabulary_size", table.size());
    echo("dimension", table.dim());
    return table;
  }

  std::string command_;
  Options opts_;
  bool seed_generated_ = false;
  std::string started_;
  json config_ = json::object();
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
  std::optional<EmbeddingTable> table_;
  std::optional<PosLexicon> lexicon_;
  std::optional<NearestNeighborIndex> index_;
};

json census_json(const CategoryCensus& census) {
  json counts = json::object();
  for (std::size_t i = 0; i < kNumTags; ++i) {
    counts[std::string(tag_name(static_cast<PosTag>(i)))] = census[i];
  }
  return counts;
}

void cmd_privatize(Run& run) {
  const auto& o = run.opts();
  const auto cfg = run.config(run.mode());
  run.echo("epsilon", cfg.epsilon);
  run.echo("k", cfg.k);
  run.echo("mode", mode_name(cfg.mode));
  run.echo("oov", oov_policy_name(cfg.oov));
  const Mechanism mechanism(run.table(), run.index(), run.lexicon(), cfg);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (!o.input.empty() && o.input != "-") {
    run.record_input("corpus", o.input);
    file.open(o.input, std::ios::binary);
    if (!file) throw IoError("cannot open " + o.input);
    in = &file;
  }
  if (!run.to_directory()) {
    privatize_corpus(*in, std::cout, mechanism, o.jobs,
                     {{"manifest", run.manifest()}});
    return;
  }
  const std::string name = "privatized.jsonl";
  AtomicFile out(fs::path(o.out) / name);
  privatize_corpus(*in, out.stream(), mechanism, o.jobs,
                   {{"manifest", "manifest.json"}});
  out.commit();
  run.add_output(name);
  run.write_manifest();
}

void echo_sweep(Run& run, const MechanismConfig& cfg) {
  run.echo("epsilon", cfg.epsilon);
  run.echo("k", cfg.k);
  run.echo("mode", mode_name(cfg.mode));
  run.echo("queries", run.opts().queries);
}

MechanismConfig sweep_config(Run& run) {
  const auto cfg = run.config(run.mode());
  if (run.opts().queries == 0) throw UsageError("--queries must be positive");
  return cfg;
}

void cmd_deniability(Run& run) {
  const auto cfg = sweep_config(run);
  echo_sweep(run, cfg);
  const Mechanism mechanism(run.table(), run.index(), run.lexicon(), cfg);
  const auto report = deniability_stats(mechanism, run.opts().queries, run.opts().jobs);
  std::ostringstream csv;
  write_deniability_csv(csv, report, run.table());
  json result = {{"config", to_json(cfg)}, {"deniability", to_json(report)}};
  if (run.to_directory()) result["per_word"] = "deniability.csv";
  run.emit("deniability", result, {{"deniability.csv", csv.str()}});
}

void cmd_pos(Run& run) {
  const auto cfg = sweep_config(run);
  echo_sweep(run, cfg);
  const Mechanism mechanism(run.table(), run.index(), run.lexicon(), cfg);
  const auto matrix = pos_confusion(mechanism, run.opts().queries, run.opts().jobs);
  json result = to_json(matrix);
  result["config"] = to_json(cfg);
  run.emit("pos_confusion", result);
}

void cmd_distance(Run& run) {
  const auto& o = run.opts();
  const auto cons = run.config(Mode::kPosConstrained);
  if (cons.k < 2) throw UsageError("analyze-distance needs --k > 1");
  if (o.queries == 0) throw UsageError("--queries must be positive");
  if (!(o.bin_width > 0.0)) throw UsageError("--bin-width must be positive");
  auto base = cons;
  base.mode = Mode::kBaseline;
  base.k = 1;
  run.echo("epsilon", o.epsilon);
  run.echo("k", cons.k);
  run.echo("queries", o.queries);
  run.echo("bin_width", o.bin_width);
  const auto report = distance_distribution(base, cons, run.index(), run.lexicon(),
                                            o.queries, o.jobs, o.bin_width);
  std::ostringstream csv;
  write_distance_csv(csv, report, run.table());
  json result = to_json(report);
  result["epsilon"] = o.epsilon;
  result["k"] = cons.k;
  if (run.to_directory()) result["per_sample"] = "distances.csv";
  run.emit("distance", result, {{"distances.csv", csv.str()}});
}

void cmd_calibrate(Run& run) {
  const auto& o = run.opts();
  if (!(o.quantile > 0.0 && o.quantile < 1.0)) {
    throw UsageError("--quantile must lie in (0, 1)");
  }
  const auto cfg = sweep_config(run);
  run.echo("k", cfg.k);
  run.echo("mode", mode_name(cfg.mode));
  run.echo("queries", o.queries);
  run.echo("quantile", o.quantile);
  const auto result =
      calibrate_epsilon(run.index(), run.lexicon(), cfg, o.quantile, o.queries, o.jobs);
  json out = to_json(result);
  out["quantile"] = o.quantile;
  run.emit("calibration", out);
}

void cmd_estimate_k(Run& run) {
  const auto estimate = estimate_required_k(run.table(), run.lexicon());
  run.emit("estimate_k", to_json(estimate));
}

void cmd_census(Run& run) {
  const auto census = category_census(run.lexicon(), run.table());
  run.emit("census", {{"vocabulary_size", run.table().size()},
                      {"counts", census_json(census)}});
}

void cmd_knn(Run& run) {
  const auto& o = run.opts();
  if (o.word.empty()) throw UsageError("knn needs --word");
  const std::size_t k = o.k.value_or(10);
  if (k == 0) throw UsageError("--k must be positive");
  run.echo("word", o.word);
  run.echo("k", k);
  const auto id = run.table().find(o.word);
  if (!id) throw LookupError("'" + o.word + "' is not in the vocabulary");
  const auto pool = run.index().nearest(run.table().vector_of(*id), k);
  json neighbors = json::array();
  for (const auto& c : pool) {
    neighbors.push_back({{"word", run.table().word(c.id)}, {"distance", c.distance}});
  }
  run.emit("knn", {{"word", o.word}, {"neighbors", neighbors}});
}

void print_error(const std::string& kind, const std::string& message,
                 std::optional<std::size_t> line = std::nullopt) {
  json error = {{"kind", kind}, {"message", message}};
  if (line) error["line"] = *line;
  std::cerr << json{{"error", error}}.dump() << '\n';
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Privatize text by noisy word substitution and evaluate the mechanism"};
  app.set_version_flag("--version", TEXTPRIV_VERSION);
  app.require_subcommand(1);

  Options opts;
  const auto env = [](const std::string& name) {
    return "TEXTPRIV_" + name;
  };
  const auto add_inputs = [&](CLI::App* sub, bool needs_lexicon) {
    sub->add_option("--embedding", opts.embedding, "GloVe text file or binary cache")
        ->envname(env("EMBEDDING"))
        ->required();
    sub->add_option("--dim", opts.dim, "Vector dimension (0 = detect)")
        ->envname(env("DIM"));
    sub->add_option("--vocabulary", opts.vocabulary,
                    "Restrict the embedding to these words (one per line)")
        ->envname(env("VOCABULARY"));
    auto* lex = sub->add_option("--lexicon", opts.lexicon, "token<TAB>tag file")
                    ->envname(env("LEXICON"));
    if (needs_lexicon) lex->required();
    sub->add_option("--out", opts.out, "Output directory (default: stdout)")
        ->envname(env("OUT"));
  };
  const auto add_mechanism = [&](CLI::App* sub) {
    sub->add_option("--epsilon", opts.epsilon, "Privacy budget")
        ->envname(env("EPSILON"))
        ->capture_default_str();
    sub->add_option("--k", opts.k, "Candidate pool size (default 1 baseline, 20 constrained)")
        ->envname(env("K"));
    sub->add_option("--mode", opts.mode, "baseline | pos_constrained")
        ->envname(env("MODE"))
        ->check(CLI::IsMember({"baseline", "pos_constrained"}))
        ->capture_default_str();
    sub->add_option("--seed", opts.seed, "Random seed (drawn and recorded if absent)")
        ->envname(env("SEED"));
    sub->add_option("--jobs", opts.jobs, "Worker threads (0 = all cores)")
        ->envname(env("JOBS"));
  };
  const auto add_queries = [&](CLI::App* sub) {
    sub->add_option("--queries", opts.queries, "Queries per word")
        ->envname(env("QUERIES"))
        ->capture_default_str();
  };

  std::map<CLI::App*, void (*)(Run&)> handlers;

  auto* privatize = app.add_subcommand("privatize", "Privatize a tokenized corpus");
  add_inputs(privatize, true);
  add_mechanism(privatize);
  privatize->add_option("--oov", opts.oov, "Out-of-vocabulary policy: pass | error")
      ->envname(env("OOV"))
      ->check(CLI::IsMember({"pass", "error"}))
      ->capture_default_str();
  privatize->add_option("--input", opts.input, "Corpus, one document per line (default: stdin)")
      ->envname(env("INPUT"));
  handlers[privatize] = cmd_privatize;

  auto* deniability = app.add_subcommand("analyze-deniability",
                                         "Self-substitution and support counts per word");
  add_inputs(deniability, true);
  add_mechanism(deniability);
  add_queries(deniability);
  handlers[deniability] = cmd_deniability;

  auto* pos = app.add_subcommand("analyze-pos", "Grammatical-category confusion matrix");
  add_inputs(pos, true);
  add_mechanism(pos);
  add_queries(pos);
  handlers[pos] = cmd_pos;

  auto* distance = app.add_subcommand(
      "analyze-distance", "Substitution distances, baseline vs constrained, paired noise");
  add_inputs(distance, true);
  add_mechanism(distance);
  add_queries(distance);
  distance->add_option("--bin-width", opts.bin_width, "Histogram bin width")
      ->envname(env("BIN_WIDTH"))
      ->capture_default_str();
  handlers[distance] = cmd_distance;

  auto* calibrate = app.add_subcommand(
      "calibrate", "Largest epsilon at which a quantile of words stays deniable");
  add_inputs(calibrate, true);
  add_mechanism(calibrate);
  add_queries(calibrate);
  calibrate->add_option("--quantile", opts.quantile, "Required deniable fraction")
      ->envname(env("QUANTILE"))
      ->capture_default_str();
  handlers[calibrate] = cmd_calibrate;

  auto* estimate = app.add_subcommand(
      "estimate-k", "Mean rank of the nearest same-category neighbour");
  add_inputs(estimate, true);
  handlers[estimate] = cmd_estimate_k;

  auto* census = app.add_subcommand("census", "Vocabulary size per category");
  add_inputs(census, true);
  handlers[census] = cmd_census;

  auto* knn = app.add_subcommand("knn", "Nearest neighbours of a word");
  add_inputs(knn, false);
  knn->add_option("--word", opts.word, "Query word")->envname(env("WORD"))->required();
  knn->add_option("--k", opts.k, "Neighbours to list (default 10)")->envname(env("K"));
  handlers[knn] = cmd_knn;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    Run run(chosen->get_name(), opts);
    handlers.at(chosen)(run);
    return kExitOk;
  } catch (const UsageError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    print_error(e.kind(), e.what(), e.line());
    return kExitFailure;
  } catch (const CalibrationError& e) {
    json error = {{"kind", e.kind()},
                  {"message", e.what()},
                  {"achieved_fraction", e.achieved_fraction()}};
    std::cerr << json{{"error", error}}.dump() << '\n';
    return kExitFailure;
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return kExitFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    print_error("io", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitFailure;
  }
}

}  // namespace
}  // namespace textpriv::cli

int main(int argc, char** argv) { return textpriv::cli::main_impl(argc, argv); }
