// Command-line front end: index building, quote scanning, scrubbing, and
// metric evaluation over JSONL files.
//
// Exit codes: 0 success, 1 usage/config, 2 I/O, 3 malformed input,
// 4 remote-endpoint failures above the --max-failures threshold.

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quotescrub/quotescrub.hpp"
#include "quotescrub/detail/parallel.hpp"
#include "quotescrub/http_client.hpp"

namespace qs = quotescrub;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitTransport = 4;

// Optional JSON config file with one section per subcommand; command-line
// flags take precedence, defaults fill the rest. The resolved snapshot goes
// into the manifest.
json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw qs::IoError("cannot open config: " + path);
  json cfg = json::parse(in, nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object()) {
    throw qs::FormatError(qs::FormatError::Kind::bad_value,
                          "config file is not a JSON object: " + path);
  }
  return cfg;
}

// Applies `section[key]` to `value` unless the flag was given explicitly.
template <class T>
void merge_config(const CLI::App& cmd, const json& section,
                  const std::string& flag, const std::string& key, T& value) {
  if (cmd.count(flag) > 0) return;
  if (!section.contains(key)) return;
  value = section[key].get<T>();
}

struct InputRecord {
  std::string id;
  std::string text;
};

// Reads {"id", "text"} objects leniently: malformed lines become error rows
// in the output and processing continues.
std::vector<InputRecord> read_input_chunk(qs::JsonlReader& reader,
                                          std::size_t max_records,
                                          std::vector<json>& error_rows) {
  std::vector<InputRecord> chunk;
  while (chunk.size() < max_records) {
    auto obj = reader.next_lenient([&](const std::string&, const std::string& msg) {
      error_rows.push_back({{"id", nullptr}, {"error", msg}});
    });
    if (!obj) break;
    if (!obj->contains("id") || !(*obj)["id"].is_string() ||
        !obj->contains("text") || !(*obj)["text"].is_string()) {
      error_rows.push_back(
          {{"id", obj->value("id", json{})},
           {"error", "line " + std::to_string(reader.line_number()) +
                         ": expected {\"id\": string, \"text\": string}"}});
      continue;
    }
    chunk.push_back({(*obj)["id"].get<std::string>(),
                     (*obj)["text"].get<std::string>()});
  }
  return chunk;
}

// Serializes completions through a fixed number of in-flight slots.
class InflightLimiter : public qs::CompletionClient {
 public:
  InflightLimiter(qs::CompletionClient& inner, unsigned max_inflight)
      : inner_(&inner), slots_(max_inflight == 0 ? 1 : max_inflight) {}

  std::string complete(const std::string& instruction,
                       const std::string& input) override {
    acquire();
    try {
      std::string out = inner_->complete(instruction, input);
      release();
      return out;
    } catch (...) {
      release();
      throw;
    }
  }

 private:
  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return used_ < slots_; });
    ++used_;
  }
  void release() {
    std::lock_guard<std::mutex> lock(mu_);
    --used_;
    cv_.notify_one();
  }

  qs::CompletionClient* inner_;
  unsigned slots_;
  unsigned used_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

json quote_to_json(const qs::QuoteSpan& q) {
  return {{"text", q.text},
          {"len", q.length},
          {"orig_start", q.orig_start},
          {"orig_end", q.orig_end}};
}

json trace_to_json(const std::vector<qs::ScrubIteration>& trace) {
  json arr = json::array();
  for (const qs::ScrubIteration& it : trace) {
    json quotes = json::array();
    for (const qs::QuoteSpan& q : it.quotes) quotes.push_back(quote_to_json(q));
    arr.push_back({{"quotes", quotes},
                   {"max_len", it.max_len},
                   {"rewrite_prompt", it.rewrite_prompt}});
  }
  return arr;
}

// --- build-index ---

struct BuildIndexArgs {
  std::string corpus;
  std::string out_stem;
  std::uint32_t n = 25;
  std::vector<std::uint32_t> metric_widths = {50, 100};
  double fpr = 0.001;
  std::uint64_t seed = 0;
  std::uint64_t expected_items = 0;
  unsigned jobs = 1;
};

int cmd_build_index(const BuildIndexArgs& args) {
  qs::RunManifest manifest;
  manifest.command = "build-index";
  manifest.started_at = qs::utc_timestamp();
  manifest.config = {{"corpus", args.corpus},
                     {"out", args.out_stem},
                     {"n", args.n},
                     {"metric_widths", args.metric_widths},
                     {"fpr", args.fpr},
                     {"seed", args.seed},
                     {"expected_items", args.expected_items},
                     {"jobs", args.jobs}};
  manifest.add_input(args.corpus);

  qs::IndexConfig cfg;
  cfg.ngram_width = args.n;
  cfg.metric_widths = args.metric_widths;
  cfg.target_fpr = args.fpr;
  cfg.seed = args.seed;
  cfg.expected_items = args.expected_items;
  cfg.warn = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };

  const qs::JsonlCorpus corpus(args.corpus);
  const qs::CorpusIndexSet set = qs::build_index_set(corpus, cfg, args.jobs);

  const auto report = [](std::uint32_t width, const qs::BloomSketch& sk) {
    std::cout << "width " << width << ": m=" << sk.bit_count()
              << " k_h=" << sk.hash_count() << " inserted=" << sk.inserted_count()
              << " fill=" << sk.fill_ratio()
              << " est_fpr=" << sk.estimated_fpr() << "\n";
  };
  const std::string extraction_path =
      qs::sketch_file_name(args.out_stem, set.extraction.ngram_width());
  qs::save_sketch(set.extraction, extraction_path);
  manifest.add_output(extraction_path);
  report(set.extraction.ngram_width(), set.extraction);
  for (const auto& [width, sk] : set.metric) {
    const std::string path = qs::sketch_file_name(args.out_stem, width);
    qs::save_sketch(sk, path);
    manifest.add_output(path);
    report(width, sk);
  }

  manifest.finished_at = qs::utc_timestamp();
  manifest.write(args.out_stem + ".manifest.json");
  return kExitOk;
}

// --- scan ---

struct ScanArgs {
  std::string sketch;
  std::string input;
  std::string out;  // empty = stdout
};

int cmd_scan(const ScanArgs& args) {
  const qs::BloomSketch sk = qs::load_sketch(args.sketch);
  std::ifstream in = qs::open_input(args.input);
  std::ofstream out_file;
  if (!args.out.empty()) out_file = qs::open_output(args.out);
  std::ostream& out = args.out.empty() ? std::cout : out_file;

  qs::JsonlReader reader(in);
  for (;;) {
    std::vector<json> error_rows;
    std::vector<InputRecord> chunk = read_input_chunk(reader, 256, error_rows);
    for (const json& row : error_rows) out << row.dump() << "\n";
    if (chunk.empty() && error_rows.empty()) break;
    for (const InputRecord& rec : chunk) {
      const std::vector<qs::QuoteSpan> spans = qs::extract_quotes(sk, rec.text);
      json quotes = json::array();
      for (const qs::QuoteSpan& q : spans) quotes.push_back(quote_to_json(q));
      out << json{{"id", rec.id},
                  {"max_quote_len", qs::max_quote_len(spans)},
                  {"quotes", quotes}}
                 .dump()
          << "\n";
    }
  }
  if (!args.out.empty()) {
    qs::RunManifest manifest;
    manifest.command = "scan";
    manifest.started_at = manifest.finished_at = qs::utc_timestamp();
    manifest.config = {{"sketch", args.sketch}, {"input", args.input}, {"out", args.out}};
    manifest.add_input(args.sketch);
    manifest.add_input(args.input);
    out.flush();
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");
  }
  return kExitOk;
}

// --- scrub ---

struct ScrubArgs {
  std::string sketch;
  std::string input;
  std::string out;  // empty = stdout
  std::size_t tau = 50;
  std::size_t max_iters = 5;
  bool abstain = true;
  std::string guidance = "quote";
  std::string rewriter = "mock";
  std::string http_config;
  bool trace = false;
  unsigned jobs = 1;
  unsigned max_inflight = 4;
  std::uint64_t max_failures = 0;
  bool sweep = false;
  std::vector<std::size_t> sweep_taus = {50, 100, 150, 200, 250, 300};
  std::string metric_sketch;
  std::string plot_data;
};

struct BatchStats {
  std::uint64_t processed = 0;
  std::uint64_t failures = 0;
  std::map<std::string, std::uint64_t> by_status;
  double mean_iterations = 0.0;
};

std::unique_ptr<qs::CompletionClient> make_rewriter(const ScrubArgs& args,
                                                    const qs::BloomSketch& sk) {
  if (args.rewriter == "mock") {
    return std::make_unique<qs::SentinelRewriteClient>(sk);
  }
  if (args.rewriter == "identity") {
    return std::make_unique<qs::IdentityClient>();
  }
  if (args.rewriter == "http") {
    if (args.http_config.empty()) {
      throw qs::ConfigError("--rewriter http requires --http-config");
    }
    return std::make_unique<qs::HttpCompletionClient>(
        qs::load_http_config(args.http_config));
  }
  throw qs::ConfigError("unknown rewriter: " + args.rewriter);
}

BatchStats run_scrub_batch(const ScrubArgs& args, const qs::BloomSketch& sk,
                           const qs::ScrubConfig& cfg,
                           qs::CompletionClient& rewriter, std::ostream& out) {
  std::ifstream in = qs::open_input(args.input);
  qs::JsonlReader reader(in);
  BatchStats stats;
  double iteration_sum = 0.0;
  for (;;) {
    std::vector<json> error_rows;
    std::vector<InputRecord> chunk = read_input_chunk(reader, 256, error_rows);
    for (const json& row : error_rows) {
      out << row.dump() << "\n";
      ++stats.failures;
    }
    if (chunk.empty()) {
      if (error_rows.empty()) break;
      continue;
    }
    std::vector<json> rows(chunk.size());
    qs::detail::parallel_for(chunk.size(), args.jobs, [&](std::size_t i) {
      const InputRecord& rec = chunk[i];
      try {
        const qs::ScrubOutcome outcome = qs::scrub(rec.text, sk, cfg, rewriter);
        json row = {{"id", rec.id},
                    {"final_text", outcome.final_text},
                    {"status", qs::to_string(outcome.status)},
                    {"iterations_used", outcome.iterations_used},
                    {"residual_max_quote_len", outcome.residual_max_quote_len}};
        if (args.trace) row["trace"] = trace_to_json(outcome.trace);
        rows[i] = std::move(row);
      } catch (const qs::TransportError& e) {
        rows[i] = {{"id", rec.id}, {"error", e.what()}};
      }
    });
    for (json& row : rows) {
      if (row.contains("error")) {
        ++stats.failures;
      } else {
        ++stats.processed;
        ++stats.by_status[row["status"].get<std::string>()];
        iteration_sum += row["iterations_used"].get<double>();
      }
      out << row.dump() << "\n";
    }
  }
  stats.mean_iterations =
      stats.processed ? iteration_sum / double(stats.processed) : 0.0;
  return stats;
}

int cmd_scrub(const ScrubArgs& args) {
  const qs::BloomSketch sk = qs::load_sketch(args.sketch);

  qs::ScrubConfig cfg;
  cfg.tau = args.tau;
  cfg.max_iterations = args.max_iters;
  cfg.abstain = args.abstain;
  cfg.guidance = args.guidance == "none" ? qs::Guidance::unguided
                                         : qs::Guidance::quote_guided;
  if (args.guidance != "none" && args.guidance != "quote") {
    throw qs::ConfigError("--guidance must be quote or none");
  }
  if (args.tau < sk.ngram_width()) {
    std::cerr << "warning: tau " << args.tau << " is below the sketch width "
              << sk.ngram_width() << "; quotes shorter than the width are "
              << "undetectable\n";
  }

  std::unique_ptr<qs::CompletionClient> rewriter = make_rewriter(args, sk);
  std::unique_ptr<InflightLimiter> limiter;
  qs::CompletionClient* client = rewriter.get();
  if (args.rewriter == "http") {
    limiter = std::make_unique<InflightLimiter>(*rewriter, args.max_inflight);
    client = limiter.get();
  }

  const auto manifest_config = [&](std::size_t tau) {
    return json{{"sketch", args.sketch},
                {"input", args.input},
                {"tau", tau},
                {"max_iters", args.max_iters},
                {"abstain", args.abstain},
                {"guidance", args.guidance},
                {"rewriter", args.rewriter},
                {"jobs", args.jobs}};
  };

  if (args.sweep) {
    if (args.metric_sketch.empty()) {
      throw qs::ConfigError("--sweep requires --metric-sketch for %R>Q");
    }
    const qs::BloomSketch metric_sk = qs::load_sketch(args.metric_sketch);
    std::ofstream plot_file;
    if (!args.plot_data.empty()) plot_file = qs::open_output(args.plot_data);

    std::cout << "tau,mean_iterations,pct_r_gt_q_" << metric_sk.ngram_width()
              << "\n";
    std::uint64_t total_failures = 0;
    for (const std::size_t tau : args.sweep_taus) {
      qs::ScrubConfig sweep_cfg = cfg;
      sweep_cfg.tau = tau;
      std::ostringstream batch_out;
      const BatchStats stats =
          run_scrub_batch(args, sk, sweep_cfg, *client, batch_out);
      total_failures += stats.failures;
      // %R>Q over the final texts of this sweep point.
      std::vector<std::string> finals;
      std::istringstream lines(batch_out.str());
      std::string line;
      while (std::getline(lines, line)) {
        const json row = json::parse(line);
        if (row.contains("final_text")) {
          finals.push_back(row["final_text"].get<std::string>());
        }
      }
      const double rgtq =
          finals.empty() ? 0.0 : qs::percent_r_gt_q(finals, metric_sk);
      std::cout << tau << "," << stats.mean_iterations << "," << rgtq << "\n";
      if (!args.plot_data.empty()) {
        plot_file << tau << "," << stats.mean_iterations << "," << rgtq << "\n";
      }
    }
    if (!args.plot_data.empty()) {
      plot_file.flush();
      qs::RunManifest manifest;
      manifest.command = "scrub-sweep";
      manifest.started_at = manifest.finished_at = qs::utc_timestamp();
      manifest.config = manifest_config(args.tau);
      manifest.config["sweep_taus"] = args.sweep_taus;
      manifest.config["metric_sketch"] = args.metric_sketch;
      manifest.deterministic = args.rewriter != "http";
      manifest.add_input(args.sketch);
      manifest.add_input(args.metric_sketch);
      manifest.add_input(args.input);
      manifest.add_output(args.plot_data);
      manifest.write(args.plot_data + ".manifest.json");
    }
    if (total_failures > args.max_failures) return kExitTransport;
    return kExitOk;
  }

  std::ofstream out_file;
  if (!args.out.empty()) out_file = qs::open_output(args.out);
  std::ostream& out = args.out.empty() ? std::cout : out_file;
  const std::string started = qs::utc_timestamp();
  const BatchStats stats = run_scrub_batch(args, sk, cfg, *client, out);

  std::cerr << "scrubbed " << stats.processed << " example(s), "
            << stats.failures << " failure(s)";
  for (const auto& [status, count] : stats.by_status) {
    std::cerr << ", " << status << "=" << count;
  }
  std::cerr << "\n";

  if (!args.out.empty()) {
    qs::RunManifest manifest;
    manifest.command = "scrub";
    manifest.started_at = started;
    manifest.finished_at = qs::utc_timestamp();
    manifest.config = manifest_config(args.tau);
    manifest.deterministic = args.rewriter != "http";
    manifest.add_input(args.sketch);
    manifest.add_input(args.input);
    out.flush();
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");
  }
  if (stats.failures > args.max_failures) return kExitTransport;
  return kExitOk;
}

// --- eval ---

struct EvalArgs {
  std::string eval_file;
  std::vector<std::string> metric_sketches;
  std::string compare;
  std::string out;  // empty = stdout
  std::string csv;
  unsigned jobs = 1;
  bool lcs_substring = false;
  std::size_t acs_min_block = 3;
};

std::vector<qs::EvalExample> load_eval_file(const std::string& path) {
  std::ifstream in = qs::open_input(path);
  qs::JsonlReader reader(in);
  std::vector<qs::EvalExample> examples;
  while (auto obj = reader.next()) {
    const auto need = [&](const char* key) -> std::string {
      if (!obj->contains(key) || !(*obj)[key].is_string()) {
        throw qs::FormatError(qs::FormatError::Kind::bad_value,
                              path + " line " + std::to_string(reader.line_number()) +
                                  ": missing string field \"" + key + "\"");
      }
      return (*obj)[key].get<std::string>();
    };
    qs::EvalExample ex;
    ex.id = need("id");
    ex.prompt = need("prompt");
    ex.ground_truth = need("ground_truth");
    ex.response = need("response");
    if (obj->contains("qa") && !(*obj)["qa"].is_null()) {
      const json& qa = (*obj)["qa"];
      if (!qa.is_object() || !qa.contains("question") || !qa.contains("gold_answer")) {
        throw qs::FormatError(qs::FormatError::Kind::bad_value,
                              path + " line " + std::to_string(reader.line_number()) +
                                  ": qa needs question and gold_answer");
      }
      ex.qa = qs::QaPair{qa["question"].get<std::string>(),
                         qa["gold_answer"].get<std::string>()};
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

int cmd_eval(const EvalArgs& args) {
  const std::vector<qs::EvalExample> examples = load_eval_file(args.eval_file);

  std::map<std::uint32_t, qs::BloomSketch> metric_sketches;
  for (const std::string& path : args.metric_sketches) {
    qs::BloomSketch sk = qs::load_sketch(path);
    metric_sketches.emplace(sk.ngram_width(), std::move(sk));
  }

  qs::EvalOptions opts;
  opts.jobs = args.jobs;
  opts.lcs_substring = args.lcs_substring;
  opts.acs.min_block_words = args.acs_min_block;

  qs::MetricReport report = qs::evaluate(examples, metric_sketches, opts);

  if (!args.compare.empty()) {
    const std::vector<qs::EvalExample> other = load_eval_file(args.compare);
    std::vector<std::map<std::string, double>> rows(other.size());
    qs::detail::parallel_for(other.size(), args.jobs, [&](std::size_t i) {
      rows[i] = qs::compute_example_metrics(other[i], opts);
    });
    qs::MetricTable table_b;
    for (std::size_t i = 0; i < other.size(); ++i) {
      table_b[other[i].id] = std::move(rows[i]);
    }
    const auto& directions = qs::default_win_rate_directions();
    const qs::WinRate ab = qs::win_rate(report.per_example, table_b, directions);
    const qs::WinRate ba = qs::win_rate(table_b, report.per_example, directions);
    for (const auto& [metric, dir] : directions) {
      report.win_rate_metrics.push_back(metric);
    }
    report.win_rate_a_vs_b = ab.value();
    report.win_rate_b_vs_a = ba.value();
  }

  const json out_json = qs::report_to_json(report);
  if (args.out.empty()) {
    std::cout << out_json.dump(2) << "\n";
  } else {
    std::ofstream out = qs::open_output(args.out);
    out << out_json.dump(2) << "\n";
  }
  if (!args.csv.empty()) {
    std::ofstream csv = qs::open_output(args.csv);
    qs::write_report_csv(report, csv);
  }
  if (!args.out.empty()) {
    qs::RunManifest manifest;
    manifest.command = "eval";
    manifest.started_at = manifest.finished_at = qs::utc_timestamp();
    manifest.config = {{"eval_file", args.eval_file},
                       {"metric_sketches", args.metric_sketches},
                       {"compare", args.compare},
                       {"jobs", args.jobs},
                       {"lcs_substring", args.lcs_substring},
                       {"acs_min_block", args.acs_min_block}};
    manifest.add_input(args.eval_file);
    for (const std::string& path : args.metric_sketches) manifest.add_input(path);
    if (!args.compare.empty()) manifest.add_input(args.compare);
    manifest.add_output(args.out);
    if (!args.csv.empty()) manifest.add_output(args.csv);
    manifest.write(args.out + ".manifest.json");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corpus-scale verbatim-quote screening and scrubbing"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override)");

  BuildIndexArgs build_args;
  CLI::App* build = app.add_subcommand("build-index",
                                       "Index corpus n-grams into sketch files");
  build->add_option("--corpus", build_args.corpus, "corpus JSONL (id, text)")
      ->required();
  build->add_option("--out", build_args.out_stem, "output file stem")->required();
  build->add_option("--n", build_args.n, "extraction n-gram width")
      ->check(CLI::PositiveNumber);
  build->add_option("--metric-widths", build_args.metric_widths,
                    "metric filter widths")
      ->delimiter(',');
  build->add_option("--fpr", build_args.fpr, "target false-positive rate")
      ->check(CLI::Range(1e-12, 0.999999));
  build->add_option("--seed", build_args.seed, "hash seed");
  build->add_option("--expected-items", build_args.expected_items,
                    "skip the counting pass and size for this many n-grams");
  build->add_option("--jobs", build_args.jobs,
                    "insert-pass workers (private sketches, merged)");

  ScanArgs scan_args;
  CLI::App* scan = app.add_subcommand("scan", "Report quote spans per input");
  scan->add_option("--sketch", scan_args.sketch, "extraction sketch file")
      ->required();
  scan->add_option("--input", scan_args.input, "JSONL input (id, text)")
      ->required();
  scan->add_option("--out", scan_args.out, "output JSONL (default stdout)");

  ScrubArgs scrub_args;
  CLI::App* scrub = app.add_subcommand("scrub", "Rewrite long quotes away");
  scrub->add_option("--sketch", scrub_args.sketch, "extraction sketch file")
      ->required();
  scrub->add_option("--input", scrub_args.input, "JSONL input (id, text)")
      ->required();
  scrub->add_option("--out", scrub_args.out, "output JSONL (default stdout)");
  scrub->add_option("--tau", scrub_args.tau, "risk threshold (normalized chars)")
      ->check(CLI::PositiveNumber);
  scrub->add_option("--max-iters", scrub_args.max_iters, "rewrite budget");
  scrub->add_flag("--abstain,!--no-abstain", scrub_args.abstain,
                  "replace stubborn responses with the abstention text");
  scrub->add_option("--guidance", scrub_args.guidance, "quote | none");
  scrub->add_option("--rewriter", scrub_args.rewriter, "mock | identity | http");
  scrub->add_option("--http-config", scrub_args.http_config,
                    "JSON config for the chat-completions endpoint");
  scrub->add_flag("--trace", scrub_args.trace, "record per-iteration traces");
  scrub->add_option("--jobs", scrub_args.jobs, "worker threads");
  scrub->add_option("--max-inflight", scrub_args.max_inflight,
                    "concurrent endpoint requests");
  scrub->add_option("--max-failures", scrub_args.max_failures,
                    "tolerated per-example failures before exit 4");
  scrub->add_flag("--sweep", scrub_args.sweep, "run a tau sweep");
  scrub->add_option("--sweep-taus", scrub_args.sweep_taus, "sweep thresholds")
      ->delimiter(',');
  scrub->add_option("--metric-sketch", scrub_args.metric_sketch,
                    "metric sketch for sweep %R>Q");
  scrub->add_option("--plot-data", scrub_args.plot_data,
                    "write headerless (tau, mean_iters, %R>Q) CSV here");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Compute the metric report");
  eval->add_option("--eval-file", eval_args.eval_file,
                   "JSONL with id/prompt/ground_truth/response[/qa]")
      ->required();
  eval->add_option("--metric-sketches", eval_args.metric_sketches,
                   "width-tau sketch files for %R>Q")
      ->delimiter(',');
  eval->add_option("--compare", eval_args.compare,
                   "second method's eval JSONL for win rate");
  eval->add_option("--out", eval_args.out, "report JSON path (default stdout)");
  eval->add_option("--csv", eval_args.csv, "per-example CSV path");
  eval->add_option("--jobs", eval_args.jobs, "worker threads");
  eval->add_flag("--lcs-substring", eval_args.lcs_substring,
                 "also report contiguous-match LCS columns");
  eval->add_option("--acs-min-block", eval_args.acs_min_block,
                   "minimum ACS block length in words");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const json config = load_config_file(config_path);
    if (build->parsed()) {
      const json section = config.value("build_index", json::object());
      merge_config(*build, section, "--n", "n", build_args.n);
      merge_config(*build, section, "--metric-widths", "metric_widths",
                   build_args.metric_widths);
      merge_config(*build, section, "--fpr", "fpr", build_args.fpr);
      merge_config(*build, section, "--seed", "seed", build_args.seed);
      return cmd_build_index(build_args);
    }
    if (scan->parsed()) return cmd_scan(scan_args);
    if (scrub->parsed()) {
      const json section = config.value("scrub", json::object());
      merge_config(*scrub, section, "--tau", "tau", scrub_args.tau);
      merge_config(*scrub, section, "--max-iters", "max_iters",
                   scrub_args.max_iters);
      merge_config(*scrub, section, "--abstain", "abstain", scrub_args.abstain);
      merge_config(*scrub, section, "--guidance", "guidance",
                   scrub_args.guidance);
      merge_config(*scrub, section, "--rewriter", "rewriter",
                   scrub_args.rewriter);
      merge_config(*scrub, section, "--http-config", "http_config",
                   scrub_args.http_config);
      merge_config(*scrub, section, "--jobs", "jobs", scrub_args.jobs);
      merge_config(*scrub, section, "--max-inflight", "max_inflight",
                   scrub_args.max_inflight);
      return cmd_scrub(scrub_args);
    }
    if (eval->parsed()) {
      const json section = config.value("eval", json::object());
      merge_config(*eval, section, "--jobs", "jobs", eval_args.jobs);
      merge_config(*eval, section, "--acs-min-block", "acs_min_block",
                   eval_args.acs_min_block);
      return cmd_eval(eval_args);
    }
  } catch (const qs::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qs::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const qs::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const qs::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
