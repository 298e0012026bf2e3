#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "quotescrub/detail/parallel.hpp"
#include "quotescrub/metrics.hpp"

namespace quotescrub {

struct QaPair {
  std::string question;
  std::string gold_answer;
};

struct EvalExample {
  std::string id;
  std::string prompt;
  std::string ground_truth;
  std::string response;
  std::optional<QaPair> qa;
};

struct EvalOptions {
  unsigned jobs = 1;
  bool lcs_substring = false;  // report contiguous-match LCS columns too
  AcsParams acs;
  MinHashParams minhash;
};

// Per-example metric values plus corpus aggregates. Maxima are exact column
// maxima; %R>Q values come from the width-tau metric filters and can only
// overestimate.
struct MetricReport {
  MetricTable per_example;
  std::map<std::string, double> aggregates;
  std::map<std::uint32_t, double> percent_r_gt_q;  // tau -> fraction
  std::vector<std::string> win_rate_metrics;       // subset used, when compared
  std::optional<double> win_rate_a_vs_b;
  std::optional<double> win_rate_b_vs_a;
};

inline std::map<std::string, double> compute_example_metrics(
    const EvalExample& ex, const EvalOptions& opts) {
  std::map<std::string, double> row;
  row["lcs_char"] = static_cast<double>(lcs_char(ex.response, ex.ground_truth));
  row["lcs_word"] = static_cast<double>(lcs_word(ex.response, ex.ground_truth));
  row["acs_word"] =
      static_cast<double>(acs_word(ex.response, ex.ground_truth, opts.acs));
  row["levenshtein"] =
      static_cast<double>(levenshtein(ex.response, ex.ground_truth));
  row["rouge1"] = rouge1_f1(ex.response, ex.ground_truth);
  row["rougeL"] = rougeL_f1(ex.response, ex.ground_truth);
  row["minhash"] = minhash_sim(ex.response, ex.ground_truth, opts.minhash);
  if (opts.lcs_substring) {
    row["lcs_char_substring"] =
        static_cast<double>(lcs_char_substring(ex.response, ex.ground_truth));
    row["lcs_word_substring"] =
        static_cast<double>(lcs_word_substring(ex.response, ex.ground_truth));
  }
  if (ex.qa) {
    row["qa_f1"] = qa_f1(ex.response, ex.qa->gold_answer);
  }
  return row;
}

inline MetricReport evaluate(const std::vector<EvalExample>& examples,
                             const std::map<std::uint32_t, BloomSketch>& metric_sketches,
                             const EvalOptions& opts = {}) {
  if (examples.empty()) throw ConfigError("evaluate: no examples");
  for (const EvalExample& ex : examples) {
    if (ex.prompt.empty() || ex.ground_truth.empty()) {
      throw ConfigError("evaluate: example " + ex.id +
                        " needs a non-empty prompt and ground_truth");
    }
  }

  MetricReport report;
  std::vector<std::map<std::string, double>> rows(examples.size());
  detail::parallel_for(examples.size(), opts.jobs, [&](std::size_t i) {
    rows[i] = compute_example_metrics(examples[i], opts);
  });
  for (std::size_t i = 0; i < examples.size(); ++i) {
    report.per_example[examples[i].id] = std::move(rows[i]);
  }

  double max_lcs_char = 0, max_lcs_word = 0, max_acs = 0;
  double sum_lev = 0, sum_qa = 0;
  std::size_t qa_count = 0;
  for (const auto& [id, row] : report.per_example) {
    max_lcs_char = std::max(max_lcs_char, row.at("lcs_char"));
    max_lcs_word = std::max(max_lcs_word, row.at("lcs_word"));
    max_acs = std::max(max_acs, row.at("acs_word"));
    sum_lev += row.at("levenshtein");
    if (auto it = row.find("qa_f1"); it != row.end()) {
      sum_qa += it->second;
      ++qa_count;
    }
  }
  report.aggregates["max_lcs_char"] = max_lcs_char;
  report.aggregates["max_lcs_word"] = max_lcs_word;
  report.aggregates["max_acs"] = max_acs;
  report.aggregates["mean_levenshtein"] =
      sum_lev / static_cast<double>(examples.size());
  if (qa_count > 0) {
    report.aggregates["mean_qa_f1"] = sum_qa / static_cast<double>(qa_count);
  }

  std::vector<std::string> responses;
  responses.reserve(examples.size());
  for (const EvalExample& ex : examples) responses.push_back(ex.response);
  for (const auto& [tau, sk] : metric_sketches) {
    report.percent_r_gt_q[tau] = percent_r_gt_q(responses, sk);
  }
  return report;
}

inline nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json out;
  out["aggregates"] = report.aggregates;
  nlohmann::json rgtq = nlohmann::json::object();
  for (const auto& [tau, v] : report.percent_r_gt_q) {
    rgtq[std::to_string(tau)] = v;
  }
  out["percent_r_gt_q"] = rgtq;
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [id, row] : report.per_example) rows[id] = row;
  out["per_example"] = rows;
  if (report.win_rate_a_vs_b) {
    out["win_rate"] = {{"metrics_used", report.win_rate_metrics},
                       {"a_vs_b", *report.win_rate_a_vs_b},
                       {"b_vs_a", *report.win_rate_b_vs_a}};
  }
  return out;
}

// Flat per-example table for external plotting; one row per example,
// columns in sorted metric order (blank where a metric is absent).
inline void write_report_csv(const MetricReport& report, std::ostream& out) {
  std::vector<std::string> columns;
  for (const auto& [id, row] : report.per_example) {
    for (const auto& [metric, v] : row) {
      if (std::find(columns.begin(), columns.end(), metric) == columns.end()) {
        columns.push_back(metric);
      }
    }
  }
  std::sort(columns.begin(), columns.end());
  out << "id";
  for (const std::string& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& [id, row] : report.per_example) {
    out << id;
    for (const std::string& c : columns) {
      out << ',';
      if (auto it = row.find(c); it != row.end()) out << it->second;
    }
    out << '\n';
  }
}

}  // namespace quotescrub
