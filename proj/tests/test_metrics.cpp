#include <random>
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "quotescrub/corpus_index.hpp"
#include "quotescrub/metrics.hpp"
#include "quotescrub/report.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using quotescrub::AcsParams;
using quotescrub::ConfigError;
using quotescrub::Direction;
using quotescrub::MetricTable;
using quotescrub::MinHashParams;
using quotescrub::WinRate;
using quotescrub::acs_word;
using quotescrub::lcs_char;
using quotescrub::lcs_word;
using quotescrub::levenshtein;
using quotescrub::minhash_sim;
using quotescrub::percent_r_gt_q;
using quotescrub::qa_f1;
using quotescrub::rouge1_f1;
using quotescrub::rougeL_f1;
using quotescrub::win_rate;

namespace {

// Small vocabulary so random texts genuinely overlap.
std::string vocab_text(std::mt19937_64& rng, std::size_t num_words) {
  static const std::vector<std::string> vocab = {
      "alpha", "bravo", "charlie", "delta", "echo",  "fox",  "golf",
      "hotel", "india", "juliet",  "kilo",  "lima",  "mike", "nov",
      "oscar", "papa",  "quebec",  "romeo", "sierra", "tango"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string text;
  for (std::size_t i = 0; i < num_words; ++i) {
    if (i > 0) text.push_back(' ');
    text += vocab[pick(rng)];
  }
  return text;
}

// Word-level mutation of `base`: each word replaced with probability p.
std::string mutate_words(std::mt19937_64& rng, const std::string& base, double p) {
  std::bernoulli_distribution flip(p);
  std::string out;
  std::size_t start = 0;
  while (start <= base.size()) {
    std::size_t space = base.find(' ', start);
    if (space == std::string::npos) space = base.size();
    if (!out.empty()) out.push_back(' ');
    if (flip(rng)) {
      out += "zz" + std::to_string(rng() % 100);
    } else {
      out += base.substr(start, space - start);
    }
    if (space == base.size()) break;
    start = space + 1;
  }
  return out;
}

std::string random_chars(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<int> ch('a', 'f');  // small alphabet
  std::string s;
  const std::size_t len = len_dist(rng);
  for (std::size_t i = 0; i < len; ++i) {
    s.push_back(rng() % 7 == 0 ? ' ' : char(ch(rng)));
  }
  return s;
}

}  // namespace

TEST_CASE("character lcs") {
  CHECK(lcs_char("abc", "") == 0);
  CHECK(lcs_char("", "") == 0);
  const std::string x = "The  Quick, Brown Fox!";
  CHECK(lcs_char(x, x) == quotescrub::normalize(x).size());

  std::mt19937_64 rng(0x1C5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string a = random_chars(rng, 200);
    const std::string b = random_chars(rng, 200);
    const auto ca = quotescrub::detail::norm_codepoints(a);
    const auto cb = quotescrub::detail::norm_codepoints(b);
    REQUIRE(lcs_char(a, b) == oracle::lcs(ca, cb));
    CHECK(lcs_char(a, b) == lcs_char(b, a));
  }
}

TEST_CASE("word lcs") {
  CHECK(lcs_word("alpha bravo", "alpha bravo") == 2);
  CHECK(lcs_word("alpha", "bravo") == 0);

  std::mt19937_64 rng(0x10CA);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string a = vocab_text(rng, rng() % 40);
    const std::string b = trial % 2 == 0 ? vocab_text(rng, rng() % 40)
                                         : mutate_words(rng, a, 0.3);
    const auto wa = quotescrub::detail::norm_words(a);
    const auto wb = quotescrub::detail::norm_words(b);
    REQUIRE(lcs_word(a, b) == oracle::lcs(wa, wb));
  }
}

TEST_CASE("contiguous lcs variants") {
  CHECK(quotescrub::lcs_char_substring("xxabcyy", "zzabczz") == 3);
  CHECK(quotescrub::lcs_word_substring("alpha bravo charlie delta",
                                       "echo bravo charlie fox") == 2);
  std::mt19937_64 rng(0x5B5B);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string a = random_chars(rng, 80);
    const std::string b = random_chars(rng, 80);
    const auto ca = quotescrub::detail::norm_codepoints(a);
    const auto cb = quotescrub::detail::norm_codepoints(b);
    REQUIRE(quotescrub::lcs_char_substring(a, b) ==
            oracle::longest_common_block(ca, cb));
  }
}

TEST_CASE("accumulated common subsequences") {
  SECTION("identical texts count every word") {
    const std::string text = "alpha bravo charlie delta echo";
    CHECK(acs_word(text, text) == 5);
  }
  SECTION("disjoint vocabularies count nothing") {
    CHECK(acs_word("alpha bravo charlie", "delta echo fox") == 0);
  }
  SECTION("blocks below the minimum are ignored") {
    CHECK(acs_word("alpha bravo zz charlie delta",
                   "alpha bravo yy charlie delta") == 0);
    CHECK(acs_word("alpha bravo charlie zz", "alpha bravo charlie yy") == 3);
  }
  SECTION("configurable minimum block") {
    AcsParams params;
    params.min_block_words = 2;
    CHECK(acs_word("alpha bravo zz charlie delta",
                   "alpha bravo yy charlie delta", params) == 4);
  }
  SECTION("agrees with exhaustive enumeration on short sequences") {
    std::mt19937_64 rng(0xAC5);
    for (int trial = 0; trial < 800; ++trial) {
      const std::string a = vocab_text(rng, 1 + rng() % 12);
      const std::string b = trial % 2 == 0 ? vocab_text(rng, 1 + rng() % 12)
                                           : mutate_words(rng, a, 0.25);
      const auto wa = quotescrub::detail::norm_words(a);
      const auto wb = quotescrub::detail::norm_words(b);
      INFO("a=" << a << " b=" << b);
      REQUIRE(acs_word(a, b) == oracle::acs(wa, wb, 3));
    }
  }
}

TEST_CASE("levenshtein distance") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("same", "same") == 0);
  CHECK(levenshtein("", "abc") == 3);

  std::mt19937_64 rng(0x1EE7);
  SECTION("matches the full-matrix reference") {
    for (int trial = 0; trial < 1000; ++trial) {
      const std::string a = random_chars(rng, 150);
      const std::string b = random_chars(rng, 150);
      const auto ca = quotescrub::detail::norm_codepoints(a);
      const auto cb = quotescrub::detail::norm_codepoints(b);
      REQUIRE(levenshtein(a, b) == oracle::levenshtein(ca, cb));
      CHECK(levenshtein(a, b) == levenshtein(b, a));
    }
  }
  SECTION("triangle inequality") {
    for (int trial = 0; trial < 300; ++trial) {
      const std::string a = random_chars(rng, 60);
      const std::string b = random_chars(rng, 60);
      const std::string c = random_chars(rng, 60);
      CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    }
  }
}

TEST_CASE("rouge scores") {
  const std::string x = "alpha bravo charlie delta";
  CHECK(rouge1_f1(x, x) == Catch::Approx(1.0));
  CHECK(rougeL_f1(x, x) == Catch::Approx(1.0));
  CHECK(rouge1_f1("alpha bravo", "charlie delta") == 0.0);
  CHECK(rougeL_f1("alpha bravo", "charlie delta") == 0.0);

  std::mt19937_64 rng(0x2065);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string a = vocab_text(rng, rng() % 50);
    const std::string b = trial % 2 == 0 ? vocab_text(rng, rng() % 50)
                                         : mutate_words(rng, a, 0.4);
    const auto wa = quotescrub::detail::norm_words(a);
    const auto wb = quotescrub::detail::norm_words(b);
    REQUIRE(rouge1_f1(a, b) == Catch::Approx(oracle::rouge1(wa, wb)).margin(1e-9));
    REQUIRE(rougeL_f1(a, b) == Catch::Approx(oracle::rougeL(wa, wb)).margin(1e-9));
    CHECK(rouge1_f1(a, b) == Catch::Approx(rouge1_f1(b, a)).margin(1e-12));
  }
}

TEST_CASE("minhash similarity") {
  const std::string x = "alpha bravo charlie delta echo fox golf";
  CHECK(minhash_sim(x, x) == 1.0);
  CHECK(minhash_sim("alpha bravo charlie delta", "oscar papa quebec romeo") == 0.0);

  std::mt19937_64 rng(0x3A5);
  SECTION("tracks exact jaccard near the extremes") {
    for (int trial = 0; trial < 500; ++trial) {
      const std::string a = vocab_text(rng, 10 + rng() % 60);
      // Unrelated, identical, or near-identical partner.
      std::string b;
      if (trial % 5 == 0) {
        b = a;
      } else if (trial % 5 == 1) {
        b = mutate_words(rng, a, 0.02);
      } else {
        b = vocab_text(rng, 10 + rng() % 60);
      }
      const auto wa = quotescrub::detail::norm_words(a);
      const auto wb = quotescrub::detail::norm_words(b);
      const double exact = oracle::jaccard_shingles(wa, wb, 3);
      const double estimate = minhash_sim(a, b);
      REQUIRE(std::abs(estimate - exact) <= 0.1);
    }
  }
  SECTION("mid-range estimates stay statistically close") {
    for (int trial = 0; trial < 50; ++trial) {
      const std::string a = vocab_text(rng, 120);
      const std::string b = mutate_words(rng, a, 0.08);
      const auto wa = quotescrub::detail::norm_words(a);
      const auto wb = quotescrub::detail::norm_words(b);
      const double exact = oracle::jaccard_shingles(wa, wb, 3);
      const double estimate = minhash_sim(a, b);
      CHECK(std::abs(estimate - exact) <= 0.2);
    }
  }
  SECTION("deterministic for a fixed seed, sensitive to it") {
    const std::string a = vocab_text(rng, 40);
    const std::string b = mutate_words(rng, a, 0.3);
    CHECK(minhash_sim(a, b) == minhash_sim(a, b));
    MinHashParams other;
    other.seed = 0x0ddba11;
    CHECK(minhash_sim(a, b) == Catch::Approx(minhash_sim(a, b, other)).margin(0.25));
  }
}

TEST_CASE("qa answer f1") {
  CHECK(qa_f1("Maryland's highest court", "Maryland's highest court") == 1.0);
  CHECK(qa_f1("Feb. 7", "Feb 7") == 1.0);
  CHECK(qa_f1("the Kentucky Derby", "Kentucky Derby") == 1.0);
  CHECK(qa_f1("Anheuser-Busch", "anheuser-busch") == 1.0);
  CHECK(qa_f1("completely wrong", "Sept 5") == 0.0);
  CHECK(qa_f1("", "") == 1.0);
  CHECK(qa_f1("something", "") == 0.0);
  // Partial overlap: prediction "in Baltimore Maryland" vs gold "Maryland":
  // precision 1/3, recall 1, f1 = 0.5.
  CHECK(qa_f1("in Baltimore Maryland", "Maryland") == Catch::Approx(0.5));
}

TEST_CASE("percent of responses with long quotes") {
  synth::Rng rng(0xF00);
  const auto corpus = synth::make_corpus(rng, 40, 80);
  quotescrub::IndexConfig cfg;
  cfg.ngram_width = 50;
  cfg.metric_widths.clear();
  cfg.target_fpr = 1e-9;
  const quotescrub::BloomSketch sk50 =
      quotescrub::build_extraction_index(corpus, cfg);
  const oracle::NgramSet oracle50(corpus, 50);

  SECTION("responses shorter than tau never count") {
    const std::vector<std::string> responses = {synth::filler(rng, 30),
                                                synth::filler(rng, 49), ""};
    CHECK(percent_r_gt_q(responses, sk50) == 0.0);
  }
  SECTION("empty input is rejected") {
    CHECK_THROWS_AS(percent_r_gt_q({}, sk50), ConfigError);
  }
  SECTION("matches the oracle on mixed responses") {
    std::vector<std::string> responses;
    std::size_t oracle_count = 0;
    for (int i = 0; i < 400; ++i) {
      std::string r = i % 4 == 0 ? synth::filler(rng, 20) +
                                       synth::pick_substring(rng, corpus, 80) +
                                       synth::filler(rng, 20)
                                 : synth::filler(rng, 120);
      oracle_count += oracle50.response_has_long_quote(r);
      responses.push_back(std::move(r));
    }
    const double value = percent_r_gt_q(responses, sk50);
    const double oracle_value = double(oracle_count) / double(responses.size());
    CHECK(value >= oracle_value);               // one-sided
    CHECK(value - oracle_value <= 2.0 / 400.0);  // at most a couple of FPs
  }
}

TEST_CASE("win rate") {
  const std::map<std::string, Direction> directions = {
      {"m1", Direction::lower_better}, {"m2", Direction::higher_better}};

  SECTION("self comparison is exactly one half") {
    MetricTable a;
    a["e1"] = {{"m1", 3.0}, {"m2", 0.5}};
    a["e2"] = {{"m1", 7.0}, {"m2", 0.1}};
    const WinRate wr = win_rate(a, a, directions);
    CHECK(wr.value() == 0.5);
    CHECK(wr.half_units == wr.cells);
  }
  SECTION("strict dominance is exactly one") {
    MetricTable a, b;
    a["e1"] = {{"m1", 1.0}, {"m2", 9.0}};
    b["e1"] = {{"m1", 2.0}, {"m2", 8.0}};
    CHECK(win_rate(a, b, directions).value() == 1.0);
    CHECK(win_rate(b, a, directions).value() == 0.0);
  }
  SECTION("hand-built table matches the manual count") {
    // Pairs: (e1,m1) A wins, (e1,m2) tie, (e2,m1) tie, (e2,m2) A wins,
    // (e3,m1) B wins, (e3,m2) A wins -> 3 wins + 2 ties = 8 half-units of 12.
    MetricTable a, b;
    a["e1"] = {{"m1", 1.0}, {"m2", 5.0}};
    a["e2"] = {{"m1", 4.0}, {"m2", 2.0}};
    a["e3"] = {{"m1", 3.0}, {"m2", 5.0}};
    b["e1"] = {{"m1", 2.0}, {"m2", 5.0}};
    b["e2"] = {{"m1", 4.0}, {"m2", 1.0}};
    b["e3"] = {{"m1", 2.0}, {"m2", 4.0}};
    const WinRate wr = win_rate(a, b, directions);
    CHECK(wr.half_units == 8);
    CHECK(wr.cells == 6);
    CHECK(wr.value() == Catch::Approx(8.0 / 12.0));
  }
  SECTION("antisymmetry holds exactly on random tables") {
    std::mt19937_64 rng(0x77);
    for (int trial = 0; trial < 100; ++trial) {
      MetricTable a, b;
      const std::size_t examples = 1 + rng() % 20;
      for (std::size_t e = 0; e < examples; ++e) {
        const std::string id = "ex" + std::to_string(e);
        // Small integer values so ties actually happen.
        a[id] = {{"m1", double(rng() % 4)}, {"m2", double(rng() % 4)}};
        b[id] = {{"m1", double(rng() % 4)}, {"m2", double(rng() % 4)}};
      }
      const WinRate ab = win_rate(a, b, directions);
      const WinRate ba = win_rate(b, a, directions);
      REQUIRE(ab.half_units + ba.half_units == 2 * ab.cells);
      REQUIRE(ab.cells == ba.cells);
    }
  }
  SECTION("mismatched tables are rejected") {
    MetricTable a, b;
    a["e1"] = {{"m1", 1.0}, {"m2", 1.0}};
    b["e2"] = {{"m1", 1.0}, {"m2", 1.0}};
    CHECK_THROWS_AS(win_rate(a, b, directions), ConfigError);
    MetricTable c;
    c["e1"] = {{"m1", 1.0}};  // missing m2
    CHECK_THROWS_AS(win_rate(a, c, directions), ConfigError);
  }
}

TEST_CASE("evaluate assembles consistent aggregates") {
  synth::Rng rng(0xE7A1);
  const auto corpus = synth::make_corpus(rng, 30, 80);
  quotescrub::IndexConfig cfg;
  cfg.metric_widths = {50, 100};
  cfg.target_fpr = 1e-9;  // keep the fixture free of false positives
  const auto sketches = quotescrub::build_metric_indexes(corpus, cfg);

  std::vector<quotescrub::EvalExample> examples;
  for (int i = 0; i < 20; ++i) {
    quotescrub::EvalExample ex;
    ex.id = "ex" + std::to_string(i);
    ex.prompt = "p";
    ex.ground_truth = synth::filler(rng, 150);
    ex.response = i % 3 == 0 ? synth::filler(rng, 10) +
                                   synth::pick_substring(rng, corpus, 120) +
                                   synth::filler(rng, 10)
                             : synth::filler(rng, 140);
    if (i % 2 == 0) {
      ex.qa = quotescrub::QaPair{"q", "gold answer"};
    }
    examples.push_back(std::move(ex));
  }

  quotescrub::EvalOptions opts;
  opts.jobs = 4;
  const quotescrub::MetricReport report =
      quotescrub::evaluate(examples, sketches, opts);

  REQUIRE(report.per_example.size() == examples.size());
  double max_lcs = 0;
  for (const auto& [id, row] : report.per_example) {
    max_lcs = std::max(max_lcs, row.at("lcs_char"));
  }
  CHECK(report.aggregates.at("max_lcs_char") == max_lcs);
  REQUIRE(report.percent_r_gt_q.count(50) == 1);
  REQUIRE(report.percent_r_gt_q.count(100) == 1);
  // Exactly the planted rows (i % 3 == 0 of 20) at both widths.
  CHECK(report.percent_r_gt_q.at(50) == 7.0 / 20.0);
  CHECK(report.percent_r_gt_q.at(100) == 7.0 / 20.0);

  // Call-through equivalence on a few examples.
  for (int i : {0, 3, 7}) {
    const auto& row = report.per_example.at(examples[std::size_t(i)].id);
    CHECK(row.at("lcs_char") ==
          double(lcs_char(examples[std::size_t(i)].response,
                          examples[std::size_t(i)].ground_truth)));
    CHECK(row.at("rouge1") ==
          Catch::Approx(rouge1_f1(examples[std::size_t(i)].response,
                                  examples[std::size_t(i)].ground_truth)));
  }

  // Parallel and serial evaluation agree.
  quotescrub::EvalOptions serial;
  const quotescrub::MetricReport again =
      quotescrub::evaluate(examples, sketches, serial);
  CHECK(again.per_example == report.per_example);

  const nlohmann::json js = quotescrub::report_to_json(report);
  CHECK(js.contains("aggregates"));
  CHECK(js.contains("percent_r_gt_q"));
  CHECK(js["per_example"].size() == examples.size());

  std::ostringstream csv;
  quotescrub::write_report_csv(report, csv);
  const std::string header = csv.str().substr(0, csv.str().find('\n'));
  CHECK(header.find("id,") == 0);
  CHECK(header.find("lcs_char") != std::string::npos);

  SECTION("examples without a ground truth are rejected") {
    std::vector<quotescrub::EvalExample> bad = examples;
    bad[0].ground_truth.clear();
    CHECK_THROWS_AS(quotescrub::evaluate(bad, sketches, serial), ConfigError);
    CHECK_THROWS_AS(quotescrub::evaluate({}, sketches, serial), ConfigError);
  }
}
