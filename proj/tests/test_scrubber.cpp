#include <atomic>
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "quotescrub/clients.hpp"
#include "quotescrub/corpus_index.hpp"
#include "quotescrub/scrub.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using quotescrub::BloomSketch;
using quotescrub::CannedClient;
using quotescrub::ConfigError;
using quotescrub::CorpusDocument;
using quotescrub::Guidance;
using quotescrub::IdentityClient;
using quotescrub::QuoteSpan;
using quotescrub::ScrubConfig;
using quotescrub::ScrubOutcome;
using quotescrub::ScrubStatus;
using quotescrub::ScrubTransportError;
using quotescrub::SentinelRewriteClient;
using quotescrub::build_rewrite_prompt;
using quotescrub::generate_then_scrub;
using quotescrub::scrub;

namespace {

struct Fixture {
  synth::Rng rng{0x5C12B};
  std::vector<CorpusDocument> corpus = synth::make_corpus(rng, 40, 100);
  BloomSketch sk = [&] {
    quotescrub::IndexConfig cfg;
    cfg.ngram_width = 25;
    cfg.metric_widths.clear();
    cfg.target_fpr = 1e-9;
    return quotescrub::build_extraction_index(corpus, cfg);
  }();
  oracle::NgramSet oracle50{corpus, 50};

  std::string planted_response(std::size_t quote_len) {
    return synth::filler(rng, 30) + synth::pick_substring(rng, corpus, quote_len) +
           synth::filler(rng, 30);
  }
};

class CountingIdentity : public quotescrub::CompletionClient {
 public:
  std::string complete(const std::string&, const std::string& input) override {
    ++calls;
    return input;
  }
  int calls = 0;
};

class ThrowsOnNthCall : public quotescrub::CompletionClient {
 public:
  explicit ThrowsOnNthCall(int n) : fail_at_(n) {}
  std::string complete(const std::string&, const std::string& input) override {
    if (++calls_ == fail_at_) {
      throw quotescrub::TransportError("endpoint unreachable");
    }
    return input;
  }

 private:
  int fail_at_;
  int calls_ = 0;
};

QuoteSpan span_with(std::size_t start, std::size_t len, std::string text) {
  QuoteSpan q;
  q.norm_start = start;
  q.norm_end = start + len;
  q.length = len;
  q.text = std::move(text);
  return q;
}

}  // namespace

TEST_CASE("rewrite prompt construction") {
  ScrubConfig cfg;

  SECTION("guided embeds the longest quote") {
    const std::vector<QuoteSpan> quotes = {span_with(0, 26, "short quote"),
                                           span_with(40, 61, "the longest quote")};
    const std::string prompt = build_rewrite_prompt(cfg, "some text", quotes);
    CHECK(prompt.find("some text") == 0);
    CHECK(prompt.find("completely rewrite this part of text: the longest quote") !=
          std::string::npos);
    CHECK(prompt.find("short quote") == std::string::npos);
  }
  SECTION("ties pick the earlier span") {
    const std::vector<QuoteSpan> quotes = {span_with(10, 30, "first"),
                                           span_with(90, 30, "second")};
    const std::string prompt = build_rewrite_prompt(cfg, "t", quotes);
    CHECK(prompt.find("first") != std::string::npos);
    CHECK(prompt.find("second") == std::string::npos);
  }
  SECTION("unguided drops the rewrite directive and the quote") {
    cfg.guidance = Guidance::unguided;
    const std::vector<QuoteSpan> quotes = {span_with(0, 30, "quoted material")};
    const std::string prompt = build_rewrite_prompt(cfg, "body", quotes);
    CHECK(prompt.find("body") == 0);
    CHECK(prompt.find("Paraphrase the provided text") != std::string::npos);
    CHECK(prompt.find("Importantly") == std::string::npos);
    CHECK(prompt.find("quoted material") == std::string::npos);
  }
  SECTION("guided mode with no quotes is a caller bug") {
    CHECK_THROWS_AS(build_rewrite_prompt(cfg, "t", {}), ConfigError);
  }
  SECTION("templates must carry their placeholders") {
    cfg.rewrite_template = "no placeholders here";
    CHECK_THROWS_AS(build_rewrite_prompt(cfg, "t", {span_with(0, 30, "q")}),
                    ConfigError);
    cfg.guidance = Guidance::unguided;
    cfg.unguided_template = "also none";
    CHECK_THROWS_AS(build_rewrite_prompt(cfg, "t", {span_with(0, 30, "q")}),
                    ConfigError);
  }
}

TEST_CASE("clean responses exit immediately") {
  Fixture fx;
  ScrubConfig cfg;
  IdentityClient identity;
  const std::string response = synth::filler(fx.rng, 200);
  const ScrubOutcome out = scrub(response, fx.sk, cfg, identity);
  CHECK(out.status == ScrubStatus::clean_initial);
  CHECK(out.iterations_used == 0);
  CHECK(out.final_text == response);
  CHECK(out.residual_max_quote_len < cfg.tau);
  REQUIRE(out.trace.size() == 1);
  CHECK(out.trace[0].rewrite_prompt.empty());
}

TEST_CASE("empty response is clean") {
  Fixture fx;
  ScrubConfig cfg;
  IdentityClient identity;
  const ScrubOutcome out = scrub("", fx.sk, cfg, identity);
  CHECK(out.status == ScrubStatus::clean_initial);
  CHECK(out.final_text.empty());
  CHECK(out.iterations_used == 0);
}

TEST_CASE("sentinel rewriter scrubs in one iteration") {
  Fixture fx;
  ScrubConfig cfg;
  SentinelRewriteClient rewriter(fx.sk);
  for (int trial = 0; trial < 25; ++trial) {
    const std::string response = fx.planted_response(120);
    const ScrubOutcome out = scrub(response, fx.sk, cfg, rewriter);
    CHECK(out.status == ScrubStatus::scrubbed);
    CHECK(out.iterations_used == 1);
    CHECK(out.residual_max_quote_len < cfg.tau);
    // Independent certification: no corpus substring of length >= 50
    // survives in the final text.
    CHECK_FALSE(fx.oracle50.response_has_long_quote(out.final_text));
  }
}

TEST_CASE("identity adversary forces abstention after the full budget") {
  Fixture fx;
  ScrubConfig cfg;
  cfg.tau = 50;
  cfg.abstain = true;
  CountingIdentity rewriter;
  const std::string response = fx.planted_response(120);

  const ScrubOutcome out = scrub(response, fx.sk, cfg, rewriter);
  CHECK(out.status == ScrubStatus::abstained);
  CHECK(out.final_text == "Sorry, I am unable to respond.");
  CHECK(rewriter.calls == int(cfg.max_iterations));
  CHECK(out.iterations_used == cfg.max_iterations);
  CHECK(out.residual_max_quote_len < cfg.tau);
  // One extraction per rewrite plus the final re-extraction.
  CHECK(out.trace.size() == cfg.max_iterations + 1);
  CHECK_FALSE(fx.oracle50.response_has_long_quote(out.final_text));
}

TEST_CASE("without abstention the last rewrite is returned") {
  Fixture fx;
  ScrubConfig cfg;
  cfg.abstain = false;
  IdentityClient identity;
  const std::string response = fx.planted_response(120);
  const ScrubOutcome out = scrub(response, fx.sk, cfg, identity);
  CHECK(out.status == ScrubStatus::over_threshold);
  CHECK(out.final_text == response);
  CHECK(out.residual_max_quote_len >= cfg.tau);
  CHECK(out.iterations_used == cfg.max_iterations);
}

TEST_CASE("zero-iteration budget still classifies") {
  Fixture fx;
  ScrubConfig cfg;
  cfg.max_iterations = 0;
  IdentityClient identity;

  const ScrubOutcome dirty = scrub(fx.planted_response(120), fx.sk, cfg, identity);
  CHECK(dirty.status == ScrubStatus::abstained);
  CHECK(dirty.iterations_used == 0);

  const ScrubOutcome clean = scrub(synth::filler(fx.rng, 100), fx.sk, cfg, identity);
  CHECK(clean.status == ScrubStatus::clean_initial);
}

TEST_CASE("poisoned abstention text is rejected") {
  Fixture fx;
  ScrubConfig cfg;
  cfg.abstention_text = fx.planted_response(120);
  IdentityClient identity;
  CHECK_THROWS_AS(scrub(synth::filler(fx.rng, 60), fx.sk, cfg, identity),
                  ConfigError);
}

TEST_CASE("transport failures carry the partial trace") {
  Fixture fx;
  ScrubConfig cfg;
  ThrowsOnNthCall rewriter(2);
  const std::string response = fx.planted_response(120);
  try {
    scrub(response, fx.sk, cfg, rewriter);
    FAIL("expected ScrubTransportError");
  } catch (const ScrubTransportError& e) {
    CHECK(e.iterations_used() == 1);
    // First extraction (with prompt) and the second (prompt recorded, call
    // failed).
    REQUIRE(e.trace().size() == 2);
    CHECK_FALSE(e.trace()[0].rewrite_prompt.empty());
    CHECK(std::string(e.what()).find("endpoint unreachable") != std::string::npos);
  }
}

TEST_CASE("guided and unguided share loop control") {
  Fixture fx;
  const std::string response = fx.planted_response(120);

  ScrubConfig guided;
  CountingIdentity guided_client;
  const ScrubOutcome a = scrub(response, fx.sk, guided, guided_client);

  ScrubConfig unguided;
  unguided.guidance = Guidance::unguided;
  CountingIdentity unguided_client;
  const ScrubOutcome b = scrub(response, fx.sk, unguided, unguided_client);

  CHECK(guided_client.calls == unguided_client.calls);
  CHECK(a.iterations_used == b.iterations_used);
  CHECK(a.status == b.status);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].max_len == b.trace[i].max_len);
    // Prompts differ in text (quote guidance) on every round that rewrote;
    // the final extraction round carries no prompt in either mode.
    CHECK(a.trace[i].rewrite_prompt.empty() == b.trace[i].rewrite_prompt.empty());
    if (!a.trace[i].rewrite_prompt.empty()) {
      CHECK(a.trace[i].rewrite_prompt != b.trace[i].rewrite_prompt);
    }
  }
}

TEST_CASE("tau below the sketch width warns") {
  Fixture fx;
  ScrubConfig cfg;
  cfg.tau = 10;  // sketch width is 25
  std::vector<std::string> warnings;
  cfg.warn = [&](const std::string& msg) { warnings.push_back(msg); };
  IdentityClient identity;
  scrub(synth::filler(fx.rng, 40), fx.sk, cfg, identity);
  REQUIRE(warnings.size() == 1);
}

TEST_CASE("generate then scrub") {
  Fixture fx;
  ScrubConfig cfg;
  SentinelRewriteClient rewriter(fx.sk);

  SECTION("clean generation") {
    const std::string clean = synth::filler(fx.rng, 150);
    CannedClient generator({clean});
    const ScrubOutcome out =
        generate_then_scrub("prompt", generator, fx.sk, cfg, rewriter);
    CHECK(out.status == ScrubStatus::clean_initial);
    REQUIRE(out.initial_response.has_value());
    CHECK(*out.initial_response == clean);
    CHECK(out.final_text == clean);
  }
  SECTION("composition with scrub") {
    const std::string passage = fx.planted_response(150);
    CannedClient generator({passage});
    const ScrubOutcome via_generate =
        generate_then_scrub("prompt", generator, fx.sk, cfg, rewriter);
    const ScrubOutcome direct = scrub(passage, fx.sk, cfg, rewriter);
    CHECK(via_generate.status == direct.status);
    CHECK(via_generate.final_text == direct.final_text);
    CHECK(via_generate.iterations_used == direct.iterations_used);
    CHECK(*via_generate.initial_response == passage);
  }
  SECTION("batch certification with abstention") {
    IdentityClient stubborn;
    for (int i = 0; i < 50; ++i) {
      const bool dirty = i % 2 == 0;
      const std::string text =
          dirty ? fx.planted_response(80) : synth::filler(fx.rng, 120);
      CannedClient generator({text});
      const ScrubOutcome out =
          generate_then_scrub("p", generator, fx.sk, cfg, stubborn);
      CHECK_FALSE(fx.oracle50.response_has_long_quote(out.final_text));
    }
  }
  SECTION("generation failure propagates") {
    ThrowsOnNthCall generator(1);
    CHECK_THROWS_AS(generate_then_scrub("p", generator, fx.sk, cfg, rewriter),
                    quotescrub::TransportError);
  }
}

TEST_CASE("longest-span mode rewrites one quote per call") {
  Fixture fx;
  ScrubConfig cfg;
  cfg.tau = 30;
  SentinelRewriteClient one_at_a_time(fx.sk, SentinelRewriteClient::Mode::longest_span);

  // Three well-separated long quotes: each iteration removes exactly one.
  std::string response = synth::filler(fx.rng, 20);
  for (const std::size_t len : {40, 60, 80}) {
    response += synth::pick_substring(fx.rng, fx.corpus, len);
    response += synth::filler(fx.rng, 30);
  }
  const ScrubOutcome out = scrub(response, fx.sk, cfg, one_at_a_time);
  CHECK(out.status == ScrubStatus::scrubbed);
  CHECK(out.iterations_used == 3);
}
