#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quotescrub/bloom_sketch.hpp"
#include "quotescrub/quote_extract.hpp"

namespace quotescrub {

enum class Guidance { quote_guided, unguided };

enum class ScrubStatus { clean_initial, scrubbed, abstained, over_threshold };

inline const char* to_string(ScrubStatus s) {
  switch (s) {
    case ScrubStatus::clean_initial: return "clean_initial";
    case ScrubStatus::scrubbed: return "scrubbed";
    case ScrubStatus::abstained: return "abstained";
    case ScrubStatus::over_threshold: return "over_threshold";
  }
  return "unknown";
}

// The guided template embeds the text under rewrite and the single longest
// detected quote; the unguided variant drops the final rewrite directive
// (the "-quote guidance" ablation).
inline constexpr const char* kDefaultRewriteTemplate =
    "{TEXT} Paraphrase the provided text while preserving its meaning, using "
    "different words and sentence structures. Ensure clarity, coherence, and "
    "maintain any specified tone or style. Importantly, completely rewrite "
    "this part of text: {LONGEST_QUOTE}";

inline constexpr const char* kDefaultUnguidedTemplate =
    "{TEXT} Paraphrase the provided text while preserving its meaning, using "
    "different words and sentence structures. Ensure clarity, coherence, and "
    "maintain any specified tone or style.";

inline constexpr const char* kDefaultAbstentionText =
    "Sorry, I am unable to respond.";

struct ScrubConfig {
  std::size_t tau = 50;             // normalized characters
  std::size_t max_iterations = 5;   // rewrite-call budget
  bool abstain = true;
  Guidance guidance = Guidance::quote_guided;
  std::string rewrite_template = kDefaultRewriteTemplate;
  std::string unguided_template = kDefaultUnguidedTemplate;
  std::string abstention_text = kDefaultAbstentionText;
  std::function<void(const std::string&)> warn;
};

struct ScrubIteration {
  std::vector<QuoteSpan> quotes;
  std::size_t max_len = 0;
  std::string rewrite_prompt;  // empty when this round triggered no rewrite
};

struct ScrubOutcome {
  std::string final_text;
  ScrubStatus status = ScrubStatus::clean_initial;
  std::size_t iterations_used = 0;
  std::vector<ScrubIteration> trace;
  std::size_t residual_max_quote_len = 0;
  // Raw model output before any scrubbing; set by generate_then_scrub.
  std::optional<std::string> initial_response;
};

// Text-completion model behind a minimal interface. `instruction`, when
// non-empty, is the full prompt (rewrite prompts already embed the text
// being rewritten); `input` carries the bare text so deterministic test
// clients can transform it without parsing the prompt. Implementations must
// either be safe for concurrent complete() calls or document a connection
// limit for the batch driver to honor.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const std::string& instruction,
                               const std::string& input) = 0;
};

// Rewriter failure that aborted a scrub mid-loop. Carries whatever trace
// had accumulated so the batch driver can log or retry the example.
class ScrubTransportError : public TransportError {
 public:
  ScrubTransportError(const std::string& what, std::vector<ScrubIteration> trace,
                      std::size_t iterations_used)
      : TransportError(what),
        trace_(std::move(trace)),
        iterations_used_(iterations_used) {}

  const std::vector<ScrubIteration>& trace() const { return trace_; }
  std::size_t iterations_used() const { return iterations_used_; }

 private:
  std::vector<ScrubIteration> trace_;
  std::size_t iterations_used_;
};

namespace detail {

inline void replace_all(std::string& s, std::string_view placeholder,
                        std::string_view value) {
  std::size_t pos = 0;
  while ((pos = s.find(placeholder, pos)) != std::string::npos) {
    s.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

inline const QuoteSpan& longest_quote(const std::vector<QuoteSpan>& quotes) {
  const QuoteSpan* best = &quotes.front();
  for (const QuoteSpan& q : quotes) {
    if (q.length > best->length) best = &q;  // ties keep the earliest span
  }
  return *best;
}

}  // namespace detail

// Instantiates the rewrite prompt for the current text. Guided mode embeds
// the longest quote's original-text excerpt (earliest span on ties);
// unguided mode uses the instruction alone.
inline std::string build_rewrite_prompt(const ScrubConfig& cfg,
                                        const std::string& text,
                                        const std::vector<QuoteSpan>& quotes) {
  if (cfg.guidance == Guidance::quote_guided) {
    if (quotes.empty()) {
      throw ConfigError("rewrite prompt: guided mode requires quotes");
    }
    if (cfg.rewrite_template.find("{TEXT}") == std::string::npos ||
        cfg.rewrite_template.find("{LONGEST_QUOTE}") == std::string::npos) {
      throw ConfigError(
          "rewrite template must contain {TEXT} and {LONGEST_QUOTE}");
    }
    std::string prompt = cfg.rewrite_template;
    detail::replace_all(prompt, "{TEXT}", text);
    detail::replace_all(prompt, "{LONGEST_QUOTE}",
                        detail::longest_quote(quotes).text);
    return prompt;
  }
  if (cfg.unguided_template.find("{TEXT}") == std::string::npos) {
    throw ConfigError("unguided template must contain {TEXT}");
  }
  std::string prompt = cfg.unguided_template;
  detail::replace_all(prompt, "{TEXT}", text);
  return prompt;
}

// Detect-and-rewrite loop: extract quotes, stop as soon as the longest is
// below tau, otherwise rewrite (at most max_iterations times). The text is
// re-extracted after the last rewrite, so the abstention decision always
// rests on the final text. With abstention on, the returned text is
// certified to contain no corpus quote of length >= tau.
inline ScrubOutcome scrub(const std::string& response, const BloomSketch& sk,
                          const ScrubConfig& cfg, CompletionClient& rewriter) {
  ScrubOutcome out;
  if (response.empty()) {
    out.status = ScrubStatus::clean_initial;
    return out;
  }
  if (cfg.warn && cfg.tau < sk.ngram_width()) {
    cfg.warn("tau (" + std::to_string(cfg.tau) +
             ") is below the sketch n-gram width (" +
             std::to_string(sk.ngram_width()) +
             "); shorter quotes are undetectable");
  }
  if (cfg.abstain) {
    // The certification claim covers the literal returned text, so the
    // abstention string itself must screen clean.
    if (max_quote_len(extract_quotes(sk, cfg.abstention_text)) >= cfg.tau) {
      throw ConfigError("abstention text itself contains a long corpus quote");
    }
  }

  std::string text = response;
  std::size_t max_len = 0;
  for (;;) {
    std::vector<QuoteSpan> quotes = extract_quotes(sk, text);
    max_len = max_quote_len(quotes);
    out.trace.push_back({quotes, max_len, {}});
    if (max_len < cfg.tau) {
      out.final_text = std::move(text);
      out.status = out.iterations_used == 0 ? ScrubStatus::clean_initial
                                            : ScrubStatus::scrubbed;
      out.residual_max_quote_len = max_len;
      return out;
    }
    if (out.iterations_used == cfg.max_iterations) break;
    std::string prompt = build_rewrite_prompt(cfg, text, quotes);
    out.trace.back().rewrite_prompt = prompt;
    try {
      text = rewriter.complete(prompt, text);
    } catch (const TransportError& e) {
      throw ScrubTransportError(e.what(), std::move(out.trace),
                                out.iterations_used);
    }
    ++out.iterations_used;
  }

  if (cfg.abstain) {
    out.final_text = cfg.abstention_text;
    out.status = ScrubStatus::abstained;
    out.residual_max_quote_len =
        max_quote_len(extract_quotes(sk, cfg.abstention_text));
  } else {
    out.final_text = std::move(text);
    out.status = ScrubStatus::over_threshold;
    out.residual_max_quote_len = max_len;
  }
  return out;
}

// Draws the initial response from the generator, then scrubs it.
inline ScrubOutcome generate_then_scrub(const std::string& prompt,
                                        CompletionClient& generator,
                                        const BloomSketch& sk,
                                        const ScrubConfig& cfg,
                                        CompletionClient& rewriter) {
  std::string initial = generator.complete({}, prompt);
  ScrubOutcome out = scrub(initial, sk, cfg, rewriter);
  out.initial_response = std::move(initial);
  return out;
}

}  // namespace quotescrub
