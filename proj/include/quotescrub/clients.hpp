#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "quotescrub/quote_extract.hpp"
#include "quotescrub/scrub.hpp"
#include "quotescrub/text_normalize.hpp"

namespace quotescrub {

// Returns the input unchanged. The adversarial rewriter for exercising the
// abstention path: no rewrite ever makes progress.
class IdentityClient : public CompletionClient {
 public:
  std::string complete(const std::string&, const std::string& input) override {
    return input;
  }
};

// Emits a fixed sequence of responses (repeating the last one when
// exhausted). Stands in for the generation model in tests.
class CannedClient : public CompletionClient {
 public:
  explicit CannedClient(std::vector<std::string> responses)
      : responses_(responses.begin(), responses.end()) {}

  std::string complete(const std::string&, const std::string&) override {
    std::lock_guard<std::mutex> lock(mu_);
    if (responses_.empty()) return last_;
    last_ = responses_.front();
    if (responses_.size() > 1) responses_.pop_front();
    else responses_.clear();
    return last_;
  }

 private:
  std::mutex mu_;
  std::deque<std::string> responses_;
  std::string last_;
};

// Deterministic rewriter that guarantees progress: it re-extracts quote
// spans from the input and overwrites their characters with a rotation
// through a sentinel alphabet chosen to be absent from the corpus, so every
// rewritten window stops matching the filter. `longest_span` mode rewrites
// only the single longest quote per call, which makes the iteration count
// track the number of long quotes in the text.
class SentinelRewriteClient : public CompletionClient {
 public:
  enum class Mode { all_spans, longest_span };

  explicit SentinelRewriteClient(const BloomSketch& sk,
                                 Mode mode = Mode::all_spans,
                                 std::string alphabet_utf8 =
                                     "αβγδεζ"
                                     "ηθικλμ")
      : sk_(&sk), mode_(mode) {
    std::size_t pos = 0;
    while (pos < alphabet_utf8.size()) {
      const auto dc = detail::decode_utf8(alphabet_utf8, pos);
      alphabet_.push_back(alphabet_utf8.substr(pos, dc.length));
      pos += dc.length;
    }
    if (alphabet_.empty()) {
      throw ConfigError("sentinel rewriter: empty alphabet");
    }
  }

  std::string complete(const std::string&, const std::string& input) override {
    const NormalizedText nt = normalize(input);
    std::vector<QuoteSpan> spans = extract_quotes(*sk_, nt);
    if (spans.empty()) return input;
    if (mode_ == Mode::longest_span) {
      spans = {detail::longest_quote(spans)};
    }
    std::string out;
    out.reserve(input.size());
    std::size_t span_idx = 0;
    std::size_t rotation = 0;
    for (std::size_t ch = 0; ch < nt.original_char_count(); ++ch) {
      while (span_idx < spans.size() && ch >= spans[span_idx].orig_end) {
        ++span_idx;
      }
      const bool flagged = span_idx < spans.size() &&
                           ch >= spans[span_idx].orig_start &&
                           ch < spans[span_idx].orig_end;
      if (flagged) {
        out += alphabet_[rotation++ % alphabet_.size()];
      } else {
        out += nt.original_slice({ch, ch + 1});
      }
    }
    return out;
  }

 private:
  const BloomSketch* sk_;
  Mode mode_;
  std::vector<std::string> alphabet_;
};

}  // namespace quotescrub
