#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "quotescrub/bloom_sketch.hpp"
#include "quotescrub/jsonl.hpp"
#include "quotescrub/text_normalize.hpp"

namespace quotescrub {

struct CorpusDocument {
  std::string id;
  std::string text;
};

struct IndexConfig {
  std::uint32_t ngram_width = 25;                  // extraction filter width
  std::vector<std::uint32_t> metric_widths = {50, 100};
  double target_fpr = 0.001;
  std::uint64_t seed = 0;
  // When nonzero, skips the counting pass and sizes every filter for this
  // many keys (single-pass mode for corpora too large to stream twice).
  std::uint64_t expected_items = 0;
  std::function<void(const std::string&)> warn;    // duplicate ids etc.

  void check() const {
    if (ngram_width == 0) throw ConfigError("index: ngram_width must be >= 1");
    for (std::uint32_t w : metric_widths) {
      if (w == 0) throw ConfigError("index: metric widths must be >= 1");
    }
    if (!(target_fpr > 0.0) || !(target_fpr < 1.0)) {
      throw ConfigError("index: target_fpr must be in (0, 1)");
    }
  }
};

// Sketches built over one corpus: the width-n extraction filter plus one
// metric filter per configured width.
struct CorpusIndexSet {
  BloomSketch extraction;
  std::map<std::uint32_t, BloomSketch> metric;  // width -> sketch
};

namespace detail {

inline std::uint64_t window_count(std::size_t chars, std::uint32_t width) {
  return chars >= width ? chars - width + 1 : 0;
}

template <class DocRange>
void warn_duplicate_ids(const DocRange& corpus, const IndexConfig& cfg) {
  if (!cfg.warn) return;
  std::unordered_set<std::string> seen;
  for (const CorpusDocument& doc : corpus) {
    if (!seen.insert(doc.id).second) {
      cfg.warn("duplicate document id: " + doc.id);
    }
  }
}

}  // namespace detail

namespace detail {

template <class DocRange>
std::map<std::uint32_t, std::uint64_t> expected_window_counts(
    const DocRange& corpus, const IndexConfig& cfg,
    const std::vector<std::uint32_t>& widths) {
  std::map<std::uint32_t, std::uint64_t> expected;
  if (cfg.expected_items > 0) {
    for (std::uint32_t w : widths) expected[w] = cfg.expected_items;
    return expected;
  }
  for (std::uint32_t w : widths) expected[w] = 0;
  for (const CorpusDocument& doc : corpus) {
    const std::size_t chars = normalize(doc.text).size();
    for (std::uint32_t w : widths) {
      expected[w] += window_count(chars, w);
    }
  }
  return expected;
}

inline CorpusIndexSet plan_index_set(
    const IndexConfig& cfg, const std::map<std::uint32_t, std::uint64_t>& expected) {
  CorpusIndexSet set;
  set.extraction =
      BloomSketch::plan(std::max<std::uint64_t>(1, expected.at(cfg.ngram_width)),
                        cfg.target_fpr, cfg.ngram_width, cfg.seed);
  for (std::uint32_t w : cfg.metric_widths) {
    if (w == cfg.ngram_width || set.metric.count(w)) continue;
    set.metric.emplace(w, BloomSketch::plan(std::max<std::uint64_t>(1, expected.at(w)),
                                            cfg.target_fpr, w, cfg.seed));
  }
  return set;
}

inline void insert_document(CorpusIndexSet& set, const CorpusDocument& doc) {
  const NormalizedText nt = normalize(doc.text);
  const auto insert_into = [&](BloomSketch& sk) {
    for_each_char_ngram(nt, sk.ngram_width(),
                        [&](std::size_t, std::string_view window) {
                          sk.insert(window);
                        });
  };
  insert_into(set.extraction);
  for (auto& [w, sk] : set.metric) insert_into(sk);
}

inline void merge_sets(CorpusIndexSet& into, const CorpusIndexSet& from) {
  into.extraction.merge_from(from.extraction);
  for (auto& [w, sk] : into.metric) sk.merge_from(from.metric.at(w));
}

}  // namespace detail

// Builds all configured sketches in one shared pass per corpus scan:
// pass 1 counts windows per width to size each filter, pass 2 normalizes
// each document once and inserts its windows into every filter. N-grams
// never cross document boundaries, and documents shorter than a width
// contribute nothing to that filter.
//
// The range must be iterable twice (two passes) unless cfg.expected_items
// is set, in which case only the insert pass runs. With jobs > 1 the insert
// pass shards documents across workers, each owning a private sketch set,
// and merges at the end; the result is bit-identical to the serial build.
template <class DocRange>
CorpusIndexSet build_index_set(const DocRange& corpus, const IndexConfig& cfg,
                               unsigned jobs = 1) {
  cfg.check();
  detail::warn_duplicate_ids(corpus, cfg);

  std::vector<std::uint32_t> widths;
  widths.push_back(cfg.ngram_width);
  for (std::uint32_t w : cfg.metric_widths) widths.push_back(w);
  const auto expected = detail::expected_window_counts(corpus, cfg, widths);

  CorpusIndexSet set = detail::plan_index_set(cfg, expected);
  if (jobs <= 1) {
    for (const CorpusDocument& doc : corpus) detail::insert_document(set, doc);
    return set;
  }

  std::vector<CorpusIndexSet> worker_sets;
  worker_sets.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    worker_sets.push_back(detail::plan_index_set(cfg, expected));
  }
  // Stream in bounded chunks; each worker takes a stride of the chunk.
  std::vector<CorpusDocument> chunk;
  const std::size_t chunk_size = std::size_t(jobs) * 64;
  const auto flush = [&] {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t i = w; i < chunk.size(); i += jobs) {
          detail::insert_document(worker_sets[w], chunk[i]);
        }
      });
    }
    for (std::thread& t : threads) t.join();
    chunk.clear();
  };
  for (const CorpusDocument& doc : corpus) {
    chunk.push_back(doc);
    if (chunk.size() >= chunk_size) flush();
  }
  flush();
  for (const CorpusIndexSet& ws : worker_sets) detail::merge_sets(set, ws);
  return set;
}

template <class DocRange>
BloomSketch build_extraction_index(const DocRange& corpus, const IndexConfig& cfg) {
  IndexConfig only = cfg;
  only.metric_widths.clear();
  return build_index_set(corpus, only).extraction;
}

template <class DocRange>
std::map<std::uint32_t, BloomSketch> build_metric_indexes(const DocRange& corpus,
                                                          const IndexConfig& cfg) {
  cfg.check();
  std::map<std::uint32_t, BloomSketch> out;
  for (std::uint32_t w : cfg.metric_widths) {
    IndexConfig one = cfg;
    one.ngram_width = w;
    one.metric_widths.clear();
    out.emplace(w, build_index_set(corpus, one).extraction);
  }
  return out;
}

// A JSONL corpus file ({"id": ..., "text": ...} per line) exposed as a
// document range that can be iterated repeatedly; each begin() reopens the
// file, so two-pass builds stream it twice without buffering.
class JsonlCorpus {
 public:
  explicit JsonlCorpus(std::string path) : path_(std::move(path)) {}

  class iterator {
   public:
    using value_type = CorpusDocument;

    iterator() = default;
    explicit iterator(const std::string& path)
        : file_(std::make_shared<std::ifstream>(open_input(path))),
          reader_(std::make_shared<JsonlReader>(*file_)) {
      advance();
    }

    const CorpusDocument& operator*() const { return doc_; }
    const CorpusDocument* operator->() const { return &doc_; }
    iterator& operator++() {
      advance();
      return *this;
    }
    bool operator!=(const iterator& other) const { return done_ != other.done_; }
    bool operator==(const iterator& other) const { return done_ == other.done_; }

   private:
    void advance() {
      auto obj = reader_->next();
      if (!obj) {
        done_ = true;
        return;
      }
      if (!obj->contains("id") || !(*obj)["id"].is_string() ||
          !obj->contains("text") || !(*obj)["text"].is_string()) {
        throw FormatError(FormatError::Kind::bad_value,
                          "line " + std::to_string(reader_->line_number()) +
                              ": expected {\"id\": string, \"text\": string}");
      }
      done_ = false;
      doc_.id = (*obj)["id"].get<std::string>();
      doc_.text = (*obj)["text"].get<std::string>();
    }

    std::shared_ptr<std::ifstream> file_;
    std::shared_ptr<JsonlReader> reader_;
    CorpusDocument doc_;
    bool done_ = true;  // default-constructed iterator is end()
  };

  iterator begin() const { return iterator(path_); }
  iterator end() const { return iterator(); }

 private:
  std::string path_;
};

inline std::string sketch_file_name(const std::string& stem, std::uint32_t width) {
  return stem + ".n" + std::to_string(width) + ".bsf";
}

}  // namespace quotescrub
