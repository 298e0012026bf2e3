#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "quotescrub/bloom_sketch.hpp"
#include "quotescrub/detail/murmur3.hpp"
#include "quotescrub/quote_extract.hpp"
#include "quotescrub/text_normalize.hpp"

namespace quotescrub {
namespace detail {

inline std::vector<char32_t> norm_codepoints(std::string_view text) {
  const NormalizedText nt = normalize(text);
  std::vector<char32_t> cps;
  cps.reserve(nt.size());
  std::string_view bytes = nt.normalized();
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const DecodedChar dc = decode_utf8(bytes, pos);
    cps.push_back(dc.valid ? dc.cp : char32_t(0x110000) + (unsigned char)bytes[pos]);
    pos += dc.length;
  }
  return cps;
}

inline std::vector<std::string> norm_words(std::string_view text) {
  const NormalizedText nt = normalize(text);
  std::vector<std::string> words;
  std::string_view bytes = nt.normalized();
  std::size_t start = 0;
  while (start < bytes.size()) {
    std::size_t space = bytes.find(' ', start);
    if (space == std::string_view::npos) space = bytes.size();
    if (space > start) words.emplace_back(bytes.substr(start, space - start));
    start = space + 1;
  }
  return words;
}

// Longest common subsequence, two-row DP.
template <class Seq>
std::size_t lcs_length(const Seq& a, const Seq& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Longest common substring (contiguous), two-row DP.
template <class Seq>
std::size_t lcsubstr_length(const Seq& a, const Seq& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

template <class Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double f1_from_overlap(double overlap, double pred, double ref) {
  if (pred == 0.0 && ref == 0.0) return 1.0;
  if (pred == 0.0 || ref == 0.0 || overlap == 0.0) return 0.0;
  const double p = overlap / pred;
  const double r = overlap / ref;
  return 2.0 * p * r / (p + r);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// --- Reference-based infringement metrics (normalized-space) ---

inline std::size_t lcs_char(std::string_view a, std::string_view b) {
  return detail::lcs_length(detail::norm_codepoints(a),
                            detail::norm_codepoints(b));
}

inline std::size_t lcs_word(std::string_view a, std::string_view b) {
  return detail::lcs_length(detail::norm_words(a), detail::norm_words(b));
}

// Contiguous-match variants, kept for comparability studies.
inline std::size_t lcs_char_substring(std::string_view a, std::string_view b) {
  return detail::lcsubstr_length(detail::norm_codepoints(a),
                                 detail::norm_codepoints(b));
}

inline std::size_t lcs_word_substring(std::string_view a, std::string_view b) {
  return detail::lcsubstr_length(detail::norm_words(a), detail::norm_words(b));
}

struct AcsParams {
  std::size_t min_block_words = 3;
};

// Accumulated common subsequences: total response word mass covered by
// non-overlapping common word blocks against the reference, chosen greedily
// longest-first (ties broken toward the earliest response position). Blocks
// shorter than min_block_words do not count; reference words may back more
// than one block.
inline std::size_t acs_word(std::string_view response, std::string_view reference,
                            AcsParams params = {}) {
  const std::vector<std::string> r = detail::norm_words(response);
  const std::vector<std::string> g = detail::norm_words(reference);
  if (r.empty() || g.empty()) return 0;

  std::vector<bool> masked(r.size(), false);
  std::size_t total = 0;
  for (;;) {
    // Longest common block over unmasked response positions.
    std::vector<std::size_t> prev(g.size() + 1, 0), cur(g.size() + 1, 0);
    std::size_t best_len = 0, best_r_start = 0;
    for (std::size_t i = 1; i <= r.size(); ++i) {
      for (std::size_t j = 1; j <= g.size(); ++j) {
        cur[j] = (!masked[i - 1] && r[i - 1] == g[j - 1]) ? prev[j - 1] + 1 : 0;
        const std::size_t start = i - cur[j];
        if (cur[j] > best_len ||
            (cur[j] == best_len && cur[j] > 0 && start < best_r_start)) {
          best_len = cur[j];
          best_r_start = start;
        }
      }
      std::swap(prev, cur);
    }
    if (best_len < params.min_block_words) break;
    std::fill(masked.begin() + best_r_start,
              masked.begin() + best_r_start + best_len, true);
    total += best_len;
  }
  return total;
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return detail::edit_distance(detail::norm_codepoints(a),
                               detail::norm_codepoints(b));
}

// Unigram-overlap F1 with clipped counts.
inline double rouge1_f1(std::string_view a, std::string_view b) {
  const std::vector<std::string> wa = detail::norm_words(a);
  const std::vector<std::string> wb = detail::norm_words(b);
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& w : wb) ++counts[w];
  std::size_t overlap = 0;
  for (const std::string& w : wa) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return detail::f1_from_overlap(static_cast<double>(overlap),
                                 static_cast<double>(wa.size()),
                                 static_cast<double>(wb.size()));
}

// LCS-based F1 over words.
inline double rougeL_f1(std::string_view a, std::string_view b) {
  const std::vector<std::string> wa = detail::norm_words(a);
  const std::vector<std::string> wb = detail::norm_words(b);
  const std::size_t lcs = detail::lcs_length(wa, wb);
  return detail::f1_from_overlap(static_cast<double>(lcs),
                                 static_cast<double>(wa.size()),
                                 static_cast<double>(wb.size()));
}

struct MinHashParams {
  std::size_t num_perms = 128;
  std::size_t shingle_words = 3;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

inline std::vector<std::uint64_t> shingle_hashes(
    const std::vector<std::string>& words, const MinHashParams& p) {
  std::vector<std::uint64_t> hashes;
  if (words.size() < p.shingle_words) return hashes;
  std::string shingle;
  for (std::size_t i = 0; i + p.shingle_words <= words.size(); ++i) {
    shingle.clear();
    for (std::size_t j = 0; j < p.shingle_words; ++j) {
      if (j > 0) shingle.push_back(' ');
      shingle += words[i + j];
    }
    hashes.push_back(murmur3_64(shingle, p.seed));
  }
  return hashes;
}

inline std::vector<std::uint64_t> minhash_signature(
    const std::vector<std::uint64_t>& shingles, const MinHashParams& p) {
  std::vector<std::uint64_t> sig(p.num_perms,
                                 std::numeric_limits<std::uint64_t>::max());
  std::uint64_t salt_state = p.seed;
  for (std::size_t i = 0; i < p.num_perms; ++i) {
    const std::uint64_t salt = splitmix64(salt_state);
    for (std::uint64_t h : shingles) {
      sig[i] = std::min(sig[i], fmix64(h ^ salt));
    }
  }
  return sig;
}

}  // namespace detail

// Estimated Jaccard similarity over word shingles: the fraction of matching
// components between the two seeded minhash signatures.
inline double minhash_sim(std::string_view a, std::string_view b,
                          MinHashParams params = {}) {
  const auto sa = detail::shingle_hashes(detail::norm_words(a), params);
  const auto sb = detail::shingle_hashes(detail::norm_words(b), params);
  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;
  const auto siga = detail::minhash_signature(sa, params);
  const auto sigb = detail::minhash_signature(sb, params);
  std::size_t equal = 0;
  for (std::size_t i = 0; i < params.num_perms; ++i) {
    equal += siga[i] == sigb[i];
  }
  return static_cast<double>(equal) / static_cast<double>(params.num_perms);
}

// SQuAD-style answer F1: token-level precision/recall after lowercasing,
// punctuation stripping, and dropping English articles.
inline double qa_f1(std::string_view predicted, std::string_view gold) {
  const auto keep = [](const std::string& w) {
    return w != "a" && w != "an" && w != "the";
  };
  std::vector<std::string> p, g;
  for (std::string& w : detail::norm_words(predicted)) {
    if (keep(w)) p.push_back(std::move(w));
  }
  for (std::string& w : detail::norm_words(gold)) {
    if (keep(w)) g.push_back(std::move(w));
  }
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& w : g) ++counts[w];
  std::size_t overlap = 0;
  for (const std::string& w : p) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return detail::f1_from_overlap(static_cast<double>(overlap),
                                 static_cast<double>(p.size()),
                                 static_cast<double>(g.size()));
}

// --- Corpus-level worst-case metric ---

// Fraction of responses containing any corpus quote of length >= tau, as
// witnessed by the width-tau metric filter. One-sided: false positives can
// only overestimate, never underestimate.
inline double percent_r_gt_q(const std::vector<std::string>& responses,
                             const BloomSketch& sk_tau) {
  if (responses.empty()) {
    throw ConfigError("percent_r_gt_q: empty response list");
  }
  std::size_t flagged = 0;
  for (const std::string& r : responses) {
    flagged += contains_quote_longer_than(sk_tau, r);
  }
  return static_cast<double>(flagged) / static_cast<double>(responses.size());
}

// --- Pairwise win rate ---

enum class Direction { lower_better, higher_better };

// Probability that method A beats method B on a uniformly random
// (metric, example) pair; ties count one half. Kept as exact integer counts
// in half-units so the antisymmetry identity
//   win_rate(A,B) + win_rate(B,A) == 1
// is checkable without rounding.
struct WinRate {
  std::uint64_t half_units = 0;  // 2 per win, 1 per tie
  std::uint64_t cells = 0;       // metric x example pairs compared

  double value() const {
    return cells == 0 ? 0.5
                      : static_cast<double>(half_units) /
                            (2.0 * static_cast<double>(cells));
  }
};

using MetricTable = std::map<std::string, std::map<std::string, double>>;

inline const std::map<std::string, Direction>& default_win_rate_directions() {
  static const std::map<std::string, Direction> kDirections = {
      {"rouge1", Direction::lower_better},
      {"rougeL", Direction::lower_better},
      {"lcs_char", Direction::lower_better},
      {"lcs_word", Direction::lower_better},
      {"levenshtein", Direction::higher_better},
      {"minhash", Direction::lower_better},
  };
  return kDirections;
}

inline WinRate win_rate(const MetricTable& a, const MetricTable& b,
                        const std::map<std::string, Direction>& directions =
                            default_win_rate_directions()) {
  if (a.size() != b.size()) {
    throw ConfigError("win_rate: example sets differ in size");
  }
  WinRate wr;
  for (const auto& [id, row_a] : a) {
    const auto it_b = b.find(id);
    if (it_b == b.end()) {
      throw ConfigError("win_rate: example " + id + " missing from second table");
    }
    for (const auto& [metric, dir] : directions) {
      const auto va = row_a.find(metric);
      const auto vb = it_b->second.find(metric);
      if (va == row_a.end() || vb == it_b->second.end()) {
        throw ConfigError("win_rate: metric " + metric + " missing for " + id);
      }
      if (va->second == vb->second) {
        wr.half_units += 1;
      } else {
        const bool a_wins = dir == Direction::lower_better
                                ? va->second < vb->second
                                : va->second > vb->second;
        wr.half_units += a_wins ? 2 : 0;
      }
      ++wr.cells;
    }
  }
  return wr;
}

}  // namespace quotescrub
