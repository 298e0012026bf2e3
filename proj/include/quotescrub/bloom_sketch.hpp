#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "quotescrub/detail/murmur3.hpp"
#include "quotescrub/errors.hpp"

namespace quotescrub {

// Fixed-width n-gram membership filter. Zero false negatives by
// construction; the false-positive rate is set at planning time from the
// expected key count. Keys are the UTF-8 bytes of normalized n-gram windows.
//
// A frozen (fully built) sketch is immutable and safe for any number of
// concurrent readers. Building is single-writer; parallel builds use one
// private sketch per worker plus merge().
class BloomSketch {
 public:
  static constexpr char kMagic[8] = {'B', 'S', 'C', 'R', 'U', 'B', 'F', '1'};
  static constexpr std::uint32_t kVersion = 1;

  BloomSketch() = default;

  // Sizes the filter for `expected_items` keys at `target_fpr`:
  //   m   = ceil(-n * ln(p) / ln(2)^2)
  //   k_h = max(1, round((m / n) * ln 2))
  static BloomSketch plan(std::uint64_t expected_items, double target_fpr,
                          std::uint32_t ngram_width, std::uint64_t seed) {
    if (expected_items == 0) {
      throw ConfigError("bloom plan: expected_items must be positive");
    }
    if (!(target_fpr > 0.0) || !(target_fpr < 1.0)) {
      throw ConfigError("bloom plan: target_fpr must be in (0, 1)");
    }
    if (ngram_width == 0) {
      throw ConfigError("bloom plan: ngram_width must be positive");
    }
    const double ln2 = std::log(2.0);
    const double bits =
        -static_cast<double>(expected_items) * std::log(target_fpr) / (ln2 * ln2);
    BloomSketch sk;
    sk.ngram_width_ = ngram_width;
    sk.bit_count_ = static_cast<std::uint64_t>(std::ceil(bits));
    sk.hash_count_ = static_cast<std::uint32_t>(std::max<std::int64_t>(
        1, std::llround(static_cast<double>(sk.bit_count_) /
                        static_cast<double>(expected_items) * ln2)));
    sk.seed_ = seed;
    sk.words_.assign((sk.bit_count_ + 63) / 64, 0);
    return sk;
  }

  std::uint32_t ngram_width() const { return ngram_width_; }
  std::uint64_t bit_count() const { return bit_count_; }
  std::uint32_t hash_count() const { return hash_count_; }
  std::uint64_t seed() const { return seed_; }

  // Number of insert calls; an upper bound on distinct keys.
  std::uint64_t inserted_count() const { return inserted_count_; }

  void insert(std::string_view key) {
    if (bit_count_ == 0) throw ConfigError("bloom insert: sketch was never planned");
    const detail::Hash128 h = detail::murmur3_x64_128(key, seed_);
    const std::uint64_t step = h.h2 | 1;  // odd so probes cycle over even m
    std::uint64_t idx = h.h1;
    for (std::uint32_t i = 0; i < hash_count_; ++i, idx += step) {
      const std::uint64_t bit = idx % bit_count_;
      words_[bit >> 6] |= std::uint64_t(1) << (bit & 63);
    }
    ++inserted_count_;
  }

  bool contains(std::string_view key) const {
    if (bit_count_ == 0) return false;
    const detail::Hash128 h = detail::murmur3_x64_128(key, seed_);
    const std::uint64_t step = h.h2 | 1;
    std::uint64_t idx = h.h1;
    for (std::uint32_t i = 0; i < hash_count_; ++i, idx += step) {
      const std::uint64_t bit = idx % bit_count_;
      if (!(words_[bit >> 6] & (std::uint64_t(1) << (bit & 63)))) return false;
    }
    return true;
  }

  // Bitwise OR of another sketch built with identical plan parameters.
  void merge_from(const BloomSketch& other) {
    if (ngram_width_ != other.ngram_width_ || bit_count_ != other.bit_count_ ||
        hash_count_ != other.hash_count_ || seed_ != other.seed_) {
      throw ConfigError("bloom merge: sketch parameters differ");
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
      words_[i] |= other.words_[i];
    }
    inserted_count_ += other.inserted_count_;
  }

  std::uint64_t popcount() const {
    std::uint64_t n = 0;
    for (std::uint64_t w : words_) n += std::popcount(w);
    return n;
  }

  // Fraction of set bits; the expected query false-positive rate at the
  // current load is fill_ratio() ^ hash_count().
  double fill_ratio() const {
    return bit_count_ ? static_cast<double>(popcount()) /
                            static_cast<double>(bit_count_)
                      : 0.0;
  }

  double estimated_fpr() const {
    return std::pow(fill_ratio(), static_cast<double>(hash_count_));
  }

  bool bit_identical(const BloomSketch& other) const {
    return ngram_width_ == other.ngram_width_ && bit_count_ == other.bit_count_ &&
           hash_count_ == other.hash_count_ && seed_ == other.seed_ &&
           inserted_count_ == other.inserted_count_ && words_ == other.words_;
  }

  // Little-endian layout: magic "BSCRUBF1", version u32, ngram_width u32,
  // m u64, k_h u32, seed u64, inserted_count u64, then ceil(m/8) payload
  // bytes with any trailing partial-byte bits zero.
  void serialize(std::ostream& out) const {
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, ngram_width_);
    write_u64(out, bit_count_);
    write_u32(out, hash_count_);
    write_u64(out, seed_);
    write_u64(out, inserted_count_);
    const std::uint64_t payload_bytes = (bit_count_ + 7) / 8;
    std::uint64_t written = 0;
    for (std::uint64_t w : words_) {
      for (int b = 0; b < 8 && written < payload_bytes; ++b, ++written) {
        out.put(static_cast<char>((w >> (8 * b)) & 0xFF));
      }
    }
    if (!out) throw IoError("bloom serialize: write failed");
  }

  static BloomSketch deserialize(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic)) {
      throw FormatError(FormatError::Kind::truncated,
                        "bloom deserialize: missing header");
    }
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
      throw FormatError(FormatError::Kind::bad_magic,
                        "bloom deserialize: bad magic");
    }
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) {
      throw FormatError(FormatError::Kind::bad_version,
                        "bloom deserialize: unsupported version " +
                            std::to_string(version));
    }
    BloomSketch sk;
    sk.ngram_width_ = read_u32(in);
    sk.bit_count_ = read_u64(in);
    sk.hash_count_ = read_u32(in);
    sk.seed_ = read_u64(in);
    sk.inserted_count_ = read_u64(in);
    if (!in) {
      throw FormatError(FormatError::Kind::truncated,
                        "bloom deserialize: truncated header");
    }
    if (sk.bit_count_ == 0 || sk.hash_count_ == 0 || sk.ngram_width_ == 0) {
      throw FormatError(FormatError::Kind::bad_value,
                        "bloom deserialize: invalid parameters");
    }
    const std::uint64_t payload_bytes = (sk.bit_count_ + 7) / 8;
    sk.words_.assign((sk.bit_count_ + 63) / 64, 0);
    std::uint64_t idx = 0;
    char byte;
    for (; idx < payload_bytes && in.get(byte); ++idx) {
      sk.words_[idx >> 3] |=
          std::uint64_t(static_cast<unsigned char>(byte)) << (8 * (idx & 7));
    }
    if (idx != payload_bytes) {
      throw FormatError(FormatError::Kind::truncated,
                        "bloom deserialize: payload truncated at byte " +
                            std::to_string(idx) + " of " +
                            std::to_string(payload_bytes));
    }
    // Keep bits beyond m clear regardless of what the file carried.
    if (sk.bit_count_ & 63) {
      sk.words_.back() &= (std::uint64_t(1) << (sk.bit_count_ & 63)) - 1;
    }
    return sk;
  }

 private:
  static void write_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void write_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    char byte;
    for (int i = 0; i < 4; ++i) {
      if (!in.get(byte)) return v;
      v |= std::uint32_t(static_cast<unsigned char>(byte)) << (8 * i);
    }
    return v;
  }
  static std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    char byte;
    for (int i = 0; i < 8; ++i) {
      if (!in.get(byte)) return v;
      v |= std::uint64_t(static_cast<unsigned char>(byte)) << (8 * i);
    }
    return v;
  }

  std::uint32_t ngram_width_ = 0;
  std::uint64_t bit_count_ = 0;
  std::uint32_t hash_count_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t inserted_count_ = 0;
  std::vector<std::uint64_t> words_;
};

inline BloomSketch merge(const BloomSketch& a, const BloomSketch& b) {
  BloomSketch out = a;
  out.merge_from(b);
  return out;
}

inline void save_sketch(const BloomSketch& sk, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  sk.serialize(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

inline BloomSketch load_sketch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return BloomSketch::deserialize(in);
}

}  // namespace quotescrub
