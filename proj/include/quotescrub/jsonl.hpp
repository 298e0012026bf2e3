#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <string>

#include <json.hpp>

#include "quotescrub/errors.hpp"

namespace quotescrub {

// Streaming reader for JSON-lines files. Blank lines are skipped; parse
// errors surface as FormatError carrying the 1-based line number.
class JsonlReader {
 public:
  explicit JsonlReader(std::istream& in) : in_(&in) {}

  std::size_t line_number() const { return line_number_; }

  // Next parsed object, or nullopt at end of stream.
  std::optional<nlohmann::json> next() {
    std::string line;
    while (std::getline(*in_, line)) {
      ++line_number_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded()) {
        throw FormatError(FormatError::Kind::bad_value,
                          "line " + std::to_string(line_number_) +
                              ": invalid JSON");
      }
      return obj;
    }
    if (in_->bad()) throw IoError("jsonl: read failed");
    return std::nullopt;
  }

  // Like next(), but reports malformed lines as (raw line, error message)
  // through `on_error` and keeps going.
  template <class OnError>
  std::optional<nlohmann::json> next_lenient(OnError&& on_error) {
    std::string line;
    while (std::getline(*in_, line)) {
      ++line_number_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded()) {
        on_error(line, "line " + std::to_string(line_number_) + ": invalid JSON");
        continue;
      }
      return obj;
    }
    if (in_->bad()) throw IoError("jsonl: read failed");
    return std::nullopt;
  }

 private:
  std::istream* in_;
  std::size_t line_number_ = 0;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

}  // namespace quotescrub
