#pragma once

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quotescrub/detail/murmur3.hpp"
#include "quotescrub/errors.hpp"

namespace quotescrub {

// Hex digest of a byte stream (128-bit murmur3, fixed seed). Stable across
// platforms so manifests from identical inputs compare equal.
inline std::string content_digest(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  const detail::Hash128 h = detail::murmur3_x64_128(bytes, 0);
  char hex[33];
  std::snprintf(hex, sizeof(hex), "%016llx%016llx",
                static_cast<unsigned long long>(h.h1),
                static_cast<unsigned long long>(h.h2));
  return std::string("mm3-") + hex;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for digest: " + path);
  return content_digest(in);
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Reproducibility record emitted alongside every command's outputs: the
// resolved configuration plus content digests of all inputs and outputs.
// Identical inputs and configuration always yield identical digests.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
  std::string started_at;
  std::string finished_at;
  bool deterministic = true;  // false for remote-endpoint runs

  void add_input(const std::string& path) {
    inputs.emplace_back(path, file_digest(path));
  }
  void add_output(const std::string& path) {
    outputs.emplace_back(path, file_digest(path));
  }

  nlohmann::json to_json() const {
    const auto pairs = [](const std::vector<std::pair<std::string, std::string>>& v) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [path, digest] : v) {
        arr.push_back({{"path", path}, {"digest", digest}});
      }
      return arr;
    };
    return {{"command", command},       {"config", config},
            {"inputs", pairs(inputs)},  {"outputs", pairs(outputs)},
            {"started_at", started_at}, {"finished_at", finished_at},
            {"deterministic", deterministic}};
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("manifest write failed: " + path);
  }
};

}  // namespace quotescrub
