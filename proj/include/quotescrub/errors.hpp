#pragma once

#include <stdexcept>
#include <string>

namespace quotescrub {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter values or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or unwritable files and streams.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (sketch files, JSON lines, config files).
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, bad_version, truncated, bad_value };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Remote completion endpoint failures (connection, HTTP status, bad body).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace quotescrub
