#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtriage {

// Base for every error raised by the library. Callers that only care about
// "something in the pipeline failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed binary/text input at a known byte offset (PGM payloads).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Syntax error in fact/clause/theory text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class StaleVerdictError : public Error {
 public:
  StaleVerdictError(long long submitted, long long current)
      : Error("stale verdict: submitted for revision " + std::to_string(submitted) +
              ", current revision is " + std::to_string(current)),
        current_(current) {}
  long long current_revision() const noexcept { return current_; }

 private:
  long long current_;
};

// Dummy-example construction failed (unsatisfiable constraints).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Event-log replay failed. record_index is the 0-based index of the record
// that could not be applied; last_valid_index is record_index - 1 (or -1).
class LogError : public Error {
 public:
  LogError(const std::string& what, long long record_index)
      : Error("record " + std::to_string(record_index) + ": " + what +
              " (last valid record index " + std::to_string(record_index - 1) + ")"),
        record_index_(record_index) {}
  long long record_index() const noexcept { return record_index_; }
  long long last_valid_index() const noexcept { return record_index_ - 1; }

 private:
  long long record_index_;
};

}  // namespace dtriage
