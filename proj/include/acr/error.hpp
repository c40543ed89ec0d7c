#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Chord-label grammar violation. `offset`/`length` locate the offending span
/// in the input text.
class ParseError : public Error {
 public:
  ParseError(const std::string& text, std::size_t offset, std::size_t length,
             const std::string& what)
      : Error(format(text, offset, length, what)),
        offset_(offset),
        length_(length) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t length() const noexcept { return length_; }

 private:
  static std::string format(const std::string& text, std::size_t offset,
                            std::size_t length, const std::string& what) {
    std::string span = offset < text.size() ? text.substr(offset, length) : "";
    return what + " at offset " + std::to_string(offset) + " ('" + span +
           "') in \"" + text + "\"";
  }

  std::size_t offset_;
  std::size_t length_;
};

/// Malformed or inconsistent input data (files, corpora, configurations).
/// `line` is 1-based, 0 when not applicable.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace acr
