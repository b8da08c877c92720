#pragma once

#include <stdexcept>
#include <string>

namespace lidkit {

// All library failures derive from Error so callers (the CLI in particular)
// can map them onto exit codes without knowing every subtype.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Collinear/coincident points, zero-extent eyes, flat blinks.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// Not enough samples, peaks, or training vectors to proceed.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace lidkit
