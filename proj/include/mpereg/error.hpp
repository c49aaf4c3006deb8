#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpereg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input geometry admits no unique answer (coincident points, collinear pairs, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument or configuration violates its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ParseError : public IoError {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : IoError(path, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mpereg
