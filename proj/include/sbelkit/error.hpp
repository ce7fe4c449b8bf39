#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbelkit {

// Root of every exception the library throws on bad input or bad numerics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data problems: malformed files, statements, references. CLI exit 2.
class DataError : public Error {
 public:
  using Error::Error;
};

// Divergence or non-finite values during numeric work. CLI exit 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  ValidationError(std::string sen_id, const std::string& what)
      : DataError("sentence " + sen_id + ": " + what), sen_id_(std::move(sen_id)) {}
  const std::string& sen_id() const noexcept { return sen_id_; }

 private:
  std::string sen_id_;
};

}  // namespace sbelkit
