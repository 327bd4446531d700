#pragma once

#include <stdexcept>
#include <string>

namespace twincf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A spec or config document has an invalid field; the message names it.
class SpecError : public Error {
 public:
  SpecError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside the legal range of a family or formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Not enough data for a validation level to run.
class CannotValidateError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// The estimand is undefined on the given draws (e.g. empty denominator).
class UndefinedEstimandError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace twincf
