#pragma once

#include <stdexcept>
#include <string>

namespace scone {

// Base of every error thrown by the library. Subclasses name the failure
// class so callers (and the CLI's exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class ContractError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class SamplingError : public Error { public: using Error::Error; };
class TrainingError : public Error { public: using Error::Error; };
class UndefinedError : public Error { public: using Error::Error; };
class NoValidClusteringError : public Error { public: using Error::Error; };
class DegenerateInputError : public Error { public: using Error::Error; };

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace scone
