#pragma once

#include <stdexcept>
#include <string>

namespace ordnmf {

// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input whose content violates a data invariant.
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument combination.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
  using std::domain_error::domain_error;
};

// Non-finite or non-positive quantity produced during inference.
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An update decreased the ELBO beyond round-off slack.
class InternalInconsistency : public std::logic_error {
  using std::logic_error::logic_error;
};

// Degenerate threshold sequence (e.g. an empty class with no floor).
class ThresholdError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
  using std::out_of_range::out_of_range;
};

}  // namespace ordnmf
