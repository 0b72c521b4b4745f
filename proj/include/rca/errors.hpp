#pragma once

#include <stdexcept>
#include <string>

namespace rca {

// Input violates a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Scenario generation could not realise the requested configuration.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace and scenario disagree (e.g. serving PCI not in the cell table).
class DataIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No causal rule fired for the symptom window.
class UndiagnosableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TokenizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(std::string instance_id, const std::string& what)
      : std::runtime_error(instance_id + ": " + what), instance_id_(std::move(instance_id)) {}
  const std::string& instance_id() const noexcept { return instance_id_; }

 private:
  std::string instance_id_;
};

// Malformed file content; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An upstream artifact required by a command is missing.
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rca
