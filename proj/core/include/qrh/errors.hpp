#pragma once

#include <stdexcept>
#include <string>

namespace qrh {

/// Base of every exception thrown by the library. `module()` names the
/// component that raised it so front ends can report failures precisely.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Argument inside the domain but outside the range this implementation
/// evaluates to its stated accuracy.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, file, or command-line input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model parameter vector violates one of its invariants. `invariant()`
/// names the violated field.
class InvalidParams : public ConfigError {
 public:
  InvalidParams(std::string invariant, const std::string& what)
      : ConfigError("model", what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace qrh
