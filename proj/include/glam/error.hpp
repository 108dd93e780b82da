#pragma once

#include <stdexcept>
#include <string>

namespace glam {

// Base for every error raised by the library. The C API maps each subclass
// onto a distinct status code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// Invalid or inconsistent configuration / usage.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Fitting could not produce a feasible model.
class FitError : public Error {
public:
  using Error::Error;
};

// Malformed document (model JSON, CSV, config file).
class SchemaError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace glam
