#pragma once

#include <stdexcept>
#include <string>

namespace kprune {

// Base of everything the library throws on bad input or bad state.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or mask shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid architecture, layout or pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numeric argument outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Graph bookkeeping broken (consumer axis mismatch, dangling op id, ...).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Allocation cannot satisfy the p_max clamp.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A profiling session is already running in this process.
class BusyError : public Error {
 public:
  using Error::Error;
};

enum class LoadErrorKind { kIo, kBadMagic, kVersionMismatch, kTruncated, kMalformed };

class LoadError : public Error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  LoadErrorKind kind() const noexcept { return kind_; }

 private:
  LoadErrorKind kind_;
};

}  // namespace kprune
