#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kfeller {

enum class ErrorKind {
  config,         // invalid parameters or limits
  domain,         // argument outside [0,1] or similar
  precision,      // truncation or root resolution insufficient
  resource,       // memory / size caps exceeded
  inconsistency,  // numerical result contradicts a proven identity
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::domain: return "domain";
    case ErrorKind::precision: return "precision";
    case ErrorKind::resource: return "resource";
    case ErrorKind::inconsistency: return "inconsistency";
  }
  return "unknown";
}

/// Process exit status used by the command line tool for each error kind.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::domain: return 2;
    case ErrorKind::precision:
    case ErrorKind::inconsistency: return 3;
    case ErrorKind::resource: return 4;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what) : Error(ErrorKind::resource, what) {}
};

class InconsistencyError : public Error {
 public:
  explicit InconsistencyError(const std::string& what)
      : Error(ErrorKind::inconsistency, what) {}
};

/// Raised when the truncated series cannot meet a requested tolerance.
/// `required_order` is the smallest order that would, or 0 if unknown.
class PrecisionError : public Error {
 public:
  explicit PrecisionError(const std::string& what, std::size_t required_order = 0)
      : Error(ErrorKind::precision, what), required_order_(required_order) {}
  std::size_t required_order() const noexcept { return required_order_; }

 private:
  std::size_t required_order_;
};

}  // namespace kfeller
