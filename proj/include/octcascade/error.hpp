#pragma once

#include <stdexcept>
#include <string>

namespace octcascade {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (range, ordering, shape).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Two arrays that must agree in shape do not.
class ShapeMismatchError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Configuration rejected before any work was done.
class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Header and payload disagree, or the header is unreadable.
class CorruptFileError : public IoError {
public:
  using IoError::IoError;
};

/// A boundary file is missing rows for one or more surfaces.
class IncompleteSetError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// No path satisfies the band and jump constraints.
class InfeasibleError : public Error {
public:
  InfeasibleError(const std::string& what, int column)
      : Error(what), column_(column) {}
  int column() const noexcept { return column_; }

private:
  int column_;
};

class DomainError : public Error {
public:
  using Error::Error;
};

/// ROC area requested on ground truth with a single class.
class UndefinedAucError : public DomainError {
public:
  using DomainError::DomainError;
};

}  // namespace octcascade
