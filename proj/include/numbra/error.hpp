#pragma once

#include <stdexcept>
#include <string>

namespace numbra {

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes: IoError -> 2, everything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A token (digit, marker) has no vector in the embedding table.
class MissingToken : public Error {
 public:
  explicit MissingToken(const std::string& token)
      : Error("missing embedding for token '" + token + "'"), token_(token) {}

  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

/// Embedding file content does not follow the text format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Token sequence with unbalanced or misplaced markers.
class MalformedSequence : public Error {
 public:
  using Error::Error;
};

/// Training objective became NaN or infinite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace numbra
