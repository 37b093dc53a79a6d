#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairmon {

/// Malformed PSE text. `position()` is the zero-based byte offset of the
/// offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Structurally invalid input: non-stochastic matrix, bad delta, a division
/// where only division-free expressions are accepted, bad config file, ...
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state token or index that is not part of the declared state space.
class UnknownStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Some 1/xi evaluated with xi(M) == 0.
class ZeroDenominatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The posterior-expectation formula was asked for a monomial whose
/// consistency condition (c_ij + d_ij > 0 everywhere) does not hold yet.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file that cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fairmon
