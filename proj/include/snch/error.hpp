#pragma once

#include <stdexcept>
#include <string>

namespace snch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N = A^{-1} applied to data with a nonzero mean.
class NotMeanZero : public Error {
 public:
  using Error::Error;
};

/// Kernel width not resolved by the grid (epsilon < 2 * spacing).
class UnresolvedKernel : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Resolvent iteration did not reach the requested residual.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// A solver coefficient left the finite range.
class NonFinite : public Error {
 public:
  NonFinite(long step, const std::string& what)
      : Error("non-finite state at step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A configuration violates a modelling assumption; `assumption()` names it.
class ValidationError : public Error {
 public:
  ValidationError(std::string assumption, const std::string& what)
      : Error("[" + assumption + "] " + what), assumption_(std::move(assumption)) {}
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  std::string assumption_;
};

class NonMeanZeroDirection : public Error {
 public:
  using Error::Error;
};

/// Itô residual requested from a record that was run without noise bookkeeping.
class MissingLedger : public Error {
 public:
  using Error::Error;
};

}  // namespace snch
