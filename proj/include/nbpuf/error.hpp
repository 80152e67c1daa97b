#ifndef NBPUF_ERROR_HPP
#define NBPUF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nbpuf {

/// Base of every exception thrown by the library. `code()` is a short
/// machine-parsable tag used by the command-line front end.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual const char* code() const noexcept = 0;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* code() const noexcept override { return "domain"; }
};

/// Invalid distribution or configuration parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* code() const noexcept override { return "parameter"; }
};

/// Sample set that cannot support an estimate (zero variance, too few cells).
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* code() const noexcept override { return "degenerate"; }
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* code() const noexcept override { return "data"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* code() const noexcept override { return "io"; }
};

/// Root finder ran out of iterations. Carries the best bracket found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double bracket_lo, double bracket_hi)
      : Error(what), bracket_lo_(bracket_lo), bracket_hi_(bracket_hi) {}
  [[nodiscard]] const char* code() const noexcept override { return "convergence"; }
  [[nodiscard]] double bracket_lo() const noexcept { return bracket_lo_; }
  [[nodiscard]] double bracket_hi() const noexcept { return bracket_hi_; }

 private:
  double bracket_lo_;
  double bracket_hi_;
};

}  // namespace nbpuf

#endif  // NBPUF_ERROR_HPP
