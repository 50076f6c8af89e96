#pragma once

#include <stdexcept>
#include <string>

namespace tweedie {

/// Invalid parameters passed to a distribution or model routine.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (CSV contents, response values,
/// degenerate responses for a given model).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An output file or directory could not be created or written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for failures of the numerical machinery itself.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularDesignError : public NumericalError {
 public:
  SingularDesignError(const std::string& what, long rank, long columns)
      : NumericalError(what), rank_(rank), columns_(columns) {}

  long rank() const noexcept { return rank_; }
  long columns() const noexcept { return columns_; }

 private:
  long rank_;
  long columns_;
};

/// Rank loss confined to a row subset of an otherwise full-rank design, such
/// as the positive-response rows used by the two-part model.
class SubsampleRankError : public SingularDesignError {
 public:
  using SingularDesignError::SingularDesignError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, int iterations, double last_change)
      : NumericalError(what), iterations_(iterations), last_change_(last_change) {}

  int iterations() const noexcept { return iterations_; }
  double last_change() const noexcept { return last_change_; }

 private:
  int iterations_;
  double last_change_;
};

}  // namespace tweedie
