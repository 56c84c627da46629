#pragma once

#include <stdexcept>
#include <string>

namespace rotperm {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A basis function was evaluated outside its domain (e.g. log of a
// nonpositive value).
class BasisDomainError : public Error {
 public:
  explicit BasisDomainError(const std::string& what) : Error(what) {}
};

// A test statistic could not be computed on the given data.
class StatisticError : public Error {
 public:
  explicit StatisticError(const std::string& what) : Error(what) {}
};

// Maximum-likelihood fit did not converge.
class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(what) {}
};

// The pooled percentile lies outside the range of one of the first two
// samples; the constrained fit is not attempted.
class PercentileOutsideRange : public FitError {
 public:
  explicit PercentileOutsideRange(const std::string& what) : FitError(what) {}
};

// The convex hull condition for the constrained weights fails.
class ConvexHullError : public FitError {
 public:
  explicit ConvexHullError(const std::string& what) : FitError(what) {}
};

// Newton iteration on the constrained system failed to reach tolerance.
class SolverDiverged : public FitError {
 public:
  explicit SolverDiverged(const std::string& what) : FitError(what) {}
};

// Malformed input file or configuration.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace rotperm
