#pragma once

#include <stdexcept>
#include <string>

namespace sglm {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the documented domain of an operation.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An integrand produced a non-finite value at a quadrature node.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double node)
      : Error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  double node() const noexcept { return node_; }

 private:
  double node_;
};

/// The requested asymptotic regime does not satisfy the hypotheses of the
/// formula being evaluated (e.g. rho too large for bracket points).
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// Channel configuration that the requested quantity is not defined for,
/// e.g. a continuous-output activation with zero noise.
class UnsupportedConfigError : public Error {
 public:
  using Error::Error;
};

/// gamma_c = 1/I_out(0,1) is infinite because I_out(0,1) vanishes.
class InfiniteThresholdError : public Error {
 public:
  using Error::Error;
};

/// The finite minimization over plateaus has several minimizers, so the
/// asymptotic MMSE is not determined. Carries the two competing plateaus.
class CriticalityError : public Error {
 public:
  CriticalityError(const std::string& what, double lower_mmse, double upper_mmse)
      : Error(what), lower_(lower_mmse), upper_(upper_mmse) {}
  double lower_plateau() const noexcept { return lower_; }
  double upper_plateau() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

}  // namespace sglm
