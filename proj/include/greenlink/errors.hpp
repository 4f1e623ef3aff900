#pragma once

#include <stdexcept>
#include <string>

namespace greenlink {

/// Invalid problem description or violated precondition.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The adaptive integrator could not advance past `t()`.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double t() const noexcept { return t_; }

 private:
  double t_;
};

/// The boundary value problem is not uniquely solvable (M is an eigenvalue).
class SingularProblemError : public std::runtime_error {
 public:
  SingularProblemError(const std::string& what, double determinant)
      : std::runtime_error(what), determinant_(determinant) {}
  double determinant() const noexcept { return determinant_; }

 private:
  double determinant_;
};

/// Derivative order outside what an evaluator supports.
class UnsupportedOrderError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A hypothesis of the annihilating-operator recurrence fails at `level()`.
class HypothesisError : public std::runtime_error {
 public:
  HypothesisError(const std::string& what, int level) : std::runtime_error(what), level_(level) {}
  int level() const noexcept { return level_; }

 private:
  int level_;
};

}  // namespace greenlink
