#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace cokrig {

// Cholesky of the correlation matrix failed at the given range parameters.
class SingularCorrelationError : public std::runtime_error {
 public:
  SingularCorrelationError(const std::string& what, Eigen::VectorXd phi)
      : std::runtime_error(what), phi_(std::move(phi)) {}
  [[nodiscard]] const Eigen::VectorXd& phi() const { return phi_; }

 private:
  Eigen::VectorXd phi_;
};

// The regression design X_t (or its W_{t-1} column against H_t) is not of full column rank.
class DesignRankError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// S^2 vanished: the outputs lie in the column space of the design.
class DegenerateDataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class PriorEvaluationError : public std::runtime_error {
 public:
  PriorEvaluationError(const std::string& what, Eigen::VectorXd phi)
      : std::runtime_error(what), phi_(std::move(phi)) {}
  [[nodiscard]] const Eigen::VectorXd& phi() const { return phi_; }

 private:
  Eigen::VectorXd phi_;
};

class EstimationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// n_t - q_t <= 2, so the Student-t predictive distribution has no finite variance.
class VarianceUndefinedError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class NestingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Too many benchmark replicates failed to fit.
class BenchmarkError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cokrig
