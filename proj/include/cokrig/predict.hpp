#pragma once

// Closed-form recursive prediction at every level, the sequential Student-t sampler and
// equal-tail credible intervals built on both.

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "cokrig/estimate.hpp"

namespace cokrig {

struct PredictOptions {
  // At a level's design points return the observed output and zero variance instead of the
  // formula's value (which agrees up to rounding).
  bool snap_design_points = true;
  // When some n_t - q_t <= 2, return NaN variances from that level on instead of throwing.
  bool allow_undefined_variance = false;
};

// Rows are query points, columns are levels 1..s.
struct Prediction {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;
  // Single-level variance at level t with the same design X_t, predictor f_t and phi_hat_t but
  // without the terms carried over from level t-1.
  Eigen::MatrixXd kriging_variance;
  Eigen::VectorXi df;  // n_t - q_t
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> at_design;
};

Prediction predict(const FitResult& model, const CokrigingData& data, const Eigen::MatrixXd& X0,
                   const PredictOptions& opts = {});

// n_draws x s joint draws of (y_1(x0), ..., y_s(x0)).
Eigen::MatrixXd sample_predictive(const FitResult& model, const CokrigingData& data, const Eigen::VectorXd& x0,
                                  int n_draws, std::uint64_t seed, const PredictOptions& opts = {});

// Equal-tail interval at one level (zero-based). Exact Student-t quantiles at the first level,
// interpolated empirical quantiles of n_draws sampler draws above it.
std::pair<double, double> credible_interval(const FitResult& model, const CokrigingData& data,
                                            const Eigen::VectorXd& x0, std::size_t level, double prob,
                                            int n_draws = 4000, std::uint64_t seed = 0,
                                            const PredictOptions& opts = {});

struct Intervals {
  Eigen::MatrixXd lower;  // m x s
  Eigen::MatrixXd upper;
};

// Intervals at every point and level. Point i uses the sampler stream (seed, i).
Intervals credible_intervals(const FitResult& model, const CokrigingData& data, const Eigen::MatrixXd& X0,
                             double prob, int n_draws = 4000, std::uint64_t seed = 0,
                             const PredictOptions& opts = {});

// Linear-interpolation sample quantile (the "type 7" definition).
double empirical_quantile(std::vector<double> values, double p);

}  // namespace cokrig
