#pragma once

// Per-level Gaussian-process algebra: generalized least squares, S^2(phi),
// and the integrated log-likelihood. Everything downstream goes through gls_fit.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cokrig/kernels.hpp"

namespace cokrig {

// Data for one fidelity level t. The design is X_1 = H_1 and X_t = [H_t, W_{t-1}].
struct LevelData {
  int t = 1;
  Eigen::MatrixXd inputs;                       // n x d
  Eigen::VectorXd outputs;                      // n
  Eigen::MatrixXd basis;                        // H_t, n x p
  std::optional<Eigen::VectorXd> lower_output;  // W_{t-1} = y_{t-1}(inputs), absent at t = 1
  Eigen::MatrixXd design;                       // X_t, n x q

  static LevelData make(int t, Eigen::MatrixXd inputs, Eigen::VectorXd outputs, Eigen::MatrixXd basis,
                        std::optional<Eigen::VectorXd> lower_output = std::nullopt);

  [[nodiscard]] Eigen::Index n() const { return inputs.rows(); }
  [[nodiscard]] Eigen::Index d() const { return inputs.cols(); }
  [[nodiscard]] Eigen::Index p() const { return basis.cols(); }
  [[nodiscard]] Eigen::Index q() const { return design.cols(); }
};

struct LevelFactorization {
  RangeParams params;
  Eigen::LLT<Eigen::MatrixXd> chol_R;
  Eigen::LLT<Eigen::MatrixXd> chol_xrx;  // of X^T R^-1 X
  Eigen::MatrixXd whitened_design;       // L^-1 X, where R = L L^T
  Eigen::VectorXd b_hat;                 // (beta_hat, gamma_hat)
  Eigen::VectorXd rinv_residual;         // R^-1 (y - X b_hat)
  double S2 = 0.0;
  double yRy = 0.0;  // y^T R^-1 y, the scale S2 is judged against
  double logdet_R = 0.0;
  double logdet_xrx = 0.0;
  // W^T Q^H W with Q^H the projected precision on H alone; only set for t > 1.
  std::optional<double> lower_schur;

  [[nodiscard]] Eigen::MatrixXd R_inverse() const;
  // S2 is at rounding level relative to y^T R^-1 y: the outputs lie in the column space of X.
  [[nodiscard]] bool residual_vanishes() const { return !(S2 > 1e-24 * yRy) || !(S2 > 0.0); }
};

// Generalized least squares at fixed range parameters. Throws SingularCorrelationError when R
// is not numerically positive definite and DesignRankError when X_t is rank deficient.
LevelFactorization gls_fit(const LevelData& data, const RangeParams& params, const KernelSpec& spec);
// Same, from an already assembled correlation matrix (nugget included).
LevelFactorization gls_fit(const LevelData& data, const RangeParams& params, const Eigen::MatrixXd& R);

// Q = R^-1 - R^-1 X (X^T R^-1 X)^-1 X^T R^-1, formed explicitly.
Eigen::MatrixXd projected_precision(const LevelFactorization& fact);

// -1/2 log|R| - 1/2 log|X^T R^-1 X| - ((n - q)/2 + a - 1) log S^2, dropping the constant.
double integrated_log_likelihood(const LevelFactorization& fact, const LevelData& data, double a_t);
double integrated_log_likelihood(const LevelData& data, const RangeParams& params, const KernelSpec& spec,
                                 double a_t);

struct TailPoint {
  double phi = 0.0;
  std::optional<double> value;
  std::string error;
};

// Integrated log-likelihood along the ray phi_l = phi for all l. Failures are recorded per point.
std::vector<TailPoint> tail_probe(const LevelData& data, const KernelSpec& spec, double a_t,
                                  const std::vector<double>& phi_grid);

struct LocationScale {
  Eigen::VectorXd b_hat;
  double sigma2_hat = 0.0;
};

// Posterior modes: b_hat is the GLS estimate, sigma2_hat = S^2 / (n - q + 2).
LocationScale location_scale_estimates(const LevelFactorization& fact, const LevelData& data);

}  // namespace cokrig
