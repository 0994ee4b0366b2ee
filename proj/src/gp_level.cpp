#include "cokrig/gp_level.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cokrig/errors.hpp"

namespace cokrig {
namespace {

std::string format_phi(const Eigen::VectorXd& phi) {
  std::ostringstream os;
  os.precision(6);
  os << "phi = (";
  for (Eigen::Index i = 0; i < phi.size(); ++i) os << (i ? ", " : "") << phi[i];
  os << ")";
  return os.str();
}

double half_logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return llt.matrixLLT().diagonal().array().log().sum();
}

// Full column rank check on a Gram matrix, scale-free through unit-diagonal normalization.
bool gram_has_full_rank(const Eigen::MatrixXd& gram) {
  const Eigen::VectorXd diag = gram.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) return false;
  const Eigen::VectorXd inv_sqrt = diag.array().rsqrt();
  const Eigen::MatrixXd C = inv_sqrt.asDiagonal() * gram * inv_sqrt.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) return false;
  return llt.matrixLLT().diagonal().array().square().minCoeff() > 1e-12;
}

}  // namespace

LevelData LevelData::make(int t, Eigen::MatrixXd inputs, Eigen::VectorXd outputs, Eigen::MatrixXd basis,
                          std::optional<Eigen::VectorXd> lower_output) {
  if (t < 1) throw std::invalid_argument("level index must be >= 1");
  const Eigen::Index n = inputs.rows();
  if (n < 1) throw std::invalid_argument("level has no observations");
  if (outputs.size() != n || basis.rows() != n) {
    throw std::invalid_argument("inputs, outputs and basis disagree on the number of rows");
  }
  if (!inputs.allFinite() || !outputs.allFinite() || !basis.allFinite()) {
    throw std::invalid_argument("level data contains non-finite values");
  }
  if ((t == 1) != !lower_output.has_value()) {
    throw std::invalid_argument("lower-level output is required exactly when t > 1");
  }
  LevelData data;
  data.t = t;
  data.inputs = std::move(inputs);
  data.outputs = std::move(outputs);
  data.basis = std::move(basis);
  if (lower_output) {
    if (lower_output->size() != n || !lower_output->allFinite()) {
      throw std::invalid_argument("lower-level output has the wrong length or non-finite values");
    }
    data.design.resize(n, data.basis.cols() + 1);
    data.design << data.basis, *lower_output;
  } else {
    data.design = data.basis;
  }
  data.lower_output = std::move(lower_output);
  return data;
}

Eigen::MatrixXd LevelFactorization::R_inverse() const {
  const Eigen::Index n = chol_R.matrixLLT().rows();
  return chol_R.solve(Eigen::MatrixXd::Identity(n, n));
}

LevelFactorization gls_fit(const LevelData& data, const RangeParams& params, const KernelSpec& spec) {
  return gls_fit(data, params, corr_matrix(data.inputs, params, spec));
}

LevelFactorization gls_fit(const LevelData& data, const RangeParams& params, const Eigen::MatrixXd& R) {
  if (R.rows() != data.n() || R.cols() != data.n()) throw std::invalid_argument("correlation matrix has the wrong size");
  LevelFactorization f;
  f.params = params;
  f.chol_R.compute(R);
  if (f.chol_R.info() != Eigen::Success || !f.chol_R.matrixLLT().allFinite()) {
    throw SingularCorrelationError("correlation matrix is not positive definite at " +
                                       format_phi(params.phi()),
                                   params.phi());
  }
  const auto L = f.chol_R.matrixL();
  f.whitened_design = L.solve(data.design);
  const Eigen::VectorXd y_w = L.solve(data.outputs);

  const Eigen::MatrixXd xrx = f.whitened_design.transpose() * f.whitened_design;
  if (!gram_has_full_rank(xrx)) {
    throw DesignRankError("regression design X_t (level " + std::to_string(data.t) +
                          ") is not of full column rank at " + format_phi(params.phi()));
  }
  f.chol_xrx.compute(xrx);
  if (f.chol_xrx.info() != Eigen::Success) {
    throw DesignRankError("X^T R^-1 X is not positive definite at " + format_phi(params.phi()));
  }
  f.b_hat = f.chol_xrx.solve(f.whitened_design.transpose() * y_w);
  const Eigen::VectorXd resid_w = y_w - f.whitened_design * f.b_hat;
  f.S2 = resid_w.squaredNorm();
  f.yRy = y_w.squaredNorm();
  f.rinv_residual = L.transpose().solve(resid_w);
  f.logdet_R = 2.0 * half_logdet(f.chol_R);
  f.logdet_xrx = 2.0 * half_logdet(f.chol_xrx);

  if (data.lower_output) {
    const Eigen::Index p = data.p();
    const Eigen::MatrixXd H_w = f.whitened_design.leftCols(p);
    const Eigen::VectorXd W_w = f.whitened_design.col(p);
    double schur = W_w.squaredNorm();
    if (p > 0) {
      const Eigen::VectorXd hw = H_w.transpose() * W_w;
      schur -= hw.dot((H_w.transpose() * H_w).llt().solve(hw));
    }
    if (!(schur > 1e-12 * W_w.squaredNorm())) {
      throw DesignRankError("lower-level output W_" + std::to_string(data.t - 1) +
                            " is collinear with the basis; gamma is not identifiable");
    }
    f.lower_schur = schur;
  }
  return f;
}

Eigen::MatrixXd projected_precision(const LevelFactorization& fact) {
  const Eigen::Index n = fact.chol_R.matrixLLT().rows();
  const auto L = fact.chol_R.matrixL();
  const Eigen::MatrixXd Linv = L.solve(Eigen::MatrixXd::Identity(n, n));
  // R^-1 X = L^-T (L^-1 X)
  const Eigen::MatrixXd rinv_x = Linv.transpose() * fact.whitened_design;
  Eigen::MatrixXd Q = Linv.transpose() * Linv;
  Q.noalias() -= rinv_x * fact.chol_xrx.solve(rinv_x.transpose());
  return 0.5 * (Q + Q.transpose());
}

double integrated_log_likelihood(const LevelFactorization& fact, const LevelData& data, double a_t) {
  const double df = static_cast<double>(data.n() - data.q());
  if (df < 1.0) throw std::invalid_argument("integrated likelihood requires n_t - q_t >= 1");
  const double exponent = 0.5 * df + a_t - 1.0;
  if (!(exponent > 0.0)) throw std::invalid_argument("integrated likelihood requires (n-q)/2 + a - 1 > 0");
  if (fact.residual_vanishes()) {
    throw DegenerateDataError("S^2 vanished at level " + std::to_string(data.t) +
                              ": outputs lie in the column space of the design");
  }
  return -0.5 * fact.logdet_R - 0.5 * fact.logdet_xrx - exponent * std::log(fact.S2);
}

double integrated_log_likelihood(const LevelData& data, const RangeParams& params, const KernelSpec& spec,
                                 double a_t) {
  return integrated_log_likelihood(gls_fit(data, params, spec), data, a_t);
}

std::vector<TailPoint> tail_probe(const LevelData& data, const KernelSpec& spec, double a_t,
                                  const std::vector<double>& phi_grid) {
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    if (!(phi_grid[i] > 0.0) || (i > 0 && phi_grid[i] < phi_grid[i - 1])) {
      throw std::invalid_argument("tail probe grid must be positive and sorted");
    }
  }
  std::vector<TailPoint> out;
  out.reserve(phi_grid.size());
  for (double phi : phi_grid) {
    TailPoint pt;
    pt.phi = phi;
    try {
      pt.value = integrated_log_likelihood(data, RangeParams::constant(data.d(), phi), spec, a_t);
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

LocationScale location_scale_estimates(const LevelFactorization& fact, const LevelData& data) {
  const double denom = static_cast<double>(data.n() - data.q()) + 2.0;
  return {fact.b_hat, fact.S2 / denom};
}

}  // namespace cokrig
