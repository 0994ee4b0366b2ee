#include "cokrig/priors.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cokrig/errors.hpp"

namespace cokrig {

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Reference: return "reference";
    case PriorKind::Jeffreys1: return "jeffreys1";
    case PriorKind::Jeffreys2: return "jeffreys2";
    case PriorKind::JointlyRobust: return "jointly-robust";
    case PriorKind::Flat: return "flat";
    case PriorKind::InverseRange: return "inverse-range";
  }
  return "unknown";
}

PriorKind parse_prior_kind(const std::string& text) {
  if (text == "reference") return PriorKind::Reference;
  if (text == "jeffreys1" || text == "jeffreys") return PriorKind::Jeffreys1;
  if (text == "jeffreys2") return PriorKind::Jeffreys2;
  if (text == "jointly-robust" || text == "jr") return PriorKind::JointlyRobust;
  if (text == "flat") return PriorKind::Flat;
  if (text == "inverse-range") return PriorKind::InverseRange;
  throw std::invalid_argument("unknown prior kind '" + text + "'");
}

PriorSpec PriorSpec::resolved_for(const Eigen::MatrixXd& inputs) const {
  PriorSpec out = *this;
  const auto d = static_cast<double>(inputs.cols());
  const auto n = static_cast<double>(inputs.rows());
  if (!out.jr_a0) out.jr_a0 = 0.5 - d;
  if (out.jr_C.size() == 0) {
    const Eigen::VectorXd span = inputs.colwise().maxCoeff() - inputs.colwise().minCoeff();
    out.jr_C = std::pow(n, -1.0 / d) * span.cwiseAbs();
  }
  return out;
}

Eigen::MatrixXd trace_information(const Eigen::MatrixXd& precision, std::span<const Eigen::MatrixXd> dR,
                                  double corner) {
  const auto d = static_cast<Eigen::Index>(dR.size());
  std::vector<Eigen::MatrixXd> M;
  M.reserve(dR.size());
  for (const auto& D : dR) M.push_back(D * precision);

  Eigen::MatrixXd info(d + 1, d + 1);
  info(0, 0) = corner;
  for (Eigen::Index k = 0; k < d; ++k) {
    info(0, k + 1) = M[k].trace();
    for (Eigen::Index j = k; j < d; ++j) {
      // tr(M_k M_j) = sum_ab M_k(a, b) M_j(b, a)
      info(k + 1, j + 1) = M[k].cwiseProduct(M[j].transpose()).sum();
    }
  }
  return info.selfadjointView<Eigen::Upper>();
}

Eigen::MatrixXd fisher_info_reference(const LevelData& data, const LevelFactorization& fact,
                                      const KernelSpec& spec) {
  const auto dR = corr_matrix_derivs(data.inputs, fact.params, spec);
  return trace_information(projected_precision(fact), dR, static_cast<double>(data.n() - data.q()));
}

Eigen::MatrixXd fisher_info_reference(const LevelData& data, const RangeParams& params, const KernelSpec& spec) {
  return fisher_info_reference(data, gls_fit(data, params, spec), spec);
}

Eigen::MatrixXd fisher_info_jeffreys(const LevelData& data, const LevelFactorization& fact,
                                     const KernelSpec& spec) {
  const auto dR = corr_matrix_derivs(data.inputs, fact.params, spec);
  return trace_information(fact.R_inverse(), dR, static_cast<double>(data.n()));
}

double half_logdet_information(const Eigen::MatrixXd& info, const RangeParams& params) {
  const Eigen::MatrixXd sym = 0.5 * (info + info.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().allFinite() ||
      !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw PriorEvaluationError("Fisher information is not positive definite", params.phi());
  }
  return llt.matrixLLT().diagonal().array().log().sum();
}

double log_reference_prior(const LevelData& data, const LevelFactorization& fact, const KernelSpec& spec) {
  return half_logdet_information(fisher_info_reference(data, fact, spec), fact.params);
}

double log_reference_prior(const LevelData& data, const RangeParams& params, const KernelSpec& spec) {
  return log_reference_prior(data, gls_fit(data, params, spec), spec);
}

double log_jeffreys_prior(const LevelData& data, const LevelFactorization& fact, const KernelSpec& spec,
                          JeffreysVariant variant) {
  double value = half_logdet_information(fisher_info_jeffreys(data, fact, spec), fact.params);
  if (variant == JeffreysVariant::J2) value += 0.5 * fact.logdet_xrx;
  return value;
}

double log_jeffreys_prior(const LevelData& data, const RangeParams& params, const KernelSpec& spec,
                          JeffreysVariant variant) {
  return log_jeffreys_prior(data, gls_fit(data, params, spec), spec, variant);
}

double log_jr_prior(const RangeParams& params, const PriorSpec& prior) {
  if (!prior.jr_a0 || prior.jr_C.size() != params.size()) {
    throw std::invalid_argument("jointly robust prior needs a0 and one C_l per dimension");
  }
  const double d = static_cast<double>(params.size());
  const double a0 = *prior.jr_a0;
  if (!(a0 > -(d + 1.0)) || !(prior.jr_b0 > 0.0) || (prior.jr_C.array() <= 0.0).any()) {
    throw std::invalid_argument("jointly robust prior requires a0 > -(d+1), b0 > 0 and C_l > 0");
  }
  const double s = prior.jr_C.dot((1.0 / params.phi().array()).matrix());
  const double value = a0 * std::log(s) - prior.jr_b0 * s;
  if (!std::isfinite(value)) {
    throw PriorEvaluationError("jointly robust prior is not finite", params.phi());
  }
  return value;
}

bool prior_uses_derivatives(PriorKind kind) {
  return kind == PriorKind::Reference || kind == PriorKind::Jeffreys1 || kind == PriorKind::Jeffreys2;
}

double log_prior(const LevelData& data, const LevelFactorization& fact, const PriorSpec& prior,
                 std::span<const Eigen::MatrixXd> dR) {
  switch (prior.kind) {
    case PriorKind::Reference:
      return half_logdet_information(
          trace_information(projected_precision(fact), dR, static_cast<double>(data.n() - data.q())), fact.params);
    case PriorKind::Jeffreys1:
    case PriorKind::Jeffreys2: {
      double value = half_logdet_information(
          trace_information(fact.R_inverse(), dR, static_cast<double>(data.n())), fact.params);
      if (prior.kind == PriorKind::Jeffreys2) value += 0.5 * fact.logdet_xrx;
      return value;
    }
    case PriorKind::JointlyRobust: {
      // B = 1/phi has |dB/dphi| = phi^-2.
      const PriorSpec resolved = prior.resolved_for(data.inputs);
      return log_jr_prior(fact.params, resolved) - 2.0 * fact.params.phi().array().log().sum();
    }
    case PriorKind::Flat: return 0.0;
    case PriorKind::InverseRange: return -fact.params.phi().array().log().sum();
  }
  throw std::invalid_argument("unknown prior kind");
}

double log_prior(const LevelData& data, const LevelFactorization& fact, const KernelSpec& spec,
                 const PriorSpec& prior) {
  std::vector<Eigen::MatrixXd> dR;
  if (prior_uses_derivatives(prior.kind)) dR = corr_matrix_derivs(data.inputs, fact.params, spec);
  return log_prior(data, fact, prior, dR);
}

double log_prior(const LevelData& data, const RangeParams& params, const KernelSpec& spec,
                 const PriorSpec& prior) {
  switch (prior.kind) {
    case PriorKind::Flat: return 0.0;
    case PriorKind::InverseRange: return -params.phi().array().log().sum();
    case PriorKind::JointlyRobust:
      return log_jr_prior(params, prior.resolved_for(data.inputs)) - 2.0 * params.phi().array().log().sum();
    default: return log_prior(data, gls_fit(data, params, spec), spec, prior);
  }
}

}  // namespace cokrig
