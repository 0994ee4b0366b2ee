#pragma once

// Log-densities (up to additive constants) of the priors on the range parameters of one level,
// together with the Fisher information matrices the objective priors are built from.

#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "cokrig/gp_level.hpp"
#include "cokrig/kernels.hpp"

namespace cokrig {

enum class PriorKind { Reference, Jeffreys1, Jeffreys2, JointlyRobust, Flat, InverseRange };

std::string to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string& text);

struct PriorSpec {
  PriorKind kind = PriorKind::Reference;
  // Jointly robust hyperparameters. Unset a0 / empty C fall back to the defaults
  // a0 = 1/2 - d and C_l = n^(-1/d) |x_l^max - x_l^min| computed from the level's inputs.
  std::optional<double> jr_a0;
  double jr_b0 = 1.0;
  Eigen::VectorXd jr_C;

  // Exponent a_t on 1/sigma_t^2: 1 + q_t/2 for the second Jeffreys prior, 1 otherwise.
  [[nodiscard]] double exponent(Eigen::Index q) const {
    return kind == PriorKind::Jeffreys2 ? 1.0 + 0.5 * static_cast<double>(q) : 1.0;
  }

  // Copy with the jointly robust defaults filled in for the given inputs.
  [[nodiscard]] PriorSpec resolved_for(const Eigen::MatrixXd& inputs) const;
};

enum class JeffreysVariant { J1, J2 };

// Fisher information built from a projected precision (reference, corner n - q) or from R^-1
// (Jeffreys, corner n), with one derivative matrix per range parameter:
//   [ corner     tr(M_1)        ...  tr(M_d)        ]
//   [            tr(M_1 M_1)    ...  tr(M_1 M_d)    ]
//   [                           ...  tr(M_d M_d)    ],   M_k = dR_k * precision.
Eigen::MatrixXd trace_information(const Eigen::MatrixXd& precision, std::span<const Eigen::MatrixXd> dR,
                                  double corner);

Eigen::MatrixXd fisher_info_reference(const LevelData& data, const LevelFactorization& fact,
                                      const KernelSpec& spec);
Eigen::MatrixXd fisher_info_reference(const LevelData& data, const RangeParams& params, const KernelSpec& spec);
Eigen::MatrixXd fisher_info_jeffreys(const LevelData& data, const LevelFactorization& fact,
                                     const KernelSpec& spec);

// 1/2 log det of the symmetrized information via Cholesky; PriorEvaluationError when it is not
// positive definite.
double half_logdet_information(const Eigen::MatrixXd& info, const RangeParams& params);

double log_reference_prior(const LevelData& data, const LevelFactorization& fact, const KernelSpec& spec);
double log_reference_prior(const LevelData& data, const RangeParams& params, const KernelSpec& spec);

double log_jeffreys_prior(const LevelData& data, const LevelFactorization& fact, const KernelSpec& spec,
                          JeffreysVariant variant);
double log_jeffreys_prior(const LevelData& data, const RangeParams& params, const KernelSpec& spec,
                          JeffreysVariant variant);

// Density in inverse-range space B_l = 1/phi_l: a0 log(sum C_l B_l) - b0 sum C_l B_l.
// Requires a resolved spec (see PriorSpec::resolved_for).
double log_jr_prior(const RangeParams& params, const PriorSpec& prior);

// Dispatch over kinds, always as a density in phi-space.
double log_prior(const LevelData& data, const LevelFactorization& fact, const KernelSpec& spec,
                 const PriorSpec& prior);
double log_prior(const LevelData& data, const RangeParams& params, const KernelSpec& spec,
                 const PriorSpec& prior);
// Same, with the correlation derivatives at fact.params already computed (ignored by the
// priors that do not need them).
double log_prior(const LevelData& data, const LevelFactorization& fact, const PriorSpec& prior,
                 std::span<const Eigen::MatrixXd> dR);

// Whether the prior needs dR/dphi.
bool prior_uses_derivatives(PriorKind kind);

}  // namespace cokrig
