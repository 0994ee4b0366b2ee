#pragma once

// Empirical-Bayes estimation of the range parameters, one level at a time, plus the
// nested-design assembly every fit starts from.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cokrig/gp_level.hpp"
#include "cokrig/kernels.hpp"
#include "cokrig/priors.hpp"

namespace cokrig {

enum class BasisKind { Constant, Linear };

// Mean basis h(x): constant 1, or (1, x_1, ..., x_d).
struct Basis {
  BasisKind kind = BasisKind::Constant;

  [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::MatrixXd& X) const;
  [[nodiscard]] Eigen::Index size(Eigen::Index d) const { return kind == BasisKind::Constant ? 1 : d + 1; }
  bool operator==(const Basis&) const = default;
};

std::string to_string(BasisKind kind);
BasisKind parse_basis(const std::string& text);

struct LevelSamples {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd outputs;
};

struct CokrigingData {
  std::vector<LevelData> levels;
  Basis basis;

  [[nodiscard]] std::size_t s() const { return levels.size(); }
  [[nodiscard]] Eigen::Index d() const { return levels.empty() ? 0 : levels.front().d(); }
};

// Validates the nesting X_t subset X_{t-1} (coordinates matched within 1e-12), extracts
// W_{t-1} by row matching and builds each level's design.
CokrigingData assemble(const std::vector<LevelSamples>& raw_levels, Basis basis = {});

enum class Estimator {
  Posterior,  // maximize the integrated posterior in xi = log(1/phi)
  PluginMle,  // maximize the concentrated restricted likelihood, no prior
};

std::string to_string(Estimator e);

struct OptimOptions {
  std::uint64_t seed = 0;
  int n_starts = 8;
  int max_evals = 0;  // 0 selects 500 (d + 1)
  double tolerance = 1e-8;
  double xi_lower = -10.0;
  double xi_upper = 10.0;
  double start_box = 3.0;  // random starts are uniform on [-start_box, start_box]^d
  double initial_step = 1.0;
  bool parallel = true;
};

struct OptimDiagnostics {
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  int restarts = 0;
  int best_start = 0;
  int failed_starts = 0;
  int failed_evaluations = 0;
  std::string last_failure;
};

struct LevelFit {
  RangeParams params;
  LevelFactorization fact;
  Eigen::VectorXd b_hat;
  double sigma2_hat = 0.0;
  OptimDiagnostics diagnostics;
};

struct FitResult {
  KernelSpec kernel;
  PriorSpec prior;
  Estimator estimator = Estimator::Posterior;
  // The maximized object is the posterior density of xi, so log phi Jacobian terms are included.
  std::string parameterization = "xi=log(1/phi); objective is the density of xi";
  std::vector<LevelFit> levels;
};

// Returned in place of the objective when the correlation matrix, design or prior fails.
inline constexpr double kObjectiveSentinel = -1e100;

// log L^I(phi(xi)) + log pi(phi(xi)) + sum_l log phi_l; kObjectiveSentinel on numerical failure.
double objective(const LevelData& data, const Eigen::VectorXd& xi, const KernelSpec& spec, const PriorSpec& prior);

// -1/2 log|R| - ((n - q)/2) log S^2 (the plug-in baseline; no determinant of X^T R^-1 X).
double concentrated_restricted_likelihood(const LevelData& data, const RangeParams& params,
                                          const KernelSpec& spec);

LevelFit fit_level(const LevelData& data, const KernelSpec& spec, const PriorSpec& prior,
                   const OptimOptions& opts, Estimator estimator = Estimator::Posterior);

// Independent per-level fits followed by the location/scale estimates at phi_hat.
FitResult fit(const CokrigingData& data, const KernelSpec& spec, const PriorSpec& prior,
              const OptimOptions& opts, Estimator estimator = Estimator::Posterior);

// Conditions the model at given range parameters without optimizing.
FitResult fit_fixed(const CokrigingData& data, const KernelSpec& spec, const PriorSpec& prior,
                    const std::vector<RangeParams>& params, Estimator estimator = Estimator::Posterior);

}  // namespace cokrig
