#pragma once

// Two-fidelity borehole testbed: the physical functions, Latin-hypercube designs and the
// replicated hold-out evaluation (RMSPE, coverage and length of 95% intervals).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cokrig/estimate.hpp"
#include "cokrig/kernels.hpp"
#include "cokrig/priors.hpp"

namespace cokrig {

struct BoreholeInput {
  double r_w = 0.1;      // [0.05, 0.15]
  double r = 25050.0;    // [100, 50000]
  double T_u = 89335.0;  // [63070, 115600]
  double H_u = 1050.0;   // [990, 1110]
  double T_l = 89.55;    // [63.1, 116]
  double H_l = 760.0;    // [700, 820]
  double L = 1400.0;     // [1120, 1680]
  double K_w = 10950.0;  // [9855, 12045]

  static constexpr int dimension = 8;
  static const Eigen::Matrix<double, 8, 2>& box();
  // Affine map from [0, 1]^8 onto the box.
  static BoreholeInput from_unit(const Eigen::VectorXd& u);
  [[nodiscard]] Eigen::VectorXd to_vector() const;
};

// Both throw std::domain_error outside the box.
double borehole_high(const BoreholeInput& x);
double borehole_low(const BoreholeInput& x);

namespace detail {
// The shared formula without the box check: lead 2 pi and offset 1 give the high fidelity,
// lead 5 and offset 1.5 the low.
double borehole_formula(const BoreholeInput& x, double lead, double offset);
}  // namespace detail

// n x d Latin hypercube on [0, 1]^d: per column a random permutation of the n cells with
// uniform jitter inside each cell.
Eigen::MatrixXd lhs_design(int n, int d, std::mt19937_64& rng);
Eigen::MatrixXd lhs_design(int n, int d, std::uint64_t seed);

struct Metrics {
  double rmspe = 0.0;
  double cvg95 = 0.0;
  double alci95 = 0.0;
};

// Coverage counts truth in [lower, upper]; an empty set of points has coverage 1.
Metrics prediction_metrics(const Eigen::VectorXd& truth, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

struct BenchmarkConfig {
  int n_low = 80;
  int n_high = 30;
  int n_test = 20;
  int n_reps = 10;
  std::uint64_t seed = 2024;
  KernelSpec kernel = KernelSpec::matern(2.5);
  PriorSpec prior;
  Estimator estimator = Estimator::Posterior;
  Basis basis;
  OptimOptions optim;  // its seed is replaced by a per-replicate seed
  int interval_draws = 4000;
  double interval_prob = 0.95;
  bool parallel = true;
};

struct ReplicateResult {
  int replicate = 0;
  bool ok = false;
  std::string error;
  Metrics metrics;
  std::vector<Eigen::VectorXd> phi_hat;  // per level
  std::vector<double> gamma_hat;         // per level above the first
  bool edge_phi = false;                 // some xi_hat on the optimizer box boundary
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<ReplicateResult> replicates;
  Metrics median;
  int failed = 0;
  double edge_fraction = 0.0;
  std::vector<std::string> warnings;
};

// One replicate: LHS of n_low + n_test points, hold out n_test, low fidelity on the rest, high
// fidelity on a random n_high subset, fit, predict the held-out high-fidelity outputs.
ReplicateResult run_borehole_replicate(const BenchmarkConfig& config, int replicate);

// Medians over replicates. Failed replicates are dropped with a warning while fewer than 20%
// fail; otherwise BenchmarkError.
BenchmarkReport run_borehole_benchmark(const BenchmarkConfig& config);

double median(std::vector<double> values);

std::string report_json(const BenchmarkReport& report);
void write_replicates_csv(std::ostream& os, const BenchmarkReport& report);

}  // namespace cokrig
