#pragma once

// Product-form correlation functions r(x, x') = prod_l r_l(|x_l - x'_l|; phi_l),
// their correlation matrices, and derivatives with respect to the range parameters.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cokrig {

enum class Family { PowerExponential, Matern };

struct KernelSpec {
  Family family = Family::PowerExponential;
  // Roughness alpha for PowerExponential, smoothness nu for Matern.
  double shape = 1.9;
  double nugget = 1e-10;

  static KernelSpec power_exponential(double alpha = 1.9, double nugget = 1e-10) {
    return {Family::PowerExponential, alpha, nugget};
  }
  static KernelSpec matern(double nu = 2.5, double nugget = 1e-10) {
    return {Family::Matern, nu, nugget};
  }

  bool operator==(const KernelSpec&) const = default;
};

inline bool is_half_integer(double nu, double target) { return std::abs(nu - target) < 1e-12; }

inline void validate(const KernelSpec& spec) {
  if (spec.family == Family::PowerExponential) {
    if (!(spec.shape > 0.0 && spec.shape < 2.0)) {
      throw std::invalid_argument("power-exponential roughness must lie in (0, 2)");
    }
  } else if (!is_half_integer(spec.shape, 0.5) && !is_half_integer(spec.shape, 1.5) &&
             !is_half_integer(spec.shape, 2.5)) {
    throw std::invalid_argument("Matern smoothness must be one of 1/2, 3/2, 5/2");
  }
  if (!(spec.nugget >= 0.0 && spec.nugget <= 1e-4)) {
    throw std::invalid_argument("nugget must lie in [0, 1e-4]");
  }
}

std::string to_string(const KernelSpec& spec);
KernelSpec parse_kernel(const std::string& text, double nugget = 1e-10);

// Range parameters phi (> 0) and their log-inverse xi = log(1 / phi).
class RangeParams {
 public:
  RangeParams() = default;

  static RangeParams from_phi(Eigen::VectorXd phi) {
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
      if (!(phi[i] > 0.0) || !std::isfinite(phi[i])) {
        throw std::invalid_argument("range parameters must be finite and positive");
      }
    }
    RangeParams p;
    p.phi_ = std::move(phi);
    return p;
  }
  static RangeParams from_xi(const Eigen::VectorXd& xi) {
    return from_phi((-xi.array()).exp().matrix());
  }
  static RangeParams constant(Eigen::Index d, double phi) {
    return from_phi(Eigen::VectorXd::Constant(d, phi));
  }

  [[nodiscard]] const Eigen::VectorXd& phi() const { return phi_; }
  [[nodiscard]] Eigen::VectorXd xi() const { return (1.0 / phi_.array()).log().matrix(); }
  [[nodiscard]] Eigen::Index size() const { return phi_.size(); }
  [[nodiscard]] double operator[](Eigen::Index i) const { return phi_[i]; }

 private:
  Eigen::VectorXd phi_;
};

namespace detail {

inline void check_distance(double h, double phi) {
  if (!std::isfinite(h) || !std::isfinite(phi)) {
    throw std::invalid_argument("correlation arguments must be finite");
  }
  if (h < 0.0 || phi <= 0.0) {
    throw std::invalid_argument("correlation requires h >= 0 and phi > 0");
  }
}

}  // namespace detail

// One-dimensional correlation r(h; phi).
template <typename Scalar>
Scalar corr1d(Scalar h, Scalar phi, const KernelSpec& spec) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  detail::check_distance(static_cast<double>(h), static_cast<double>(phi));
  const Scalar u = h / phi;
  if (spec.family == Family::PowerExponential) {
    return exp(-pow(u, Scalar(spec.shape)));
  }
  if (is_half_integer(spec.shape, 0.5)) {
    return exp(-u);
  }
  if (is_half_integer(spec.shape, 1.5)) {
    const Scalar a = sqrt(Scalar(3)) * u;
    return (Scalar(1) + a) * exp(-a);
  }
  const Scalar a = sqrt(Scalar(5)) * u;
  return (Scalar(1) + a + a * a / Scalar(3)) * exp(-a);
}

// d r(h; phi) / d phi.
template <typename Scalar>
Scalar dcorr1d_dphi(Scalar h, Scalar phi, const KernelSpec& spec) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  detail::check_distance(static_cast<double>(h), static_cast<double>(phi));
  const Scalar u = h / phi;
  if (spec.family == Family::PowerExponential) {
    const Scalar ua = pow(u, Scalar(spec.shape));
    return Scalar(spec.shape) * ua / phi * exp(-ua);
  }
  if (is_half_integer(spec.shape, 0.5)) {
    return u / phi * exp(-u);
  }
  if (is_half_integer(spec.shape, 1.5)) {
    const Scalar a = sqrt(Scalar(3)) * u;
    return Scalar(3) * u * u / phi * exp(-a);
  }
  const Scalar a = sqrt(Scalar(5)) * u;
  return Scalar(5) / Scalar(3) * u * u * (Scalar(1) + a) / phi * exp(-a);
}

namespace detail {

template <typename Derived>
void check_design(const Eigen::MatrixBase<Derived>& X, const RangeParams& params) {
  if (X.rows() < 1) throw std::invalid_argument("design must have at least one row");
  if (X.cols() != params.size()) {
    throw std::invalid_argument("design has " + std::to_string(X.cols()) + " columns but " +
                                std::to_string(params.size()) + " range parameters were given");
  }
  if (!X.allFinite()) throw std::invalid_argument("design contains non-finite entries");
}

// r(h; phi) and dr/dphi sharing one exponential; arguments already validated.
template <typename Scalar>
void corr_and_deriv(Scalar h, Scalar phi, const KernelSpec& spec, Scalar& r, Scalar& dr) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  const Scalar u = h / phi;
  if (spec.family == Family::PowerExponential) {
    const Scalar ua = pow(u, Scalar(spec.shape));
    r = exp(-ua);
    dr = Scalar(spec.shape) * ua / phi * r;
  } else if (is_half_integer(spec.shape, 0.5)) {
    r = exp(-u);
    dr = u / phi * r;
  } else if (is_half_integer(spec.shape, 1.5)) {
    const Scalar a = sqrt(Scalar(3)) * u;
    const Scalar e = exp(-a);
    r = (Scalar(1) + a) * e;
    dr = Scalar(3) * u * u / phi * e;
  } else {
    const Scalar a = sqrt(Scalar(5)) * u;
    const Scalar e = exp(-a);
    r = (Scalar(1) + a + a * a / Scalar(3)) * e;
    dr = Scalar(5) / Scalar(3) * u * u * (Scalar(1) + a) / phi * e;
  }
}

// Per-dimension correlation matrix R_l (no nugget) and, when D is given, dR_l/dphi_l.
template <typename Derived, typename Matrix>
void dimension_factors(const Eigen::MatrixBase<Derived>& X, Eigen::Index l, double phi, const KernelSpec& spec,
                       Matrix& R, Matrix* D) {
  using Scalar = typename Derived::Scalar;
  check_distance(0.0, phi);
  const Eigen::Index n = X.rows();
  R.resize(n, n);
  if (D) D->resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    R(j, j) = Scalar(1);
    if (D) (*D)(j, j) = Scalar(0);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      using std::abs;
      Scalar r, dr;
      corr_and_deriv<Scalar>(abs(X(i, l) - X(j, l)), Scalar(phi), spec, r, dr);
      R(i, j) = R(j, i) = r;
      if (D) (*D)(i, j) = (*D)(j, i) = dr;
    }
  }
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> dimension_corr(
    const Eigen::MatrixBase<Derived>& X, Eigen::Index l, double phi, const KernelSpec& spec) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> R;
  dimension_factors(X, l, phi, spec, R, static_cast<decltype(R)*>(nullptr));
  return R;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> dimension_corr_deriv(
    const Eigen::MatrixBase<Derived>& X, Eigen::Index l, double phi, const KernelSpec& spec) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> R, D;
  dimension_factors(X, l, phi, spec, R, &D);
  return D;
}

}  // namespace detail

// R_ij = prod_l r(|x_il - x_jl|; phi_l) + nugget * [i == j].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> corr_matrix(
    const Eigen::MatrixBase<Derived>& X, const RangeParams& params, const KernelSpec& spec) {
  using Scalar = typename Derived::Scalar;
  detail::check_design(X, params);
  const Eigen::Index n = X.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> R =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Ones(n, n);
  for (Eigen::Index l = 0; l < X.cols(); ++l) {
    R.array() *= detail::dimension_corr(X, l, params[l], spec).array();
  }
  R.diagonal().array() += Scalar(spec.nugget);
  return R;
}

// dR/dphi_k (k is zero-based): (dR_k/dphi_k) o prod_{l != k} R_l.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> corr_matrix_deriv(
    const Eigen::MatrixBase<Derived>& X, const RangeParams& params, const KernelSpec& spec,
    Eigen::Index k) {
  detail::check_design(X, params);
  if (k < 0 || k >= X.cols()) {
    throw std::invalid_argument("derivative dimension index out of range");
  }
  auto D = detail::dimension_corr_deriv(X, k, params[k], spec);
  for (Eigen::Index l = 0; l < X.cols(); ++l) {
    if (l != k) D.array() *= detail::dimension_corr(X, l, params[l], spec).array();
  }
  return D;
}

// All d derivative matrices at once, sharing the per-dimension factors through
// prefix/suffix Hadamard products.
template <typename Derived>
std::vector<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>
corr_matrix_derivs(const Eigen::MatrixBase<Derived>& X, const RangeParams& params,
                   const KernelSpec& spec) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  detail::check_design(X, params);
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  std::vector<Matrix> factors(d), derivs(d);
  for (Eigen::Index l = 0; l < d; ++l) detail::dimension_factors(X, l, params[l], spec, factors[l], &derivs[l]);

  // suffix[l] = prod_{m >= l} R_m
  std::vector<Matrix> suffix(d + 1);
  suffix[d] = Matrix::Ones(n, n);
  for (Eigen::Index l = d - 1; l >= 0; --l) {
    suffix[l] = (suffix[l + 1].array() * factors[l].array()).matrix();
  }
  std::vector<Matrix> out;
  out.reserve(d);
  Matrix prefix = Matrix::Ones(n, n);
  for (Eigen::Index k = 0; k < d; ++k) {
    Matrix D = std::move(derivs[k]);
    D.array() *= prefix.array() * suffix[k + 1].array();
    out.push_back(std::move(D));
    prefix.array() *= factors[k].array();
  }
  return out;
}

// Cross-correlation r(X, x0) between the rows of X and one query point (no nugget).
template <typename Derived, typename DerivedQ>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> cross_corr(
    const Eigen::MatrixBase<Derived>& X, const Eigen::MatrixBase<DerivedQ>& x0,
    const RangeParams& params, const KernelSpec& spec) {
  using Scalar = typename Derived::Scalar;
  detail::check_design(X, params);
  if (x0.size() != X.cols()) throw std::invalid_argument("query point has wrong dimension");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index l = 0; l < X.cols(); ++l) {
      using std::abs;
      r[i] *= corr1d<Scalar>(abs(X(i, l) - x0(l)), Scalar(params[l]), spec);
    }
  }
  return r;
}

// Pairwise distances of one design, stored per dimension and already raised to the power
// alpha for the power-exponential family, so repeated evaluations at new range parameters only
// pay for one exponential per pair and dimension.
class DistanceCache {
 public:
  DistanceCache(const Eigen::MatrixXd& X, const KernelSpec& spec);

  // R (nugget included) and, when dR is given, dR/dphi_k for every k.
  void correlation(const RangeParams& params, Eigen::MatrixXd& R, std::vector<Eigen::MatrixXd>* dR) const;

  [[nodiscard]] Eigen::Index rows() const { return n_; }

 private:
  KernelSpec spec_;
  Eigen::Index n_ = 0;
  std::vector<Eigen::VectorXd> dist_;  // strict lower triangle, column-major, one vector per dimension
};

}  // namespace cokrig
