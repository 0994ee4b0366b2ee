#include "cokrig/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace cokrig {

namespace {

// Shortest decimal that parses back to v.
std::string shortest(double v) {
  char buf[32];
  for (int digits = 1; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

std::string to_string(const KernelSpec& spec) {
  if (spec.family == Family::PowerExponential) return "powexp-" + shortest(spec.shape);
  if (is_half_integer(spec.shape, 0.5)) return "matern-1/2";
  if (is_half_integer(spec.shape, 1.5)) return "matern-3/2";
  if (is_half_integer(spec.shape, 2.5)) return "matern-5/2";
  return "matern-" + shortest(spec.shape);
}

KernelSpec parse_kernel(const std::string& text, double nugget) {
  KernelSpec spec;
  if (text == "powexp" || text == "power-exponential") {
    spec = KernelSpec::power_exponential(1.9, nugget);
  } else if (text.rfind("powexp-", 0) == 0) {
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(text.substr(7), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse kernel '" + text + "'");
    }
    if (used != text.size() - 7) throw std::invalid_argument("cannot parse kernel '" + text + "'");
    spec = KernelSpec::power_exponential(alpha, nugget);
  } else if (text == "matern-1/2" || text == "matern-0.5" || text == "exponential") {
    spec = KernelSpec::matern(0.5, nugget);
  } else if (text == "matern-3/2" || text == "matern-1.5") {
    spec = KernelSpec::matern(1.5, nugget);
  } else if (text == "matern-5/2" || text == "matern-2.5" || text == "matern") {
    spec = KernelSpec::matern(2.5, nugget);
  } else {
    throw std::invalid_argument("unknown kernel '" + text +
                                "' (expected powexp[-alpha], matern-1/2, matern-3/2 or matern-5/2)");
  }
  validate(spec);
  return spec;
}

DistanceCache::DistanceCache(const Eigen::MatrixXd& X, const KernelSpec& spec) : spec_(spec), n_(X.rows()) {
  validate(spec);
  if (X.rows() < 1 || !X.allFinite()) throw std::invalid_argument("design must be non-empty and finite");
  const Eigen::Index pairs = n_ * (n_ - 1) / 2;
  for (Eigen::Index l = 0; l < X.cols(); ++l) {
    Eigen::VectorXd v(pairs);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index i = j + 1; i < n_; ++i) {
        const double h = std::abs(X(i, l) - X(j, l));
        v[k++] = spec.family == Family::PowerExponential ? std::pow(h, spec.shape) : h;
      }
    }
    dist_.push_back(std::move(v));
  }
}

void DistanceCache::correlation(const RangeParams& params, Eigen::MatrixXd& R,
                                std::vector<Eigen::MatrixXd>* dR) const {
  const auto d = static_cast<Eigen::Index>(dist_.size());
  if (params.size() != d) throw std::invalid_argument("range parameters do not match the design dimension");
  for (Eigen::Index l = 0; l < d; ++l) detail::check_distance(0.0, params[l]);

  const bool powexp = spec_.family == Family::PowerExponential;
  const double alpha = spec_.shape;
  const double root = is_half_integer(spec_.shape, 1.5) ? std::sqrt(3.0) : std::sqrt(5.0);
  const bool half = spec_.family == Family::Matern && is_half_integer(spec_.shape, 0.5);
  const bool three_halves = spec_.family == Family::Matern && is_half_integer(spec_.shape, 1.5);

  // Per-dimension factors over the strict lower triangle.
  std::vector<Eigen::VectorXd> F(d), D(dR ? d : 0);
  for (Eigen::Index l = 0; l < d; ++l) {
    const double phi = params[l];
    const Eigen::VectorXd& t = dist_[l];
    if (powexp) {
      const Eigen::ArrayXd ua = t.array() * std::pow(phi, -alpha);
      F[l] = (-ua).exp().matrix();
      if (dR) D[l] = (alpha / phi * ua * F[l].array()).matrix();
    } else {
      const Eigen::ArrayXd u = t.array() / phi;
      if (half) {
        F[l] = (-u).exp().matrix();
        if (dR) D[l] = (u / phi * F[l].array()).matrix();
      } else {
        const Eigen::ArrayXd a = root * u;
        const Eigen::ArrayXd e = (-a).exp();
        if (three_halves) {
          F[l] = ((1.0 + a) * e).matrix();
          if (dR) D[l] = (3.0 * u.square() / phi * e).matrix();
        } else {
          F[l] = ((1.0 + a + a.square() / 3.0) * e).matrix();
          if (dR) D[l] = (5.0 / 3.0 * u.square() * (1.0 + a) / phi * e).matrix();
        }
      }
    }
  }

  auto unpack = [&](const Eigen::VectorXd& v, Eigen::MatrixXd& M, double diag) {
    M.resize(n_, n_);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      M(j, j) = diag;
      for (Eigen::Index i = j + 1; i < n_; ++i) M(i, j) = M(j, i) = v[k++];
    }
  };

  const Eigen::Index pairs = n_ * (n_ - 1) / 2;
  Eigen::VectorXd prod = Eigen::VectorXd::Ones(pairs);
  if (!dR) {
    for (const auto& f : F) prod.array() *= f.array();
    unpack(prod, R, 1.0 + spec_.nugget);
    return;
  }
  std::vector<Eigen::VectorXd> suffix(d + 1);
  suffix[d] = Eigen::VectorXd::Ones(pairs);
  for (Eigen::Index l = d - 1; l >= 0; --l) suffix[l] = (suffix[l + 1].array() * F[l].array()).matrix();
  unpack(suffix[0], R, 1.0 + spec_.nugget);
  dR->resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::VectorXd v = (D[k].array() * prod.array() * suffix[k + 1].array()).matrix();
    unpack(v, (*dR)[k], 0.0);
    prod.array() *= F[k].array();
  }
}

}  // namespace cokrig
