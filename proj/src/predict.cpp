#include "cokrig/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "cokrig/errors.hpp"
#include "cokrig/random.hpp"

namespace cokrig {
namespace {

constexpr double kMatchTolerance = 1e-12;

// Quantities at one query point that do not depend on the lower-level value.
struct PointTerms {
  Eigen::VectorXd h;        // h_t(x0)
  Eigen::VectorXd xz;       // X_t^T R^-1 r, via the whitened design
  double c0 = 0.0;          // r(x0, x0) - r^T R^-1 r
  double r_resid = 0.0;     // r^T R^-1 (y - X b_hat)
  Eigen::Index design_row = -1;
};

void check_model(const FitResult& model, const CokrigingData& data) {
  if (model.levels.size() != data.levels.size() || data.levels.empty()) {
    throw std::invalid_argument("model and data disagree on the number of levels");
  }
}

Eigen::Index find_row(const Eigen::MatrixXd& X, const Eigen::VectorXd& x0) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (((X.row(i).transpose() - x0).cwiseAbs().array() <= kMatchTolerance).all()) return i;
  }
  return -1;
}

PointTerms point_terms(const LevelData& lvl, const LevelFit& fit, const KernelSpec& spec, const Basis& basis,
                       const Eigen::VectorXd& x0) {
  PointTerms pt;
  pt.design_row = find_row(lvl.inputs, x0);
  Eigen::VectorXd r = cross_corr(lvl.inputs, x0, fit.params, spec);
  // A coincident point shares the diagonal of R, nugget included.
  if (pt.design_row >= 0) r[pt.design_row] += spec.nugget;
  const Eigen::VectorXd z = fit.fact.chol_R.matrixL().solve(r);
  pt.h = basis.evaluate(x0.transpose()).row(0).transpose();
  pt.xz = fit.fact.whitened_design.transpose() * z;
  pt.c0 = 1.0 + spec.nugget - z.squaredNorm();
  pt.r_resid = r.dot(fit.fact.rinv_residual);
  return pt;
}

// g^T (X^T R^-1 X)^-1 g
double gls_quadratic(const LevelFit& fit, const Eigen::VectorXd& g) {
  return fit.fact.chol_xrx.matrixL().solve(g).squaredNorm();
}

Eigen::VectorXd regressors(const PointTerms& pt, double lower) {
  Eigen::VectorXd f(pt.h.size() + 1);
  f << pt.h, lower;
  return f;
}

void check_query(const CokrigingData& data, Eigen::Index cols) {
  if (cols != data.d()) {
    throw std::invalid_argument("query points have " + std::to_string(cols) + " columns, expected " +
                                std::to_string(data.d()));
  }
}

Eigen::VectorXd draw_joint(const FitResult& model, const CokrigingData& data,
                           const std::vector<PointTerms>& terms, std::mt19937_64& rng,
                           const PredictOptions& opts) {
  const std::size_t s = data.levels.size();
  Eigen::VectorXd out(s);
  for (std::size_t t = 0; t < s; ++t) {
    const auto& lvl = data.levels[t];
    const auto& fit = model.levels[t];
    const auto& pt = terms[t];
    const double df = static_cast<double>(lvl.n() - lvl.q());
    std::student_t_distribution<double> student(df);
    const double T = student(rng);
    if (opts.snap_design_points && pt.design_row >= 0) {
      out[t] = lvl.outputs[pt.design_row];
      continue;
    }
    const Eigen::VectorXd x = t == 0 ? pt.h : regressors(pt, out[t - 1]);
    const double mu = x.dot(fit.fact.b_hat) + pt.r_resid;
    const double cstar = std::max(0.0, pt.c0 + gls_quadratic(fit, x - pt.xz));
    out[t] = mu + std::sqrt(fit.fact.S2 / df * cstar) * T;
  }
  return out;
}

Eigen::MatrixXd sample_with(const FitResult& model, const CokrigingData& data, const Eigen::VectorXd& x0,
                            int n_draws, std::mt19937_64& rng, const PredictOptions& opts) {
  check_model(model, data);
  check_query(data, x0.size());
  if (n_draws < 0) throw std::invalid_argument("number of draws must be non-negative");
  std::vector<PointTerms> terms;
  for (std::size_t t = 0; t < data.levels.size(); ++t) {
    if (data.levels[t].n() - data.levels[t].q() < 1) {
      throw VarianceUndefinedError("level " + std::to_string(t + 1) + " has n_t - q_t < 1");
    }
    terms.push_back(point_terms(data.levels[t], model.levels[t], model.kernel, data.basis, x0));
  }
  Eigen::MatrixXd draws(n_draws, static_cast<Eigen::Index>(data.levels.size()));
  for (int k = 0; k < n_draws; ++k) draws.row(k) = draw_joint(model, data, terms, rng, opts).transpose();
  return draws;
}

double t_quantile(double df, double p) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

std::pair<double, double> interval_with(const FitResult& model, const CokrigingData& data,
                                        const Eigen::VectorXd& x0, std::size_t level, double prob, int n_draws,
                                        std::mt19937_64& rng, const PredictOptions& opts) {
  check_model(model, data);
  if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("interval probability must lie in (0, 1)");
  if (level >= data.levels.size()) throw std::invalid_argument("level index out of range");
  const double lo_p = 0.5 * (1.0 - prob);
  const double hi_p = 0.5 * (1.0 + prob);
  if (level == 0) {
    check_query(data, x0.size());
    const auto& lvl = data.levels[0];
    const auto& fit = model.levels[0];
    const PointTerms pt = point_terms(lvl, fit, model.kernel, data.basis, x0);
    if (opts.snap_design_points && pt.design_row >= 0) {
      const double y = lvl.outputs[pt.design_row];
      return {y, y};
    }
    const double df = static_cast<double>(lvl.n() - lvl.q());
    if (df < 1.0) throw VarianceUndefinedError("level 1 has n_t - q_t < 1");
    const double mu = pt.h.dot(fit.fact.b_hat) + pt.r_resid;
    const double scale = std::sqrt(fit.fact.S2 / df * std::max(0.0, pt.c0 + gls_quadratic(fit, pt.h - pt.xz)));
    return {mu + scale * t_quantile(df, lo_p), mu + scale * t_quantile(df, hi_p)};
  }
  if (n_draws < 2) throw std::invalid_argument("empirical intervals need at least two draws");
  const Eigen::MatrixXd draws = sample_with(model, data, x0, n_draws, rng, opts);
  const Eigen::VectorXd col = draws.col(static_cast<Eigen::Index>(level));
  std::vector<double> v(col.data(), col.data() + col.size());
  return {empirical_quantile(v, lo_p), empirical_quantile(v, hi_p)};
}

}  // namespace

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Prediction predict(const FitResult& model, const CokrigingData& data, const Eigen::MatrixXd& X0,
                   const PredictOptions& opts) {
  check_model(model, data);
  check_query(data, X0.cols());
  if (!X0.allFinite()) throw std::invalid_argument("query points contain non-finite values");
  const Eigen::Index m = X0.rows();
  const auto s = static_cast<Eigen::Index>(data.levels.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Prediction out;
  out.mean.resize(m, s);
  out.variance.resize(m, s);
  out.kriging_variance.resize(m, s);
  out.df.resize(s);
  out.at_design.resize(m, s);
  Eigen::Index first_undefined = s;
  for (Eigen::Index t = 0; t < s; ++t) {
    out.df[t] = static_cast<int>(data.levels[t].n() - data.levels[t].q());
    if (out.df[t] <= 2 && first_undefined == s) first_undefined = t;
  }
  if (first_undefined < s && !opts.allow_undefined_variance) {
    throw VarianceUndefinedError("level " + std::to_string(first_undefined + 1) +
                                 " has n_t - q_t <= 2, so the predictive variance is undefined");
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd x0 = X0.row(i).transpose();
    double prev_mean = 0.0;
    double prev_var = 0.0;
    for (Eigen::Index t = 0; t < s; ++t) {
      const auto& lvl = data.levels[t];
      const auto& fit = model.levels[t];
      const PointTerms pt = point_terms(lvl, fit, model.kernel, data.basis, x0);
      const Eigen::VectorXd f = t == 0 ? pt.h : regressors(pt, prev_mean);
      const double df = out.df[t];
      double mean = f.dot(fit.fact.b_hat) + pt.r_resid;
      double kriging = nan;
      double var = nan;
      if (t < first_undefined) {
        const double factor = fit.fact.S2 / (df - 2.0);
        const double base = pt.c0 + gls_quadratic(fit, f - pt.xz);
        kriging = std::max(0.0, factor * base);
        var = factor * base;
        if (t > 0) {
          const double gamma = fit.fact.b_hat[fit.fact.b_hat.size() - 1];
          var += gamma * gamma * prev_var + factor * prev_var / *fit.fact.lower_schur;
        }
        var = std::max(0.0, var);
      }
      out.at_design(i, t) = pt.design_row >= 0;
      if (opts.snap_design_points && pt.design_row >= 0) {
        mean = lvl.outputs[pt.design_row];
        if (t < first_undefined) var = kriging = 0.0;
      }
      out.mean(i, t) = mean;
      out.variance(i, t) = var;
      out.kriging_variance(i, t) = kriging;
      prev_mean = mean;
      prev_var = var;
    }
  }
  return out;
}

Eigen::MatrixXd sample_predictive(const FitResult& model, const CokrigingData& data, const Eigen::VectorXd& x0,
                                  int n_draws, std::uint64_t seed, const PredictOptions& opts) {
  auto rng = make_stream(seed, {});
  return sample_with(model, data, x0, n_draws, rng, opts);
}

std::pair<double, double> credible_interval(const FitResult& model, const CokrigingData& data,
                                            const Eigen::VectorXd& x0, std::size_t level, double prob,
                                            int n_draws, std::uint64_t seed, const PredictOptions& opts) {
  auto rng = make_stream(seed, {});
  return interval_with(model, data, x0, level, prob, n_draws, rng, opts);
}

Intervals credible_intervals(const FitResult& model, const CokrigingData& data, const Eigen::MatrixXd& X0,
                             double prob, int n_draws, std::uint64_t seed, const PredictOptions& opts) {
  check_model(model, data);
  check_query(data, X0.cols());
  const auto s = static_cast<Eigen::Index>(data.levels.size());
  Intervals out;
  out.lower.resize(X0.rows(), s);
  out.upper.resize(X0.rows(), s);
  for (Eigen::Index i = 0; i < X0.rows(); ++i) {
    const Eigen::VectorXd x0 = X0.row(i).transpose();
    const auto lvl1 = credible_interval(model, data, x0, 0, prob, n_draws, seed, opts);
    out.lower(i, 0) = lvl1.first;
    out.upper(i, 0) = lvl1.second;
    if (s == 1) continue;
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("interval probability must lie in (0, 1)");
    if (n_draws < 2) throw std::invalid_argument("empirical intervals need at least two draws");
    auto rng = make_stream(seed, {static_cast<std::uint32_t>(i)});
    const Eigen::MatrixXd draws = sample_with(model, data, x0, n_draws, rng, opts);
    for (Eigen::Index t = 1; t < s; ++t) {
      const Eigen::VectorXd col = draws.col(t);
      std::vector<double> v(col.data(), col.data() + col.size());
      out.lower(i, t) = empirical_quantile(v, 0.5 * (1.0 - prob));
      out.upper(i, t) = empirical_quantile(v, 0.5 * (1.0 + prob));
    }
  }
  return out;
}

}  // namespace cokrig
