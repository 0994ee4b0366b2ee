#include "cokrig/estimate.hpp"

#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>

#include "cokrig/errors.hpp"
#include "cokrig/nelder_mead.hpp"
#include "cokrig/random.hpp"

namespace cokrig {

Eigen::MatrixXd Basis::evaluate(const Eigen::MatrixXd& X) const {
  if (kind == BasisKind::Constant) return Eigen::MatrixXd::Ones(X.rows(), 1);
  Eigen::MatrixXd H(X.rows(), X.cols() + 1);
  H << Eigen::VectorXd::Ones(X.rows()), X;
  return H;
}

std::string to_string(BasisKind kind) { return kind == BasisKind::Constant ? "constant" : "linear"; }

BasisKind parse_basis(const std::string& text) {
  if (text == "constant") return BasisKind::Constant;
  if (text == "linear") return BasisKind::Linear;
  throw std::invalid_argument("unknown basis '" + text + "'");
}

std::string to_string(Estimator e) { return e == Estimator::Posterior ? "posterior" : "plugin-mle"; }

namespace {

constexpr double kMatchTolerance = 1e-12;

bool rows_match(const Eigen::MatrixXd& A, Eigen::Index i, const Eigen::MatrixXd& B, Eigen::Index j) {
  return ((A.row(i) - B.row(j)).cwiseAbs().array() <= kMatchTolerance).all();
}

std::string describe_row(const Eigen::MatrixXd& X, Eigen::Index i) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index l = 0; l < X.cols(); ++l) os << (l ? ", " : "") << X(i, l);
  os << ")";
  return os.str();
}

struct FailureLog {
  int count = 0;
  std::string last;
};

// Everything about one level's objective that does not depend on phi.
struct ObjectiveContext {
  const LevelData& data;
  DistanceCache distances;
  PriorSpec prior;
  Estimator estimator;
  double a_t;

  ObjectiveContext(const LevelData& d, const KernelSpec& spec, const PriorSpec& p, Estimator e)
      : data(d),
        distances(d.inputs, spec),
        prior(p.kind == PriorKind::JointlyRobust ? p.resolved_for(d.inputs) : p),
        estimator(e),
        a_t(p.exponent(d.q())) {}
};

double crl_value(const LevelData& data, const LevelFactorization& fact) {
  const double df = static_cast<double>(data.n() - data.q());
  if (df < 1.0) throw std::invalid_argument("concentrated likelihood requires n_t - q_t >= 1");
  if (fact.residual_vanishes()) throw DegenerateDataError("S^2 vanished at level " + std::to_string(data.t));
  return -0.5 * fact.logdet_R - 0.5 * df * std::log(fact.S2);
}

double evaluate(const ObjectiveContext& ctx, const Eigen::VectorXd& xi, FailureLog& log) {
  try {
    if (!xi.allFinite()) throw std::invalid_argument("non-finite xi");
    const RangeParams params = RangeParams::from_xi(xi);
    const bool derivs = ctx.estimator == Estimator::Posterior && prior_uses_derivatives(ctx.prior.kind);
    Eigen::MatrixXd R;
    std::vector<Eigen::MatrixXd> dR;
    ctx.distances.correlation(params, R, derivs ? &dR : nullptr);
    const LevelFactorization fact = gls_fit(ctx.data, params, R);
    double value;
    if (ctx.estimator == Estimator::PluginMle) {
      value = crl_value(ctx.data, fact);
    } else {
      value = integrated_log_likelihood(fact, ctx.data, ctx.a_t) + log_prior(ctx.data, fact, ctx.prior, dR) +
              params.phi().array().log().sum();
    }
    if (!std::isfinite(value)) throw std::runtime_error("objective is not finite");
    return value;
  } catch (const std::exception& e) {
    ++log.count;
    log.last = e.what();
    return kObjectiveSentinel;
  }
}

struct StartOutcome {
  NelderMeadResult result;
  FailureLog failures;
};

}  // namespace

CokrigingData assemble(const std::vector<LevelSamples>& raw_levels, Basis basis) {
  if (raw_levels.empty()) throw std::invalid_argument("at least one level is required");
  const Eigen::Index d = raw_levels.front().inputs.cols();
  if (d < 1) throw std::invalid_argument("inputs must have at least one column");
  CokrigingData out;
  out.basis = basis;
  for (std::size_t k = 0; k < raw_levels.size(); ++k) {
    const auto& lvl = raw_levels[k];
    const int t = static_cast<int>(k) + 1;
    if (lvl.inputs.cols() != d) {
      throw std::invalid_argument("level " + std::to_string(t) + " has " + std::to_string(lvl.inputs.cols()) +
                                  " input columns, expected " + std::to_string(d));
    }
    if (lvl.inputs.rows() != lvl.outputs.size()) {
      throw std::invalid_argument("level " + std::to_string(t) + " has mismatched inputs and outputs");
    }
    for (Eigen::Index i = 0; i < lvl.inputs.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (rows_match(lvl.inputs, i, lvl.inputs, j)) {
          throw NestingError("level " + std::to_string(t) + " contains duplicate input rows " + std::to_string(j) +
                             " and " + std::to_string(i));
        }
      }
    }
    std::optional<Eigen::VectorXd> lower;
    if (k > 0) {
      const auto& prev = raw_levels[k - 1];
      Eigen::VectorXd W(lvl.inputs.rows());
      for (Eigen::Index i = 0; i < lvl.inputs.rows(); ++i) {
        Eigen::Index match = -1;
        for (Eigen::Index j = 0; j < prev.inputs.rows(); ++j) {
          if (rows_match(lvl.inputs, i, prev.inputs, j)) {
            match = j;
            break;
          }
        }
        if (match < 0) {
          throw NestingError("design is not nested: row " + std::to_string(i) + " " + describe_row(lvl.inputs, i) +
                             " of level " + std::to_string(t) + " does not appear in level " + std::to_string(t - 1));
        }
        W[i] = prev.outputs[match];
      }
      lower = std::move(W);
    }
    out.levels.push_back(LevelData::make(t, lvl.inputs, lvl.outputs, basis.evaluate(lvl.inputs), std::move(lower)));
  }
  return out;
}

double objective(const LevelData& data, const Eigen::VectorXd& xi, const KernelSpec& spec, const PriorSpec& prior) {
  FailureLog log;
  const ObjectiveContext ctx(data, spec, prior, Estimator::Posterior);
  return evaluate(ctx, xi, log);
}

double concentrated_restricted_likelihood(const LevelData& data, const RangeParams& params,
                                          const KernelSpec& spec) {
  return crl_value(data, gls_fit(data, params, spec));
}

LevelFit fit_level(const LevelData& data, const KernelSpec& spec, const PriorSpec& prior, const OptimOptions& opts,
                   Estimator estimator) {
  validate(spec);
  if (data.n() - data.q() < 2) {
    throw std::invalid_argument("level " + std::to_string(data.t) + " needs n_t - q_t >= 2 to be estimated");
  }
  if (opts.n_starts < 1) throw std::invalid_argument("at least one optimizer start is required");
  const Eigen::Index d = data.d();

  NelderMeadOptions nm;
  nm.ftol = opts.tolerance;
  nm.max_evals = opts.max_evals > 0 ? opts.max_evals : static_cast<int>(500 * (d + 1));
  nm.lower = opts.xi_lower;
  nm.upper = opts.xi_upper;
  nm.initial_step = opts.initial_step;

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(d));
  for (int k = 1; k < opts.n_starts; ++k) {
    auto rng = make_stream(opts.seed, {static_cast<std::uint32_t>(data.t), static_cast<std::uint32_t>(k)});
    std::uniform_real_distribution<double> unif(-opts.start_box, opts.start_box);
    Eigen::VectorXd x(d);
    for (Eigen::Index l = 0; l < d; ++l) x[l] = unif(rng);
    starts.push_back(x);
  }

  const ObjectiveContext ctx(data, spec, prior, estimator);
  auto run = [&](const Eigen::VectorXd& x0) {
    StartOutcome out;
    out.result = nelder_mead_maximize(
        [&](const Eigen::VectorXd& xi) { return evaluate(ctx, xi, out.failures); }, x0, nm);
    return out;
  };

  std::vector<StartOutcome> outcomes;
  if (opts.parallel && starts.size() > 1) {
    std::vector<std::future<StartOutcome>> futures;
    for (const auto& x0 : starts) futures.push_back(std::async(std::launch::async, run, x0));
    for (auto& fut : futures) outcomes.push_back(fut.get());
  } else {
    for (const auto& x0 : starts) outcomes.push_back(run(x0));
  }

  OptimDiagnostics diag;
  diag.restarts = static_cast<int>(starts.size());
  int best = -1;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    diag.evaluations += o.result.evaluations;
    diag.failed_evaluations += o.failures.count;
    if (!o.failures.last.empty()) diag.last_failure = o.failures.last;
    if (!(o.result.value > kObjectiveSentinel)) {
      ++diag.failed_starts;
      continue;
    }
    if (best < 0 || o.result.value > outcomes[best].result.value) best = static_cast<int>(k);
  }
  if (best < 0) {
    throw EstimationError("all " + std::to_string(starts.size()) + " optimizer starts failed at level " +
                          std::to_string(data.t) + (diag.last_failure.empty() ? "" : ": " + diag.last_failure));
  }
  const auto& winner = outcomes[best].result;
  diag.best_start = best;
  diag.iterations = winner.iterations;
  diag.converged = winner.converged;
  diag.objective = winner.value;

  LevelFit lf;
  lf.params = RangeParams::from_xi(winner.x);
  lf.fact = gls_fit(data, lf.params, spec);
  const LocationScale ls = location_scale_estimates(lf.fact, data);
  lf.b_hat = ls.b_hat;
  lf.sigma2_hat = ls.sigma2_hat;
  lf.diagnostics = diag;
  return lf;
}

FitResult fit(const CokrigingData& data, const KernelSpec& spec, const PriorSpec& prior, const OptimOptions& opts,
              Estimator estimator) {
  if (data.levels.empty()) throw std::invalid_argument("no levels to fit");
  FitResult out;
  out.kernel = spec;
  out.prior = prior;
  out.estimator = estimator;
  if (estimator == Estimator::PluginMle) out.parameterization = "xi=log(1/phi); objective is the likelihood (no Jacobian)";

  std::vector<std::future<LevelFit>> futures;
  const auto policy = opts.parallel ? std::launch::async : std::launch::deferred;
  for (const auto& lvl : data.levels) {
    futures.push_back(std::async(policy, [&, lvl_ptr = &lvl] { return fit_level(*lvl_ptr, spec, prior, opts, estimator); }));
  }
  std::string failures;
  for (std::size_t t = 0; t < futures.size(); ++t) {
    try {
      out.levels.push_back(futures[t].get());
    } catch (const std::exception& e) {
      failures += (failures.empty() ? "" : "; ") + std::string("level ") + std::to_string(t + 1) + ": " + e.what();
    }
  }
  if (!failures.empty()) throw EstimationError("estimation failed (" + failures + ")");
  return out;
}

FitResult fit_fixed(const CokrigingData& data, const KernelSpec& spec, const PriorSpec& prior,
                    const std::vector<RangeParams>& params, Estimator estimator) {
  if (params.size() != data.levels.size()) throw std::invalid_argument("one set of range parameters per level");
  validate(spec);
  FitResult out;
  out.kernel = spec;
  out.prior = prior;
  out.estimator = estimator;
  for (std::size_t t = 0; t < params.size(); ++t) {
    LevelFit lf;
    lf.params = params[t];
    lf.fact = gls_fit(data.levels[t], params[t], spec);
    const LocationScale ls = location_scale_estimates(lf.fact, data.levels[t]);
    lf.b_hat = ls.b_hat;
    lf.sigma2_hat = ls.sigma2_hat;
    out.levels.push_back(std::move(lf));
  }
  return out;
}

}  // namespace cokrig
