#include "cokrig/bench.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "cokrig/errors.hpp"
#include "cokrig/io.hpp"
#include "cokrig/predict.hpp"
#include "cokrig/random.hpp"

namespace cokrig {
namespace {

constexpr const char* kNames[8] = {"r_w", "r", "T_u", "H_u", "T_l", "H_l", "L", "K_w"};

void check_box(const BoreholeInput& x) {
  const Eigen::VectorXd v = x.to_vector();
  const auto& box = BoreholeInput::box();
  for (int i = 0; i < 8; ++i) {
    const double slack = 1e-12 * (box(i, 1) - box(i, 0));
    if (!(v[i] >= box(i, 0) - slack && v[i] <= box(i, 1) + slack)) {
      throw std::domain_error(std::string("borehole input ") + kNames[i] + " = " + format_double(v[i]) +
                              " lies outside [" + format_double(box(i, 0)) + ", " + format_double(box(i, 1)) +
                              "]");
    }
  }
}

double borehole(const BoreholeInput& x, double lead, double offset) {
  check_box(x);
  return detail::borehole_formula(x, lead, offset);
}

std::uint64_t derived_seed(std::uint64_t seed, int replicate, std::uint32_t purpose) {
  auto rng = make_stream(seed, {static_cast<std::uint32_t>(replicate), purpose});
  return rng();
}

}  // namespace

double detail::borehole_formula(const BoreholeInput& x, double lead, double offset) {
  const double log_ratio = std::log(x.r / x.r_w);
  const double denom =
      log_ratio * (offset + 2.0 * x.L * x.T_u / (log_ratio * x.r_w * x.r_w * x.K_w) + x.T_u / x.T_l);
  return lead * x.T_u * (x.H_u - x.H_l) / denom;
}

const Eigen::Matrix<double, 8, 2>& BoreholeInput::box() {
  static const Eigen::Matrix<double, 8, 2> b = [] {
    Eigen::Matrix<double, 8, 2> m;
    m << 0.05, 0.15,  //
        100.0, 50000.0,  //
        63070.0, 115600.0,  //
        990.0, 1110.0,  //
        63.1, 116.0,  //
        700.0, 820.0,  //
        1120.0, 1680.0,  //
        9855.0, 12045.0;
    return m;
  }();
  return b;
}

BoreholeInput BoreholeInput::from_unit(const Eigen::VectorXd& u) {
  if (u.size() != dimension) throw std::invalid_argument("borehole inputs have 8 coordinates");
  if (!u.allFinite() || (u.array() < 0.0).any() || (u.array() > 1.0).any()) {
    throw std::domain_error("unit-scaled borehole inputs must lie in [0, 1]");
  }
  const auto& b = box();
  const Eigen::VectorXd v = b.col(0) + u.cwiseProduct(b.col(1) - b.col(0));
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

Eigen::VectorXd BoreholeInput::to_vector() const {
  Eigen::VectorXd v(8);
  v << r_w, r, T_u, H_u, T_l, H_l, L, K_w;
  return v;
}

double borehole_high(const BoreholeInput& x) { return borehole(x, 2.0 * M_PI, 1.0); }

double borehole_low(const BoreholeInput& x) { return borehole(x, 5.0, 1.5); }

Eigen::MatrixXd lhs_design(int n, int d, std::mt19937_64& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("Latin hypercube needs n >= 1 and d >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd U(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) U(i, j) = (perm[i] + unif(rng)) / n;
  }
  return U;
}

Eigen::MatrixXd lhs_design(int n, int d, std::uint64_t seed) {
  auto rng = make_stream(seed, {});
  return lhs_design(n, d, rng);
}

Metrics prediction_metrics(const Eigen::VectorXd& truth, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  const Eigen::Index m = truth.size();
  if (mean.size() != m || lower.size() != m || upper.size() != m) {
    throw std::invalid_argument("metric inputs disagree in length");
  }
  Metrics out;
  if (m == 0) {
    out.cvg95 = 1.0;
    return out;
  }
  out.rmspe = std::sqrt((mean - truth).squaredNorm() / static_cast<double>(m));
  int covered = 0;
  for (Eigen::Index i = 0; i < m; ++i) covered += (truth[i] >= lower[i] && truth[i] <= upper[i]) ? 1 : 0;
  out.cvg95 = static_cast<double>(covered) / static_cast<double>(m);
  out.alci95 = (upper - lower).mean();
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size() / 2;
  return values.size() % 2 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

ReplicateResult run_borehole_replicate(const BenchmarkConfig& config, int replicate) {
  ReplicateResult res;
  res.replicate = replicate;
  try {
    if (config.n_high > config.n_low) throw std::invalid_argument("n_high must not exceed n_low");
    if (config.n_high < 1 || config.n_test < 1) throw std::invalid_argument("n_high and n_test must be positive");
    const int n_total = config.n_low + config.n_test;
    auto design_rng = make_stream(config.seed, {static_cast<std::uint32_t>(replicate), 0u});
    const Eigen::MatrixXd U = lhs_design(n_total, BoreholeInput::dimension, design_rng);

    auto split_rng = make_stream(config.seed, {static_cast<std::uint32_t>(replicate), 1u});
    std::vector<int> order(n_total);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), split_rng);
    std::vector<int> test(order.begin(), order.begin() + config.n_test);
    std::vector<int> train(order.begin() + config.n_test, order.end());
    std::vector<int> high = train;
    std::shuffle(high.begin(), high.end(), split_rng);
    high.resize(config.n_high);

    auto take = [&](const std::vector<int>& idx, bool high_fidelity) {
      LevelSamples out;
      out.inputs.resize(static_cast<Eigen::Index>(idx.size()), BoreholeInput::dimension);
      out.outputs.resize(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Eigen::VectorXd u = U.row(idx[k]).transpose();
        const BoreholeInput x = BoreholeInput::from_unit(u);
        out.inputs.row(static_cast<Eigen::Index>(k)) = u.transpose();
        out.outputs[static_cast<Eigen::Index>(k)] = high_fidelity ? borehole_high(x) : borehole_low(x);
      }
      return out;
    };
    const LevelSamples low = take(train, false);
    const LevelSamples hi = take(high, true);
    const LevelSamples truth = take(test, true);

    const CokrigingData data = assemble({low, hi}, config.basis);
    OptimOptions optim = config.optim;
    optim.seed = derived_seed(config.seed, replicate, 2u);
    const FitResult model = fit(data, config.kernel, config.prior, optim, config.estimator);

    const Prediction pred = predict(model, data, truth.inputs);
    const Intervals ci = credible_intervals(model, data, truth.inputs, config.interval_prob, config.interval_draws,
                                            derived_seed(config.seed, replicate, 3u));
    const Eigen::Index top = pred.mean.cols() - 1;
    res.metrics = prediction_metrics(truth.outputs, pred.mean.col(top), ci.lower.col(top), ci.upper.col(top));
    for (std::size_t t = 0; t < model.levels.size(); ++t) {
      const auto& lf = model.levels[t];
      res.phi_hat.push_back(lf.params.phi());
      if (t > 0) res.gamma_hat.push_back(lf.b_hat[lf.b_hat.size() - 1]);
      const Eigen::VectorXd xi = lf.params.xi();
      const double tol = 1e-6;
      if ((xi.array() <= optim.xi_lower + tol).any() || (xi.array() >= optim.xi_upper - tol).any()) {
        res.edge_phi = true;
      }
    }
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

BenchmarkReport run_borehole_benchmark(const BenchmarkConfig& config) {
  if (config.n_reps < 1) throw std::invalid_argument("at least one replicate is required");
  if (config.n_high > config.n_low) throw std::invalid_argument("n_high must not exceed n_low");
  BenchmarkReport report;
  report.config = config;
  if (config.parallel) {
    std::vector<std::future<ReplicateResult>> futures;
    for (int r = 0; r < config.n_reps; ++r) {
      futures.push_back(std::async(std::launch::async, run_borehole_replicate, std::cref(config), r));
    }
    for (auto& f : futures) report.replicates.push_back(f.get());
  } else {
    for (int r = 0; r < config.n_reps; ++r) report.replicates.push_back(run_borehole_replicate(config, r));
  }

  std::vector<double> rmspe, cvg, alci;
  int edges = 0;
  for (const auto& rep : report.replicates) {
    if (!rep.ok) {
      ++report.failed;
      continue;
    }
    rmspe.push_back(rep.metrics.rmspe);
    cvg.push_back(rep.metrics.cvg95);
    alci.push_back(rep.metrics.alci95);
    edges += rep.edge_phi ? 1 : 0;
  }
  if (report.failed > 0) {
    if (5 * report.failed >= config.n_reps) {
      std::string first;
      for (const auto& rep : report.replicates) {
        if (!rep.ok) {
          first = rep.error;
          break;
        }
      }
      throw BenchmarkError(std::to_string(report.failed) + " of " + std::to_string(config.n_reps) +
                           " replicates failed (first: " + first + ")");
    }
    report.warnings.push_back(std::to_string(report.failed) + " replicate(s) failed and were excluded");
  }
  report.median = {median(rmspe), median(cvg), median(alci)};
  report.edge_fraction = static_cast<double>(edges) / static_cast<double>(rmspe.size());
  return report;
}

std::string report_json(const BenchmarkReport& report) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["config"] = benchmark_config_to_json(report.config);
  j["seed"] = report.config.seed;
  j["median"] = {{"rmspe", report.median.rmspe}, {"cvg95", report.median.cvg95}, {"alci95", report.median.alci95}};
  j["failed"] = report.failed;
  j["edge_fraction"] = report.edge_fraction;
  j["warnings"] = report.warnings;
  json reps = json::array();
  for (const auto& rep : report.replicates) {
    json r;
    r["replicate"] = rep.replicate;
    r["ok"] = rep.ok;
    r["error"] = rep.error;
    r["rmspe"] = rep.metrics.rmspe;
    r["cvg95"] = rep.metrics.cvg95;
    r["alci95"] = rep.metrics.alci95;
    json phis = json::array();
    for (const auto& p : rep.phi_hat) phis.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    r["phi_hat"] = phis;
    r["gamma_hat"] = rep.gamma_hat;
    r["edge_phi"] = rep.edge_phi;
    reps.push_back(r);
  }
  j["replicates"] = reps;
  return j.dump(2) + "\n";
}

void write_replicates_csv(std::ostream& os, const BenchmarkReport& report) {
  os << "replicate,ok,rmspe,cvg95,alci95,gamma_hat,edge_phi,error\n";
  for (const auto& rep : report.replicates) {
    std::string error = rep.error;
    std::replace(error.begin(), error.end(), '"', '\'');
    os << rep.replicate << ',' << (rep.ok ? 1 : 0) << ',' << format_double(rep.metrics.rmspe) << ','
       << format_double(rep.metrics.cvg95) << ',' << format_double(rep.metrics.alci95) << ','
       << (rep.gamma_hat.empty() ? std::string() : format_double(rep.gamma_hat.back())) << ','
       << (rep.edge_phi ? 1 : 0) << ",\"" << error << "\"\n";
  }
}

}  // namespace cokrig
