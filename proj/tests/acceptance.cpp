// Acceptance suite: one PASS/FAIL line per criterion. `acceptance k` runs criterion k alone,
// no argument runs all of them. The exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>
#include <sys/wait.h>

#include <boost/math/distributions/students_t.hpp>

#include "cokrig/bench.hpp"
#include "cokrig/estimate.hpp"
#include "cokrig/io.hpp"
#include "cokrig/predict.hpp"
#include "cokrig/priors.hpp"
#include "cokrig/random.hpp"
#include "oracles.hpp"

using namespace cokrig;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double f_low(const Eigen::VectorXd& x) { return std::sin(6.0 * x[0]) + 0.5 * std::cos(3.0 * x[1]) + x[1]; }
double f_mid(const Eigen::VectorXd& x) { return 1.4 * f_low(x) + 0.3 * x[0] * x[0]; }
double f_high(const Eigen::VectorXd& x) { return 0.9 * f_mid(x) - 0.2 * std::sin(5.0 * x[1]); }

// Nested LHS designs: level t keeps the first n_t rows of level t - 1.
CokrigingData nested_instance(const std::vector<int>& n, std::uint64_t seed) {
  const Eigen::MatrixXd X = lhs_design(n.front(), 2, seed);
  double (*fs_[3])(const Eigen::VectorXd&) = {f_low, f_mid, f_high};
  std::vector<LevelSamples> raw;
  for (std::size_t t = 0; t < n.size(); ++t) {
    LevelSamples s{X.topRows(n[t]), Eigen::VectorXd(n[t])};
    for (int i = 0; i < n[t]; ++i) s.outputs[i] = fs_[t](s.inputs.row(i).transpose());
    raw.push_back(std::move(s));
  }
  return assemble(raw);
}

// Closed-form predictive moments against sampler moments.
Outcome criterion1() {
  Outcome out;
  const auto start = Clock::now();
  const CokrigingData data = nested_instance({10, 6}, 101);
  OptimOptions opts;
  opts.seed = 7;
  const FitResult model = fit(data, KernelSpec::matern(2.5), PriorSpec{}, opts);
  auto rng = make_stream(55, {});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd X0(10, 2);
  for (Eigen::Index i = 0; i < X0.size(); ++i) X0.data()[i] = unif(rng);
  const Prediction pred = predict(model, data, X0);

  const int N = 200000;
  double worst_mean = 0.0, worst_var = 0.0;
  for (Eigen::Index i = 0; i < X0.rows(); ++i) {
    const Eigen::MatrixXd draws = sample_predictive(model, data, X0.row(i).transpose(), N, 1000 + i);
    for (Eigen::Index t = 0; t < draws.cols(); ++t) {
      const Eigen::ArrayXd y = draws.col(t).array();
      const double m = y.mean();
      const Eigen::ArrayXd c = y - m;
      const double m2 = c.square().mean();
      const double m4 = c.square().square().mean();
      const double var = m2 * N / (N - 1.0);
      const double se_mean = std::sqrt(m2 / N);
      const double se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / N);
      const double z_mean = std::abs(m - pred.mean(i, t)) / se_mean;
      const double z_var = std::abs(var - pred.variance(i, t)) / se_var;
      worst_mean = std::max(worst_mean, z_mean);
      worst_var = std::max(worst_var, z_var);
    }
  }
  const double secs = seconds_since(start);
  out.require(worst_mean < 4.0, "mean off by " + fmt("%.2f", worst_mean) + " SE");
  out.require(worst_var < 4.0, "variance off by " + fmt("%.2f", worst_var) + " SE");
  out.require(secs < 60.0, "took " + fmt("%.1f", secs) + " s");
  out.detail = "max |z| mean " + fmt("%.2f", worst_mean) + ", variance " + fmt("%.2f", worst_var) + ", " +
               fmt("%.1f", secs) + " s" + (out.pass ? "" : " | " + out.detail);
  return out;
}

// Interpolation at design points and variance dominance over single-level kriging.
Outcome criterion2() {
  Outcome out;
  const auto start = Clock::now();
  PredictOptions raw;
  raw.snap_design_points = false;
  double worst_err = 0.0, worst_var = 0.0, worst_gap = 0.0;
  int checked = 0;
  for (const auto& sizes : {std::vector<int>{10, 6}, std::vector<int>{12, 8, 5}}) {
    const CokrigingData data = nested_instance(sizes, 202 + sizes.size());
    OptimOptions opts;
    opts.seed = 3;
    const FitResult model = fit(data, KernelSpec::matern(2.5), PriorSpec{}, opts);
    for (std::size_t t = 0; t < data.s(); ++t) {
      const LevelData& lvl = data.levels[t];
      const Prediction p = predict(model, data, lvl.inputs, raw);
      for (Eigen::Index i = 0; i < lvl.n(); ++i) {
        worst_err = std::max(worst_err, std::abs(p.mean(i, t) - lvl.outputs[i]));
        worst_var = std::max(worst_var, p.variance(i, t));
        ++checked;
      }
    }
    auto rng = make_stream(77, {static_cast<std::uint32_t>(sizes.size())});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd X0(50, 2);
    for (Eigen::Index i = 0; i < X0.size(); ++i) X0.data()[i] = unif(rng);
    const Prediction p = predict(model, data, X0, raw);
    for (Eigen::Index i = 0; i < X0.rows(); ++i) {
      for (Eigen::Index t = 0; t < p.variance.cols(); ++t) {
        worst_gap = std::max(worst_gap, p.kriging_variance(i, t) - p.variance(i, t));
      }
    }
  }
  const double secs = seconds_since(start);
  out.require(worst_err < 1e-6, "design error " + fmt("%.3g", worst_err));
  out.require(worst_var < 1e-8, "design variance " + fmt("%.3g", worst_var));
  out.require(worst_gap <= 1e-8, "kriging variance exceeds by " + fmt("%.3g", worst_gap));
  out.require(secs < 10.0, "took " + fmt("%.1f", secs) + " s");
  out.detail = std::to_string(checked) + " design points, max |err| " + fmt("%.2g", worst_err) + ", max var " +
               fmt("%.2g", worst_var) + ", max (v_K - v) " + fmt("%.2g", worst_gap) + ", " + fmt("%.1f", secs) +
               " s" + (out.pass ? "" : " | " + out.detail);
  return out;
}

// Integrated likelihood differences against importance sampling over (beta, log sigma^2).
Outcome criterion3() {
  Outcome out;
  const auto start = Clock::now();
  struct Case {
    KernelSpec spec;
    double phi1, phi2, a;
    std::uint64_t seed;
  };
  const Case cases[] = {{KernelSpec::matern(2.5), 0.1, 0.6, 1.0, 1},
                        {KernelSpec::matern(1.5), 0.3, 2.0, 1.0, 2},
                        {KernelSpec::power_exponential(1.9), 0.2, 1.0, 1.5, 3},
                        {KernelSpec::matern(0.5), 0.05, 0.5, 1.0, 4}};
  const int N = 1000000;
  double worst = 0.0;
  for (const auto& c : cases) {
    auto rng = make_stream(c.seed, {});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(5, 1);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
      X(i, 0) = (i + unif(rng)) / 5.0;
      y[i] = std::sin(5.0 * X(i, 0)) + 0.3 * normal(rng);
    }
    const Eigen::MatrixXd H = Eigen::MatrixXd::Ones(5, 1);
    const LevelData data = LevelData::make(1, X, y, H);

    std::vector<Eigen::MatrixXd> Rinv;
    std::vector<double> half_logdet;
    for (double phi : {c.phi1, c.phi2}) {
      const Eigen::MatrixXd R = corr_matrix(X, RangeParams::constant(1, phi), c.spec);
      Rinv.push_back(oracle::inverse(R));
      half_logdet.push_back(0.5 * oracle::logdet(R));
    }

    // Proposal: beta ~ t_4(mean y, 3 sd y), log sigma^2 ~ t_4(log var y, 2), independent.
    const double ybar = y.mean();
    const double sd = std::sqrt((y.array() - ybar).square().sum() / 4.0);
    const double beta_scale = 3.0 * sd, ls_center = std::log(sd * sd), ls_scale = 2.0;
    boost::math::students_t t4(4.0);
    std::student_t_distribution<double> draw_t(4.0);
    std::vector<double> lw1(N), lw2(N);
    for (int k = 0; k < N; ++k) {
      const double zb = draw_t(rng), zs = draw_t(rng);
      const double beta = ybar + beta_scale * zb;
      const double ls = ls_center + ls_scale * zs;
      const double log_q = std::log(boost::math::pdf(t4, zb) / beta_scale) + std::log(boost::math::pdf(t4, zs) / ls_scale);
      const Eigen::VectorXd e = y.array() - beta;
      const double sigma2 = std::exp(ls);
      for (int j = 0; j < 2; ++j) {
        // log N(y; beta, sigma^2 R) + log sigma^(-2a) + log |d sigma^2 / d log sigma^2|, constants dropped
        const double lw = -2.5 * ls - half_logdet[j] - e.dot(Rinv[j] * e) / (2.0 * sigma2) - c.a * ls + ls - log_q;
        (j == 0 ? lw1 : lw2)[k] = lw;
      }
    }
    const double s1 = *std::max_element(lw1.begin(), lw1.end());
    const double s2 = *std::max_element(lw2.begin(), lw2.end());
    double m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < N; ++k) {
      m1 += std::exp(lw1[k] - s1);
      m2 += std::exp(lw2[k] - s2);
    }
    m1 /= N;
    m2 /= N;
    double var = 0.0;
    for (int k = 0; k < N; ++k) {
      const double v = std::exp(lw1[k] - s1) / m1 - std::exp(lw2[k] - s2) / m2;
      var += v * v;
    }
    const double se = std::sqrt(var / N / N);
    const double mc = (std::log(m1) + s1) - (std::log(m2) + s2);
    const double exact = integrated_log_likelihood(data, RangeParams::constant(1, c.phi1), c.spec, c.a) -
                         integrated_log_likelihood(data, RangeParams::constant(1, c.phi2), c.spec, c.a);
    const double z = std::abs(mc - exact) / se;
    worst = std::max(worst, z);
    out.require(z < 3.0, to_string(c.spec) + ": difference " + fmt("%.5f", exact) + " vs MC " + fmt("%.5f", mc) +
                             " (SE " + fmt("%.2g", se) + ")");
  }
  const double secs = seconds_since(start);
  out.require(secs < 120.0, "took " + fmt("%.1f", secs) + " s");
  out.detail = std::to_string(std::size(cases)) + " instances, max |z| " + fmt("%.2f", worst) + ", " +
               fmt("%.1f", secs) + " s" + (out.pass ? "" : " | " + out.detail);
  return out;
}

// Derivative matrices, Fisher information symmetry and PSD, and the J2 - J1 identity.
Outcome criterion4() {
  Outcome out;
  const KernelSpec kernels[] = {KernelSpec::matern(0.5), KernelSpec::matern(1.5), KernelSpec::matern(2.5),
                                KernelSpec::power_exponential(1.9), KernelSpec::power_exponential(1.0),
                                KernelSpec::power_exponential(0.5)};
  double worst_fd = 0.0, worst_asym = 0.0, worst_neg = 0.0, worst_j = 0.0;
  int instances = 0;
  for (std::uint32_t seed = 0; seed < 8; ++seed) {
    auto rng = make_stream(404, {seed});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index d = 1 + seed % 3;
    Eigen::MatrixXd X(5, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = unif(rng);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) y[i] = std::cos(4.0 * X(i, 0)) + unif(rng);
    Eigen::VectorXd phi(d);
    for (Eigen::Index l = 0; l < d; ++l) phi[l] = std::exp(std::log(0.1) + unif(rng) * std::log(20.0));
    const RangeParams params = RangeParams::from_phi(phi);
    const Basis basis{seed % 2 ? BasisKind::Linear : BasisKind::Constant};
    const Eigen::MatrixXd H = basis.evaluate(X);
    std::optional<Eigen::VectorXd> lower;
    if (seed % 4 == 3 && H.cols() + 1 < 5) lower = Eigen::VectorXd((y.array() * 0.7 + X.col(0).array()).matrix());
    const LevelData data = LevelData::make(lower ? 2 : 1, X, y, H, lower);

    for (const auto& spec : kernels) {
      ++instances;
      const auto dR = corr_matrix_derivs(X, params, spec);
      for (Eigen::Index k = 0; k < d; ++k) {
        const double h = 1e-5 * phi[k];
        Eigen::VectorXd pu = phi, pd = phi;
        pu[k] += h;
        pd[k] -= h;
        const Eigen::MatrixXd fd =
            (corr_matrix(X, RangeParams::from_phi(pu), spec) - corr_matrix(X, RangeParams::from_phi(pd), spec)) /
            (2.0 * h);
        const double scale = std::max(dR[k].cwiseAbs().maxCoeff(), 1e-300);
        worst_fd = std::max(worst_fd, (dR[k] - fd).cwiseAbs().maxCoeff() / scale);
      }
      const LevelFactorization fact = gls_fit(data, params, spec);
      for (const Eigen::MatrixXd& I : {fisher_info_reference(data, fact, spec), fisher_info_jeffreys(data, fact, spec)}) {
        const double norm = I.cwiseAbs().maxCoeff();
        worst_asym = std::max(worst_asym, (I - I.transpose()).cwiseAbs().maxCoeff() / norm);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (I + I.transpose())).eigenvalues();
        worst_neg = std::max(worst_neg, -ev.minCoeff() / norm);
      }
      const Eigen::MatrixXd R = corr_matrix(X, params, spec);
      const Eigen::MatrixXd Xd = data.design;
      const double half_logdet_xrx = 0.5 * oracle::logdet(Xd.transpose() * oracle::inverse(R) * Xd);
      const double diff = log_jeffreys_prior(data, fact, spec, JeffreysVariant::J2) -
                          log_jeffreys_prior(data, fact, spec, JeffreysVariant::J1);
      worst_j = std::max(worst_j, std::abs(diff - half_logdet_xrx));
    }
  }
  out.require(worst_fd < 1e-6, "derivative relative error " + fmt("%.3g", worst_fd));
  out.require(worst_asym < 1e-12, "information asymmetry " + fmt("%.3g", worst_asym));
  out.require(worst_neg < 1e-10, "information negative eigenvalue " + fmt("%.3g", worst_neg));
  out.require(worst_j < 1e-10, "J2 - J1 identity off by " + fmt("%.3g", worst_j));
  out.detail = std::to_string(instances) + " instances, max FD rel err " + fmt("%.2g", worst_fd) + ", asym " +
               fmt("%.2g", worst_asym) + ", min eig " + fmt("%.2g", -worst_neg) + ", J2-J1 err " +
               fmt("%.2g", worst_j) + (out.pass ? "" : " | " + out.detail);
  return out;
}

// Tail behaviour of the flat-prior and reference-prior log posteriors on an intercept design.
// The property concerns the exact correlation matrix. With the default 1e-10 jitter the tail
// over 1e5..1e7 is already governed by the jitter (the likelihood from phi ~ h nugget^(-1/alpha),
// the information from phi ~ nugget^(-1/2)), and only the un-jittered exponential kernel stays
// numerically representable there, so that instance is graded and the jittered ones reported.
Outcome criterion5() {
  Outcome out;
  const auto start = Clock::now();
  Eigen::MatrixXd X(6, 2);
  X << 0.05, 0.7, 0.22, 0.15, 0.41, 0.93, 0.58, 0.38, 0.76, 0.81, 0.94, 0.04;
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y[i] = f_low(X.row(i).transpose());
  const LevelData data = LevelData::make(1, X, y, Eigen::MatrixXd::Ones(6, 1));
  auto log_post = [&](const KernelSpec& spec, double phi, PriorKind kind) {
    PriorSpec prior;
    prior.kind = kind;
    const RangeParams params = RangeParams::constant(2, phi);
    return integrated_log_likelihood(data, params, spec, prior.exponent(1)) + log_prior(data, params, spec, prior);
  };
  std::string detail;
  for (const auto& [spec, graded] : {std::pair{KernelSpec::matern(0.5, 0.0), true},
                                     std::pair{KernelSpec::matern(0.5), false},
                                     std::pair{KernelSpec::matern(2.5), false}}) {
    const std::string name = to_string(spec) + " nugget " + fmt("%g", spec.nugget);
    try {
      const double flat_large = std::abs(log_post(spec, 1e7, PriorKind::Flat) - log_post(spec, 1e5, PriorKind::Flat));
      const double flat_small = std::abs(log_post(spec, 1e-8, PriorKind::Flat) - log_post(spec, 1e-6, PriorKind::Flat));
      const double ref_drop = log_post(spec, 1e5, PriorKind::Reference) - log_post(spec, 1e7, PriorKind::Reference);
      if (graded) {
        out.require(flat_large < 0.1, name + " flat large-phi change " + fmt("%.3g", flat_large));
        out.require(flat_small < 1e-3, name + " flat small-phi change " + fmt("%.3g", flat_small));
        out.require(ref_drop > 5.0, name + " reference large-phi decrease " + fmt("%.3g", ref_drop));
      }
      detail += (detail.empty() ? "" : "; ") + name + (graded ? "" : " (not graded)") + ": flat |change| 1e5->1e7 " +
                fmt("%.3g", flat_large) + ", 1e-6->1e-8 " + fmt("%.3g", flat_small) + ", reference decrease " +
                fmt("%.3g", ref_drop);
    } catch (const std::exception& e) {
      if (graded) out.require(false, name + " evaluation failed: " + e.what());
    }
  }
  const double secs = seconds_since(start);
  out.require(secs < 10.0, "took " + fmt("%.1f", secs) + " s");
  out.detail = detail + ", " + fmt("%.2f", secs) + " s" + (out.pass ? "" : " | " + out.detail);
  return out;
}

// Borehole replicates for the four configurations.
Outcome criterion6() {
  Outcome out;
  const auto start = Clock::now();
  struct Row {
    const char* name;
    KernelSpec kernel;
    Estimator estimator;
    Metrics median;
    int failed = 0;
    double edge = 0.0;
    double secs = 0.0;
  };
  std::vector<Row> rows = {{"matern-5/2 reference", KernelSpec::matern(2.5), Estimator::Posterior, {}},
                           {"matern-5/2 plug-in", KernelSpec::matern(2.5), Estimator::PluginMle, {}},
                           {"powexp-1.9 reference", KernelSpec::power_exponential(1.9), Estimator::Posterior, {}},
                           {"powexp-1.9 plug-in", KernelSpec::power_exponential(1.9), Estimator::PluginMle, {}}};
  for (auto& row : rows) {
    const auto t0 = Clock::now();
    BenchmarkConfig c;
    c.kernel = row.kernel;
    c.estimator = row.estimator;
    try {
      const BenchmarkReport r = run_borehole_benchmark(c);
      row.median = r.median;
      row.failed = r.failed;
      row.edge = r.edge_fraction;
    } catch (const std::exception& e) {
      out.require(false, std::string(row.name) + " failed: " + e.what());
      row.median = {NAN, NAN, NAN};
    }
    row.secs = seconds_since(t0);
    std::printf("  %-22s median RMSPE %.4f  CVG %.3f  ALCI %.4f  failed %d  edge %.2f  %.0f s\n", row.name,
                row.median.rmspe, row.median.cvg95, row.median.alci95, row.failed, row.edge, row.secs);
    std::fflush(stdout);
  }
  const double secs = seconds_since(start);
  const Metrics& mr = rows[0].median;
  const Metrics& pr = rows[2].median;
  out.require(mr.rmspe >= 0.15 && mr.rmspe <= 1.5, "Matern reference RMSPE " + fmt("%.4f", mr.rmspe));
  out.require(mr.cvg95 >= 0.7, "Matern reference CVG " + fmt("%.3f", mr.cvg95));
  out.require(pr.rmspe >= 0.3 && pr.rmspe <= 2.0, "power-exponential reference RMSPE " + fmt("%.4f", pr.rmspe));
  out.require(rows[0].median.alci95 < rows[1].median.alci95,
              "Matern ALCI reference " + fmt("%.4f", rows[0].median.alci95) + " >= plug-in " +
                  fmt("%.4f", rows[1].median.alci95));
  out.require(rows[2].median.alci95 < rows[3].median.alci95,
              "power-exponential ALCI reference " + fmt("%.4f", rows[2].median.alci95) + " >= plug-in " +
                  fmt("%.4f", rows[3].median.alci95));
  out.require(secs < 900.0, "took " + fmt("%.0f", secs) + " s");
  out.detail = "10 replicates x 4 configurations, " + fmt("%.0f", secs) + " s" + (out.pass ? "" : " | " + out.detail);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + COKRIG_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every command run twice from the same inputs, config and seed gives identical bytes; the
// library gives identical fits with and without threads.
Outcome criterion7() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / ("cokrig_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const CokrigingData data = nested_instance({14, 8}, 909);
  for (std::size_t t = 0; t < data.s(); ++t) {
    std::ofstream f(dir / ("level" + std::to_string(t + 1) + ".csv"), std::ios::binary);
    Eigen::MatrixXd M(data.levels[t].n(), 3);
    M << data.levels[t].inputs, data.levels[t].outputs;
    write_csv(f, {"x1", "x2", "y"}, M);
  }
  write(dir / "grid.csv", "x1,x2\n0.1,0.2\n0.5,0.5\n0.9,0.7\n");
  write(dir / "config.json", R"({"levels": ["level1.csv", "level2.csv"], "grid": "grid.csv", "output_dir": "out",
  "optimizer": {"seed": 11, "starts": 4},
  "benchmark": {"n_low": 16, "n_high": 8, "n_test": 5, "reps": 2, "interval_draws": 300},
  "tailprobe": {"level": 2, "from": 1e-3, "to": 1e3, "points": 9}})");
  const std::string cfg = "--config \"" + (dir / "config.json").string() + "\"";
  const std::string model = "--model \"" + (dir / "out" / "model.json").string() + "\"";
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"fit " + cfg, {"model.json", "fit_summary.txt"}},
      {"predict " + cfg + " " + model + " --draws 800", {"predictions.csv", "predictions.run.json"}},
      {"sample " + cfg + " " + model + " --x0 0.3,0.6 --draws 500", {"draws.csv", "draws.run.json"}},
      {"tailprobe " + cfg, {"tailprobe.csv", "tailprobe.run.json"}},
      {"benchmark " + cfg, {"benchmark_report.json", "benchmark_replicates.csv"}},
  };
  int compared = 0;
  for (const auto& [args, files] : commands) {
    std::vector<std::string> first;
    for (int pass = 0; pass < 2; ++pass) {
      const int code = run_cli(args, dir / "log.txt");
      if (code != 0) {
        out.require(false, "'" + args.substr(0, args.find(' ')) + "' exited with " + std::to_string(code) + ": " +
                               slurp(dir / "log.txt"));
        break;
      }
      for (std::size_t k = 0; k < files.size(); ++k) {
        const std::string bytes = slurp(dir / "out" / files[k]);
        if (pass == 0) {
          first.push_back(bytes);
        } else {
          ++compared;
          out.require(!bytes.empty() && bytes == first[k], files[k] + " differs between runs");
        }
      }
    }
  }

  OptimOptions threaded, serial;
  threaded.seed = serial.seed = 13;
  serial.parallel = false;
  const std::string a = model_json_string(fit(data, KernelSpec::matern(2.5), PriorSpec{}, threaded), data);
  const std::string b = model_json_string(fit(data, KernelSpec::matern(2.5), PriorSpec{}, serial), data);
  out.require(a == b, "threaded and serial fits differ");
  BenchmarkConfig bc;
  bc.n_low = 16;
  bc.n_high = 8;
  bc.n_test = 5;
  bc.n_reps = 2;
  bc.interval_draws = 300;
  bc.optim.n_starts = 2;
  BenchmarkConfig bs = bc;
  bs.parallel = false;
  bs.optim.parallel = false;
  // The reports echo the parallel flags, so compare everything else.
  auto results = [](const BenchmarkConfig& c) {
    auto j = nlohmann::json::parse(report_json(run_borehole_benchmark(c)));
    j.erase("config");
    return j.dump();
  };
  out.require(results(bc) == results(bs), "threaded and serial benchmarks differ");
  fs::remove_all(dir);
  out.detail = std::to_string(compared) + " output files byte-identical across reruns, threaded == serial" +
               (out.pass ? "" : " | " + out.detail);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7};
  const char* names[] = {"closed form vs Monte Carlo",      "interpolation and variance dominance",
                         "integrated likelihood oracle",     "derivatives and Fisher information",
                         "impropriety diagnostics",          "borehole reproduction",
                         "determinism"};
  std::vector<int> selected;
  if (argc > 1) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > 7) {
      std::fprintf(stderr, "usage: acceptance [1-7]\n");
      return 2;
    }
    selected.push_back(k);
  } else {
    for (int k = 1; k <= 7; ++k) selected.push_back(k);
  }
  bool all = true;
  for (int k : selected) {
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::printf("criterion %d (%s): %s  %s\n", k, names[k - 1], o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
