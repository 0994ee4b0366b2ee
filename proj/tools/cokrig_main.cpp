#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cokrig/bench.hpp"
#include "cokrig/errors.hpp"
#include "cokrig/estimate.hpp"
#include "cokrig/io.hpp"
#include "cokrig/predict.hpp"

namespace fs = std::filesystem;
using namespace cokrig;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string prior;
  std::string kernel;
  std::optional<double> a0;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_config) {
  if (with_config) cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--prior", o.prior,
                  "reference | jeffreys1 | jeffreys2 | jointly-robust | flat | inverse-range | plugin");
  cmd->add_option("--kernel", o.kernel, "powexp[-alpha] | matern-1/2 | matern-3/2 | matern-5/2");
  cmd->add_option("--a0", o.a0, "jointly robust a0");
  cmd->add_option("--out", o.out, "output directory");
}

RunConfig load(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? parse_config(json::object()) : read_config_file(o.config);
  if (o.seed) {
    cfg.optim.seed = *o.seed;
    cfg.benchmark.seed = *o.seed;
  }
  try {
    if (o.prior == "plugin" || o.prior == "plugin-mle") {
      cfg.estimator = Estimator::PluginMle;
    } else if (!o.prior.empty()) {
      cfg.prior.kind = parse_prior_kind(o.prior);
      cfg.estimator = Estimator::Posterior;
    }
    if (!o.kernel.empty()) cfg.kernel = parse_kernel(o.kernel, cfg.kernel.nugget);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (o.a0) cfg.prior.jr_a0 = *o.a0;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.benchmark.kernel = cfg.kernel;
  cfg.benchmark.prior = cfg.prior;
  cfg.benchmark.estimator = cfg.estimator;
  cfg.benchmark.basis = cfg.basis;
  cfg.benchmark.optim = cfg.optim;
  return cfg;
}

fs::path output_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

CokrigingData load_data(const RunConfig& cfg) {
  if (cfg.levels.empty()) throw ValidationError("the config lists no level data files");
  std::vector<LevelSamples> raw;
  for (const auto& path : cfg.levels) raw.push_back(read_level_csv(path));
  try {
    return assemble(raw, cfg.basis);
  } catch (const NestingError& e) {
    throw ValidationError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
}

std::string fit_summary(const FitResult& fit, const CokrigingData& data) {
  std::ostringstream os;
  os << "kernel " << to_string(fit.kernel) << ", nugget " << format_double(fit.kernel.nugget) << "\n";
  os << "estimator " << to_string(fit.estimator);
  if (fit.estimator == Estimator::Posterior) os << ", prior " << to_string(fit.prior.kind);
  os << "\n";
  for (std::size_t t = 0; t < fit.levels.size(); ++t) {
    const auto& lf = fit.levels[t];
    const auto& lvl = data.levels[t];
    os << "level " << lvl.t << ": n=" << lvl.n() << " q=" << lvl.q() << "\n  phi =";
    for (Eigen::Index l = 0; l < lf.params.size(); ++l) os << " " << format_double(lf.params[l]);
    os << "\n  beta =";
    for (Eigen::Index k = 0; k < lvl.p(); ++k) os << " " << format_double(lf.b_hat[k]);
    if (t > 0) os << "\n  gamma = " << format_double(lf.b_hat[lvl.p()]);
    os << "\n  sigma2 = " << format_double(lf.sigma2_hat) << "\n";
    const auto& d = lf.diagnostics;
    os << "  objective " << format_double(d.objective) << ", " << d.evaluations << " evaluations, best start "
       << d.best_start << " of " << d.restarts << (d.converged ? ", converged" : ", not converged");
    if (d.failed_evaluations > 0) {
      os << ", " << d.failed_evaluations << " failed evaluations (last: " << d.last_failure << ")";
    }
    os << "\n";
  }
  return os.str();
}

int cmd_fit(const Overrides& o) {
  const RunConfig cfg = load(o);
  const CokrigingData data = load_data(cfg);
  const FitResult model = fit(data, cfg.kernel, cfg.prior, cfg.optim, cfg.estimator);
  json j = model_to_json(model, data);
  j["config"] = config_to_json(cfg);
  const fs::path dir = output_dir(cfg.output_dir);
  write_file(dir / "model.json", j.dump(2) + "\n");
  const std::string summary = fit_summary(model, data);
  write_file(dir / "fit_summary.txt", summary);
  std::cout << summary << "model written to " << (dir / "model.json").string() << "\n";
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string grid;
  int draws = 4000;
  double prob = 0.95;
  bool no_snap = false;
};

int cmd_predict(const Overrides& o, const PredictArgs& a) {
  const RunConfig cfg = load(o);
  const Model m = read_model_file(a.model);
  std::string grid = a.grid;
  if (grid.empty() && cfg.grid) grid = *cfg.grid;
  if (grid.empty()) throw ValidationError("no prediction grid given (--grid or config 'grid')");
  if (!(a.prob > 0.0 && a.prob < 1.0) || a.draws < 2) {
    throw ValidationError("--prob must lie in (0, 1) and --draws be >= 2");
  }
  const Eigen::MatrixXd X0 = read_points_csv(grid, m.data.d());
  PredictOptions popts;
  popts.snap_design_points = !a.no_snap;
  const Prediction pred = predict(m.fit, m.data, X0, popts);
  const Intervals ci = credible_intervals(m.fit, m.data, X0, a.prob, a.draws, cfg.optim.seed, popts);

  const Eigen::Index d = m.data.d();
  const Eigen::Index s = pred.mean.cols();
  std::vector<std::string> header;
  for (Eigen::Index l = 0; l < d; ++l) header.push_back("x" + std::to_string(l + 1));
  for (const char* c : {"level", "mean", "variance", "lo95", "hi95"}) header.emplace_back(c);
  Eigen::MatrixXd rows(X0.rows() * s, d + 5);
  for (Eigen::Index i = 0; i < X0.rows(); ++i) {
    for (Eigen::Index t = 0; t < s; ++t) {
      const Eigen::Index r = i * s + t;
      rows.row(r).head(d) = X0.row(i);
      rows(r, d) = static_cast<double>(t + 1);
      rows(r, d + 1) = pred.mean(i, t);
      rows(r, d + 2) = pred.variance(i, t);
      rows(r, d + 3) = ci.lower(i, t);
      rows(r, d + 4) = ci.upper(i, t);
    }
  }
  const fs::path dir = output_dir(cfg.output_dir);
  std::ofstream out(dir / "predictions.csv", std::ios::binary);
  write_csv(out, header, rows);
  json run{{"command", "predict"}, {"model", a.model}, {"grid", grid}, {"seed", cfg.optim.seed},
           {"draws", a.draws},     {"prob", a.prob},   {"snap_design_points", popts.snap_design_points}};
  write_file(dir / "predictions.run.json", run.dump(2) + "\n");
  std::cout << "predictions for " << X0.rows() << " points written to " << (dir / "predictions.csv").string()
            << "\n";
  return 0;
}

struct SampleArgs {
  std::string model;
  std::string x0;
  int draws = 1000;
};

int cmd_sample(const Overrides& o, const SampleArgs& a) {
  const RunConfig cfg = load(o);
  const Model m = read_model_file(a.model);
  std::vector<double> coords;
  std::stringstream ss(a.x0);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0' || !std::isfinite(v)) throw ValidationError("cannot parse --x0 '" + a.x0 + "'");
    coords.push_back(v);
  }
  if (static_cast<Eigen::Index>(coords.size()) != m.data.d()) {
    throw ValidationError("--x0 needs " + std::to_string(m.data.d()) + " comma-separated coordinates");
  }
  if (a.draws < 0) throw ValidationError("--draws must be non-negative");
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(coords.data(), m.data.d());
  const Eigen::MatrixXd draws = sample_predictive(m.fit, m.data, x0, a.draws, cfg.optim.seed);
  std::vector<std::string> header;
  for (Eigen::Index t = 0; t < draws.cols(); ++t) header.push_back("y" + std::to_string(t + 1));
  const fs::path dir = output_dir(cfg.output_dir);
  std::ofstream out(dir / "draws.csv", std::ios::binary);
  write_csv(out, header, draws);
  json run{{"command", "sample"}, {"model", a.model}, {"x0", coords}, {"draws", a.draws}, {"seed", cfg.optim.seed}};
  write_file(dir / "draws.run.json", run.dump(2) + "\n");
  std::cout << a.draws << " draws written to " << (dir / "draws.csv").string() << "\n";
  return 0;
}

int cmd_benchmark(const Overrides& o, std::optional<int> reps) {
  RunConfig cfg = load(o);
  if (reps) {
    if (*reps < 1) throw ValidationError("--reps must be >= 1");
    cfg.benchmark.n_reps = *reps;
  }
  const BenchmarkReport report = run_borehole_benchmark(cfg.benchmark);
  const fs::path dir = output_dir(cfg.output_dir);
  write_file(dir / "benchmark_report.json", report_json(report));
  std::ofstream csv(dir / "benchmark_replicates.csv", std::ios::binary);
  write_replicates_csv(csv, report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "median RMSPE " << format_double(report.median.rmspe) << ", CVG95 "
            << format_double(report.median.cvg95) << ", ALCI95 " << format_double(report.median.alci95) << " over "
            << report.replicates.size() - report.failed << " replicates\n";
  return 0;
}

int cmd_tailprobe(const Overrides& o, std::optional<int> level, const std::vector<double>& phi) {
  RunConfig cfg = load(o);
  if (level) cfg.tailprobe.level = *level;
  if (!phi.empty()) cfg.tailprobe.phi = phi;
  const CokrigingData data = load_data(cfg);
  const int t = cfg.tailprobe.level;
  if (t < 1 || t > static_cast<int>(data.s())) {
    throw ValidationError("tail-probe level must lie in 1.." + std::to_string(data.s()));
  }
  const LevelData& lvl = data.levels[t - 1];
  std::vector<TailPoint> points;
  try {
    points = tail_probe(lvl, cfg.kernel, cfg.prior.exponent(lvl.q()), cfg.tailprobe.phi);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  const fs::path dir = output_dir(cfg.output_dir);
  std::ofstream out(dir / "tailprobe.csv", std::ios::binary);
  out << "phi,log_integrated_likelihood,log_prior,log_posterior,error\n";
  for (const auto& pt : points) {
    std::string lp = "nan", post = "nan", err = pt.error;
    if (pt.value) {
      try {
        const double v = log_prior(lvl, RangeParams::constant(lvl.d(), pt.phi), cfg.kernel, cfg.prior);
        lp = format_double(v);
        post = format_double(*pt.value + v);
      } catch (const std::exception& e) {
        err = e.what();
      }
    }
    std::replace(err.begin(), err.end(), '"', '\'');
    out << format_double(pt.phi) << ',' << (pt.value ? format_double(*pt.value) : std::string("nan")) << ',' << lp
        << ',' << post << ",\"" << err << "\"\n";
  }
  json run{{"command", "tailprobe"}, {"config", config_to_json(cfg)}};
  write_file(dir / "tailprobe.run.json", run.dump(2) + "\n");
  std::cout << points.size() << " tail-probe points written to " << (dir / "tailprobe.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoregressive cokriging emulator"};
  app.require_subcommand(1);

  Overrides fit_o, pred_o, samp_o, bench_o, tail_o;
  auto* fit_cmd = app.add_subcommand("fit", "estimate range parameters and write model.json");
  add_common(fit_cmd, fit_o, true);

  PredictArgs pa;
  auto* pred_cmd = app.add_subcommand("predict", "means, variances and 95% intervals at grid points");
  add_common(pred_cmd, pred_o, true);
  pred_cmd->add_option("--model", pa.model, "model.json from fit")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--grid", pa.grid, "CSV of query points (x1..xd)");
  pred_cmd->add_option("--draws", pa.draws, "sampler draws per point for levels above the first");
  pred_cmd->add_option("--prob", pa.prob, "interval probability");
  pred_cmd->add_flag("--no-snap", pa.no_snap, "report formula values at design points");

  SampleArgs sa;
  auto* samp_cmd = app.add_subcommand("sample", "joint predictive draws at one point");
  add_common(samp_cmd, samp_o, true);
  samp_cmd->add_option("--model", sa.model, "model.json from fit")->required()->check(CLI::ExistingFile);
  samp_cmd->add_option("--x0", sa.x0, "comma-separated query point")->required();
  samp_cmd->add_option("--draws", sa.draws, "number of draws");

  std::optional<int> reps;
  auto* bench_cmd = app.add_subcommand("benchmark", "replicated borehole hold-out benchmark");
  add_common(bench_cmd, bench_o, true);
  bench_cmd->add_option("--reps", reps, "number of replicates");

  std::optional<int> level;
  std::vector<double> phi;
  auto* tail_cmd = app.add_subcommand("tailprobe", "integrated likelihood and prior along phi_l = phi");
  add_common(tail_cmd, tail_o, true);
  tail_cmd->add_option("--level", level, "level t (1-based)");
  tail_cmd->add_option("--phi", phi, "phi grid (ascending)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_o);
    if (*pred_cmd) return cmd_predict(pred_o, pa);
    if (*samp_cmd) return cmd_sample(samp_o, sa);
    if (*bench_cmd) return cmd_benchmark(bench_o, reps);
    if (*tail_cmd) return cmd_tailprobe(tail_o, level, phi);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const VarianceUndefinedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitValidation;
}
