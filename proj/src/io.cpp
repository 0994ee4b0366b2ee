#include "cokrig/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace cokrig {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  if (text.empty()) throw ValidationError(where + ": empty value");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw ValidationError(where + ": cannot parse '" + text + "' as a number");
  if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value '" + text + "'");
  return v;
}

void check_keys(const json& j, const std::string& what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(what + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ValidationError("unknown key '" + key + "' in " + what);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

json level_data_json(const LevelData& lvl) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < lvl.n(); ++i) rows.push_back(vector_json(lvl.inputs.row(i).transpose()));
  return {{"inputs", rows}, {"outputs", vector_json(lvl.outputs)}};
}

LevelSamples level_from_json(const json& j, const std::string& what) {
  check_keys(j, what, {"inputs", "outputs"});
  const json& rows = j.at("inputs");
  if (!rows.is_array() || rows.empty()) throw ValidationError(what + ".inputs must be a non-empty array");
  LevelSamples out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = vector_from_json(rows[0], what + ".inputs").size();
  out.inputs.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = vector_from_json(rows[static_cast<std::size_t>(i)], what + ".inputs");
    if (row.size() != d) throw ValidationError(what + ".inputs rows differ in length");
    out.inputs.row(i) = row.transpose();
  }
  out.outputs = vector_from_json(j.at("outputs"), what + ".outputs");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable read_csv(std::istream& is, const std::string& name) {
  CsvTable table;
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      for (const auto& c : cells) {
        if (c.empty()) throw ValidationError(name + ": empty column name in header");
      }
      table.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ValidationError(name + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      row.push_back(parse_number(cells[k], name + ":" + std::to_string(line_no) + " column " + table.header[k]));
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ValidationError(name + ": missing header row");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in, path);
}

void write_csv(std::ostream& os, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index k = 0; k < values.cols(); ++k) os << (k ? "," : "") << format_double(values(i, k));
    os << '\n';
  }
}

LevelSamples level_from_csv(const CsvTable& table, const std::string& name) {
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  if (cols < 2) throw ValidationError(name + ": need columns x1..xd and y");
  for (Eigen::Index k = 0; k + 1 < cols; ++k) {
    if (table.header[k] != "x" + std::to_string(k + 1)) {
      throw ValidationError(name + ": column " + std::to_string(k + 1) + " must be named x" + std::to_string(k + 1));
    }
  }
  if (table.header.back() != "y") throw ValidationError(name + ": last column must be named y");
  if (table.values.rows() < 1) throw ValidationError(name + ": no data rows");
  return {table.values.leftCols(cols - 1), table.values.col(cols - 1)};
}

LevelSamples read_level_csv(const std::string& path) { return level_from_csv(read_csv_file(path), path); }

Eigen::MatrixXd read_points_csv(const std::string& path, Eigen::Index d) {
  const CsvTable table = read_csv_file(path);
  auto cols = static_cast<Eigen::Index>(table.header.size());
  if (cols == d + 1 && table.header.back() == "y") --cols;
  if (cols != d) {
    throw ValidationError(path + ": expected " + std::to_string(d) + " input columns, found " + std::to_string(cols));
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    if (table.header[k] != "x" + std::to_string(k + 1)) {
      throw ValidationError(path + ": column " + std::to_string(k + 1) + " must be named x" + std::to_string(k + 1));
    }
  }
  return table.values.leftCols(d);
}

std::string fingerprint(const LevelSamples& level) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (Eigen::Index i = 0; i < level.inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < level.inputs.cols(); ++k) mix(level.inputs(i, k));
  }
  for (Eigen::Index i = 0; i < level.outputs.size(); ++i) mix(level.outputs[i]);
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json kernel_to_json(const KernelSpec& spec) {
  return {{"family", spec.family == Family::Matern ? "matern" : "power-exponential"},
          {"shape", spec.shape},
          {"nugget", spec.nugget}};
}

KernelSpec kernel_from_json(const json& j) {
  try {
    if (j.is_string()) return parse_kernel(j.get<std::string>());
    check_keys(j, "kernel", {"family", "shape", "nugget"});
    const std::string family = get_or<std::string>(j, "family", "matern");
    KernelSpec spec;
    if (family == "matern") {
      spec = KernelSpec::matern(get_or(j, "shape", 2.5), get_or(j, "nugget", 1e-10));
    } else if (family == "power-exponential" || family == "powexp") {
      spec = KernelSpec::power_exponential(get_or(j, "shape", 1.9), get_or(j, "nugget", 1e-10));
    } else {
      throw ValidationError("unknown kernel family '" + family + "'");
    }
    validate(spec);
    return spec;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
}

json prior_to_json(const PriorSpec& prior) {
  json j{{"kind", to_string(prior.kind)}, {"b0", prior.jr_b0}};
  j["a0"] = prior.jr_a0 ? json(*prior.jr_a0) : json(nullptr);
  j["C"] = prior.jr_C.size() ? vector_json(prior.jr_C) : json(nullptr);
  return j;
}

PriorSpec prior_from_json(const json& j) {
  try {
    PriorSpec prior;
    if (j.is_string()) {
      prior.kind = parse_prior_kind(j.get<std::string>());
      return prior;
    }
    check_keys(j, "prior", {"kind", "a0", "b0", "C"});
    prior.kind = parse_prior_kind(get_or<std::string>(j, "kind", "reference"));
    if (j.contains("a0") && !j.at("a0").is_null()) prior.jr_a0 = get_or(j, "a0", 0.0);
    prior.jr_b0 = get_or(j, "b0", 1.0);
    if (!(prior.jr_b0 > 0.0)) throw ValidationError("prior b0 must be positive");
    if (j.contains("C") && !j.at("C").is_null()) prior.jr_C = vector_from_json(j.at("C"), "prior.C");
    return prior;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
}

json optim_to_json(const OptimOptions& o) {
  return {{"seed", o.seed},         {"starts", o.n_starts},         {"max_evals", o.max_evals},
          {"tolerance", o.tolerance}, {"xi_lower", o.xi_lower},     {"xi_upper", o.xi_upper},
          {"start_box", o.start_box}, {"initial_step", o.initial_step}, {"parallel", o.parallel}};
}

OptimOptions optim_from_json(const json& j, OptimOptions o) {
  check_keys(j, "optimizer",
             {"seed", "starts", "max_evals", "tolerance", "xi_lower", "xi_upper", "start_box", "initial_step",
              "parallel"});
  o.seed = get_or<std::uint64_t>(j, "seed", o.seed);
  o.n_starts = get_or(j, "starts", o.n_starts);
  o.max_evals = get_or(j, "max_evals", o.max_evals);
  o.tolerance = get_or(j, "tolerance", o.tolerance);
  o.xi_lower = get_or(j, "xi_lower", o.xi_lower);
  o.xi_upper = get_or(j, "xi_upper", o.xi_upper);
  o.start_box = get_or(j, "start_box", o.start_box);
  o.initial_step = get_or(j, "initial_step", o.initial_step);
  o.parallel = get_or(j, "parallel", o.parallel);
  if (o.n_starts < 1) throw ValidationError("optimizer.starts must be >= 1");
  if (o.max_evals < 0) throw ValidationError("optimizer.max_evals must be >= 0");
  if (!(o.tolerance > 0.0)) throw ValidationError("optimizer.tolerance must be positive");
  if (!(o.xi_lower < o.xi_upper)) throw ValidationError("optimizer.xi_lower must be below xi_upper");
  if (!(o.start_box > 0.0) || !(o.initial_step > 0.0)) {
    throw ValidationError("optimizer.start_box and initial_step must be positive");
  }
  return o;
}

json benchmark_config_to_json(const BenchmarkConfig& c) {
  return {{"n_low", c.n_low},
          {"n_high", c.n_high},
          {"n_test", c.n_test},
          {"reps", c.n_reps},
          {"seed", c.seed},
          {"kernel", kernel_to_json(c.kernel)},
          {"prior", prior_to_json(c.prior)},
          {"estimator", to_string(c.estimator)},
          {"basis", to_string(c.basis.kind)},
          {"optimizer", optim_to_json(c.optim)},
          {"interval_draws", c.interval_draws},
          {"interval_prob", c.interval_prob}};
}

json model_to_json(const FitResult& fit, const CokrigingData& data) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kernel"] = kernel_to_json(fit.kernel);
  j["prior"] = prior_to_json(fit.prior);
  j["estimator"] = to_string(fit.estimator);
  j["basis"] = to_string(data.basis.kind);
  j["parameterization"] = fit.parameterization;
  json levels = json::array();
  for (std::size_t t = 0; t < fit.levels.size(); ++t) {
    const auto& lf = fit.levels[t];
    const auto& lvl = data.levels[t];
    json l;
    l["t"] = lvl.t;
    l["n"] = lvl.n();
    l["q"] = lvl.q();
    l["phi"] = vector_json(lf.params.phi());
    l["xi"] = vector_json(lf.params.xi());
    l["b_hat"] = vector_json(lf.b_hat);
    l["beta_hat"] = vector_json(lf.b_hat.head(lvl.p()));
    l["gamma_hat"] = t > 0 ? json(lf.b_hat[lvl.p()]) : json(nullptr);
    l["sigma2_hat"] = lf.sigma2_hat;
    l["S2"] = lf.fact.S2;
    const auto& d = lf.diagnostics;
    l["diagnostics"] = {{"objective", d.objective},
                        {"evaluations", d.evaluations},
                        {"iterations", d.iterations},
                        {"converged", d.converged},
                        {"restarts", d.restarts},
                        {"best_start", d.best_start},
                        {"failed_starts", d.failed_starts},
                        {"failed_evaluations", d.failed_evaluations},
                        {"last_failure", d.last_failure}};
    l["fingerprint"] = fingerprint({lvl.inputs, lvl.outputs});
    l["data"] = level_data_json(lvl);
    levels.push_back(l);
  }
  j["levels"] = levels;
  return j;
}

std::string model_json_string(const FitResult& fit, const CokrigingData& data) {
  return model_to_json(fit, data).dump(2) + "\n";
}

Model model_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("schema_version")) throw ValidationError("model file has no schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw ValidationError("unsupported model schema_version " + std::to_string(version));
    }
    Model m;
    const KernelSpec kernel = kernel_from_json(j.at("kernel"));
    const PriorSpec prior = prior_from_json(j.at("prior"));
    const std::string est = j.at("estimator").get<std::string>();
    if (est != "posterior" && est != "plugin-mle") throw ValidationError("unknown estimator '" + est + "'");
    const Estimator estimator = est == "posterior" ? Estimator::Posterior : Estimator::PluginMle;
    const Basis basis{parse_basis(j.at("basis").get<std::string>())};

    std::vector<LevelSamples> raw;
    std::vector<RangeParams> params;
    const json& levels = j.at("levels");
    if (!levels.is_array() || levels.empty()) throw ValidationError("model has no levels");
    for (std::size_t t = 0; t < levels.size(); ++t) {
      const json& l = levels[t];
      const std::string where = "levels[" + std::to_string(t) + "]";
      raw.push_back(level_from_json(l.at("data"), where + ".data"));
      if (fingerprint(raw.back()) != l.at("fingerprint").get<std::string>()) {
        throw ValidationError(where + ": data fingerprint mismatch");
      }
      params.push_back(RangeParams::from_phi(vector_from_json(l.at("phi"), where + ".phi")));
    }
    m.data = assemble(raw, basis);
    m.fit = fit_fixed(m.data, kernel, prior, params, estimator);
    m.fit.parameterization = j.value("parameterization", m.fit.parameterization);
    for (std::size_t t = 0; t < levels.size(); ++t) {
      const json& d = levels[t].at("diagnostics");
      auto& diag = m.fit.levels[t].diagnostics;
      diag.objective = d.value("objective", 0.0);
      diag.evaluations = d.value("evaluations", 0);
      diag.iterations = d.value("iterations", 0);
      diag.converged = d.value("converged", false);
      diag.restarts = d.value("restarts", 0);
      diag.best_start = d.value("best_start", 0);
      diag.failed_starts = d.value("failed_starts", 0);
      diag.failed_evaluations = d.value("failed_evaluations", 0);
      diag.last_failure = d.value("last_failure", std::string());
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

Model read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return model_from_json(j);
}

RunConfig parse_config(const json& j, const std::string& base_dir) {
  check_keys(j, "config",
             {"kernel", "prior", "estimator", "basis", "optimizer", "levels", "grid", "output_dir", "benchmark",
              "tailprobe"});
  RunConfig c;
  try {
    if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
    if (j.contains("prior")) c.prior = prior_from_json(j.at("prior"));
    const std::string est = get_or<std::string>(j, "estimator", "posterior");
    if (est == "posterior") {
      c.estimator = Estimator::Posterior;
    } else if (est == "plugin" || est == "plugin-mle") {
      c.estimator = Estimator::PluginMle;
    } else {
      throw ValidationError("unknown estimator '" + est + "'");
    }
    c.basis.kind = parse_basis(get_or<std::string>(j, "basis", "constant"));
    if (j.contains("optimizer")) c.optim = optim_from_json(j.at("optimizer"));
    if (j.contains("levels")) {
      const json& lv = j.at("levels");
      if (!lv.is_array()) throw ValidationError("levels must be an array of CSV paths");
      for (const auto& p : lv) {
        if (!p.is_string()) throw ValidationError("levels must be an array of CSV paths");
        c.levels.push_back(resolve(p.get<std::string>(), base_dir));
      }
    }
    if (j.contains("grid")) c.grid = resolve(j.at("grid").get<std::string>(), base_dir);
    c.output_dir = resolve(get_or<std::string>(j, "output_dir", "."), base_dir);
    if (j.contains("benchmark")) {
      const json& b = j.at("benchmark");
      check_keys(b, "benchmark",
                 {"n_low", "n_high", "n_test", "reps", "seed", "interval_draws", "interval_prob", "parallel"});
      c.benchmark.n_low = get_or(b, "n_low", c.benchmark.n_low);
      c.benchmark.n_high = get_or(b, "n_high", c.benchmark.n_high);
      c.benchmark.n_test = get_or(b, "n_test", c.benchmark.n_test);
      c.benchmark.n_reps = get_or(b, "reps", c.benchmark.n_reps);
      c.benchmark.seed = get_or<std::uint64_t>(b, "seed", c.benchmark.seed);
      c.benchmark.interval_draws = get_or(b, "interval_draws", c.benchmark.interval_draws);
      c.benchmark.interval_prob = get_or(b, "interval_prob", c.benchmark.interval_prob);
      c.benchmark.parallel = get_or(b, "parallel", c.benchmark.parallel);
      if (c.benchmark.n_high > c.benchmark.n_low || c.benchmark.n_high < 1 || c.benchmark.n_test < 1 ||
          c.benchmark.n_reps < 1) {
        throw ValidationError("benchmark sizes must satisfy 1 <= n_high <= n_low, n_test >= 1, reps >= 1");
      }
      if (!(c.benchmark.interval_prob > 0.0 && c.benchmark.interval_prob < 1.0) || c.benchmark.interval_draws < 2) {
        throw ValidationError("benchmark interval_prob must lie in (0, 1) and interval_draws be >= 2");
      }
    }
    if (j.contains("tailprobe")) {
      const json& t = j.at("tailprobe");
      check_keys(t, "tailprobe", {"level", "phi", "from", "to", "points"});
      c.tailprobe.level = get_or(t, "level", 1);
      if (t.contains("phi")) {
        const Eigen::VectorXd v = vector_from_json(t.at("phi"), "tailprobe.phi");
        c.tailprobe.phi.assign(v.data(), v.data() + v.size());
      } else if (t.contains("from")) {
        const double from = get_or(t, "from", 1e-6);
        const double to = get_or(t, "to", 1e7);
        const int points = get_or(t, "points", 27);
        if (!(from > 0.0 && to > from) || points < 2) {
          throw ValidationError("tailprobe needs 0 < from < to and points >= 2");
        }
        for (int k = 0; k < points; ++k) {
          c.tailprobe.phi.push_back(std::exp(std::log(from) + (std::log(to) - std::log(from)) * k / (points - 1)));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  c.benchmark.kernel = c.kernel;
  c.benchmark.prior = c.prior;
  c.benchmark.estimator = c.estimator;
  c.benchmark.basis = c.basis;
  c.benchmark.optim = c.optim;
  return c;
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(j, dir.empty() ? "." : dir.string());
}

json config_to_json(const RunConfig& c) {
  json j;
  j["kernel"] = kernel_to_json(c.kernel);
  j["prior"] = prior_to_json(c.prior);
  j["estimator"] = to_string(c.estimator);
  j["basis"] = to_string(c.basis.kind);
  j["optimizer"] = optim_to_json(c.optim);
  j["levels"] = c.levels;
  j["grid"] = c.grid ? json(*c.grid) : json(nullptr);
  j["output_dir"] = c.output_dir;
  j["benchmark"] = benchmark_config_to_json(c.benchmark);
  j["tailprobe"] = {{"level", c.tailprobe.level}, {"phi", c.tailprobe.phi}};
  return j;
}

}  // namespace cokrig
