#pragma once

// CSV data files, model persistence and run configuration.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cokrig/bench.hpp"
#include "cokrig/estimate.hpp"

namespace cokrig {

// Input files, config values or model files that fail validation.
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// %.17g, so that doubles round-trip through text.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

// Numeric CSV with a required header row. Blank lines are skipped.
CsvTable read_csv(std::istream& is, const std::string& name = "<stream>");
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& os, const std::vector<std::string>& header, const Eigen::MatrixXd& values);

// One level's data: columns x1..xd, y.
LevelSamples level_from_csv(const CsvTable& table, const std::string& name = "<stream>");
LevelSamples read_level_csv(const std::string& path);
// Query points: columns x1..xd; a trailing y column is ignored.
Eigen::MatrixXd read_points_csv(const std::string& path, Eigen::Index d);

// 64-bit FNV-1a over the little-endian bytes of the inputs (row-major) followed by the outputs.
std::string fingerprint(const LevelSamples& level);

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);
nlohmann::json prior_to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const nlohmann::json& j);
nlohmann::json optim_to_json(const OptimOptions& opts);
OptimOptions optim_from_json(const nlohmann::json& j, OptimOptions base = {});
nlohmann::json benchmark_config_to_json(const BenchmarkConfig& config);

inline constexpr int kModelSchemaVersion = 1;

struct Model {
  FitResult fit;
  CokrigingData data;
};

// The fitted parameters, the training data itself and its fingerprints.
nlohmann::json model_to_json(const FitResult& fit, const CokrigingData& data);
std::string model_json_string(const FitResult& fit, const CokrigingData& data);
// Rebuilds the factorizations from the stored data and range parameters; the stored
// fingerprints must match the stored data.
Model model_from_json(const nlohmann::json& j);
Model read_model_file(const std::string& path);

struct TailProbeConfig {
  int level = 1;
  std::vector<double> phi;
};

struct RunConfig {
  KernelSpec kernel = KernelSpec::matern(2.5);
  PriorSpec prior;
  Estimator estimator = Estimator::Posterior;
  Basis basis;
  OptimOptions optim;
  std::vector<std::string> levels;  // CSV paths, lowest fidelity first
  std::optional<std::string> grid;
  std::string output_dir = ".";
  BenchmarkConfig benchmark;
  TailProbeConfig tailprobe;
};

// Relative paths in the file are resolved against the file's directory.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig read_config_file(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace cokrig
