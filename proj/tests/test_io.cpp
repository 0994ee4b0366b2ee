#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "cokrig/estimate.hpp"
#include "cokrig/io.hpp"
#include "cokrig/predict.hpp"

using namespace cokrig;
using nlohmann::json;

namespace {

std::vector<LevelSamples> two_levels() {
  LevelSamples low, high;
  low.inputs.resize(8, 2);
  low.inputs << 0.05, 0.91, 0.18, 0.33, 0.29, 0.62, 0.41, 0.07, 0.55, 0.48, 0.67, 0.86, 0.78, 0.21, 0.93, 0.58;
  low.outputs.resize(8);
  for (int i = 0; i < 8; ++i) low.outputs[i] = std::sin(5.0 * low.inputs(i, 0)) + low.inputs(i, 1);
  high.inputs = low.inputs.topRows(5);
  high.outputs.resize(5);
  for (int i = 0; i < 5; ++i) high.outputs[i] = 1.3 * low.outputs[i] + 0.2 * high.inputs(i, 0) * high.inputs(i, 0);
  return {low, high};
}

}  // namespace

TEST_CASE("CSV values round-trip at full precision") {
  Eigen::MatrixXd M(3, 2);
  M << 0.1, 1.0 / 3.0,  //
      -2.5e-300, 6.02214076e23,  //
      std::nextafter(1.0, 2.0), M_PI;
  std::ostringstream os;
  write_csv(os, {"x1", "y"}, M);
  std::istringstream is(os.str());
  const CsvTable t = read_csv(is);
  CHECK(t.header == std::vector<std::string>{"x1", "y"});
  CHECK(t.values == M);
}

TEST_CASE("CSV parsing rejects malformed input") {
  {
    std::istringstream is("");
    CHECK_THROWS_AS(read_csv(is), ValidationError);
  }
  {
    std::istringstream is("x1,y\n1,2\n3\n");
    CHECK_THROWS_AS(read_csv(is), ValidationError);
  }
  {
    std::istringstream is("x1,y\n1,abc\n");
    CHECK_THROWS_AS(read_csv(is), ValidationError);
  }
  {
    std::istringstream is("x1,y\n1,nan\n");
    CHECK_THROWS_AS(read_csv(is), ValidationError);
  }
  {
    std::istringstream is("a,y\n1,2\n");
    CHECK_THROWS_AS(level_from_csv(read_csv(is)), ValidationError);
  }
  {
    std::istringstream is("x1,x2\n1,2\n");
    CHECK_THROWS_AS(level_from_csv(read_csv(is)), ValidationError);
  }
  {
    std::istringstream is("x1,x2,y\n\n1,2,3\n\n");
    const LevelSamples s = level_from_csv(read_csv(is));
    CHECK(s.inputs.rows() == 1);
    CHECK(s.outputs[0] == 3.0);
  }
}

TEST_CASE("fingerprints change with any bit of the data") {
  const auto levels = two_levels();
  const std::string f = fingerprint(levels[0]);
  CHECK(f.rfind("fnv1a64:", 0) == 0);
  CHECK(f.size() == 8 + 16);
  CHECK(fingerprint(levels[0]) == f);
  LevelSamples changed = levels[0];
  changed.outputs[3] = std::nextafter(changed.outputs[3], 10.0);
  CHECK(fingerprint(changed) != f);
}

TEST_CASE("model JSON round-trip reproduces predictions exactly") {
  const CokrigingData data = assemble(two_levels());
  OptimOptions opts;
  opts.n_starts = 2;
  opts.seed = 4;
  const FitResult model = fit(data, KernelSpec::matern(2.5), PriorSpec{}, opts);
  const std::string text = model_json_string(model, data);
  const Model back = model_from_json(json::parse(text));
  CHECK(model_json_string(back.fit, back.data) == text);

  Eigen::MatrixXd X0(3, 2);
  X0 << 0.12, 0.5, 0.7, 0.7, 0.99, 0.01;
  const Prediction a = predict(model, data, X0);
  const Prediction b = predict(back.fit, back.data, X0);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  for (std::size_t t = 0; t < model.levels.size(); ++t) {
    CHECK(back.fit.levels[t].params.phi() == model.levels[t].params.phi());
  }
}

TEST_CASE("model files with altered data or unknown versions are rejected") {
  const CokrigingData data = assemble(two_levels());
  OptimOptions opts;
  opts.n_starts = 1;
  const FitResult model = fit(data, KernelSpec::matern(1.5), PriorSpec{}, opts);
  json j = model_to_json(model, data);

  json tampered = j;
  tampered["levels"][0]["data"]["outputs"][2] = 123.0;
  CHECK_THROWS_AS(model_from_json(tampered), ValidationError);

  json future = j;
  future["schema_version"] = 99;
  CHECK_THROWS_AS(model_from_json(future), ValidationError);

  json missing = j;
  missing.erase("schema_version");
  CHECK_THROWS_AS(model_from_json(missing), ValidationError);
}

TEST_CASE("config parsing") {
  const json ok = json::parse(R"({
    "kernel": {"family": "powexp", "shape": 1.9},
    "prior": {"kind": "jr", "a0": 0.2},
    "estimator": "plugin",
    "optimizer": {"seed": 7, "starts": 3},
    "levels": ["low.csv", "/abs/high.csv"],
    "output_dir": "out",
    "benchmark": {"reps": 4, "n_high": 20},
    "tailprobe": {"level": 2, "from": 1e-3, "to": 1e3, "points": 7}
  })");
  const RunConfig c = parse_config(ok, "/base");
  CHECK(c.kernel.family == Family::PowerExponential);
  CHECK(c.kernel.shape == 1.9);
  CHECK(c.prior.kind == PriorKind::JointlyRobust);
  CHECK(c.estimator == Estimator::PluginMle);
  CHECK(c.optim.seed == 7);
  CHECK(c.optim.n_starts == 3);
  CHECK(c.levels == std::vector<std::string>{"/base/low.csv", "/abs/high.csv"});
  CHECK(c.output_dir == "/base/out");
  CHECK(c.benchmark.n_reps == 4);
  CHECK(c.benchmark.n_high == 20);
  CHECK(c.benchmark.optim.n_starts == 3);
  CHECK(c.tailprobe.level == 2);
  REQUIRE(c.tailprobe.phi.size() == 7);
  CHECK(c.tailprobe.phi.front() == doctest::Approx(1e-3));
  CHECK(c.tailprobe.phi[3] == doctest::Approx(1.0));
  CHECK(c.tailprobe.phi.back() == doctest::Approx(1e3));

  CHECK_THROWS_AS(parse_config(json::parse(R"({"kernal": {}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"optimizer": {"startz": 3}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"estimator": "mle"})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"optimizer": {"starts": 0}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"benchmark": {"n_high": 90}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"kernel": {"family": "gauss"}})")), ValidationError);
}
