#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace cokrig {

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double initial_step = 1.0;
  double ftol = 1e-8;  // stop when max - min over the simplex falls below this
  int max_evals = 1000;
  // Box; points are projected onto it.
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

// Maximizes f over the box. The returned point is the best point ever evaluated.
template <typename F>
NelderMeadResult nelder_mead_maximize(F&& f, const Eigen::VectorXd& start, const NelderMeadOptions& opt) {
  const Eigen::Index d = start.size();
  NelderMeadResult res;
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(opt.lower).cwiseMin(opt.upper); };
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    ++res.evaluations;
    if (v > res.value || res.evaluations == 1) {
      res.value = v;
      res.x = x;
    }
    return v;
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.push_back(project(start));
  vals.push_back(eval(pts[0]));
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd x = pts[0];
    x[i] += opt.initial_step;
    x = project(x);
    if (x[i] == pts[0][i]) x[i] = std::max(opt.lower, pts[0][i] - opt.initial_step);
    pts.push_back(x);
    vals.push_back(eval(x));
  }

  std::vector<std::size_t> order(d + 1);
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[d > 0 ? d - 1 : 0];
    if (std::abs(vals[best] - vals[worst]) < opt.ftol) {
      res.converged = true;
      break;
    }
    double diameter = 0.0;
    for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).lpNorm<Eigen::Infinity>());
    if (diameter < 1e-12) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evals) break;
    ++res.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = project(centroid + opt.reflection * (centroid - pts[worst]));
    const double fr = eval(xr);
    if (fr > vals[best]) {
      const Eigen::VectorXd xe = project(centroid + opt.expansion * (xr - centroid));
      const double fe = eval(xe);
      if (fe > fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr > vals[second_worst]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    bool accepted = false;
    if (fr > vals[worst]) {
      const Eigen::VectorXd xc = project(centroid + opt.contraction * (xr - centroid));
      const double fc = eval(xc);
      if (fc >= fr) {
        pts[worst] = xc;
        vals[worst] = fc;
        accepted = true;
      }
    } else {
      const Eigen::VectorXd xc = project(centroid + opt.contraction * (pts[worst] - centroid));
      const double fc = eval(xc);
      if (fc > vals[worst]) {
        pts[worst] = xc;
        vals[worst] = fc;
        accepted = true;
      }
    }
    if (!accepted) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == best) continue;
        pts[i] = project(pts[best] + opt.shrink * (pts[i] - pts[best]));
        vals[i] = eval(pts[i]);
      }
    }
  }
  return res;
}

}  // namespace cokrig
