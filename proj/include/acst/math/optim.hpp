#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

// Derivative-free Nelder-Mead and a small BFGS with numerical gradients.

namespace acst {

struct OptimResult {
  Eigen::VectorXd x;
  double fval = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
};

// Minimizes f.
inline OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x0, double step = 0.25,
                               int max_iter = 600, double ftol = 1e-10,
                               double xtol = 1e-9) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += step;
  for (int i = 0; i <= n; ++i) fv[i] = f(pts[i]);

  auto order = [&] {
    for (int i = 1; i <= n; ++i)
      for (int j = i; j > 0 && fv[j] < fv[j - 1]; --j) {
        std::swap(fv[j], fv[j - 1]);
        std::swap(pts[j], pts[j - 1]);
      }
  };
  order();

  OptimResult res;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (std::fabs(fv[n] - fv[0]) < ftol) {
      double spread = 0.0;
      for (int i = 1; i <= n; ++i) spread = std::max(spread, (pts[i] - pts[0]).norm());
      if (spread < xtol) break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    Eigen::VectorXd xr = centroid + (centroid - pts[n]);
    const double fr = f(xr);
    if (fr < fv[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
      const double fe = f(xe);
      if (fe < fr) { pts[n] = xe; fv[n] = fe; }
      else { pts[n] = xr; fv[n] = fr; }
    } else if (fr < fv[n - 1]) {
      pts[n] = xr;
      fv[n] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (pts[n] - centroid);
      const double fc = f(xc);
      if (fc < fv[n]) { pts[n] = xc; fv[n] = fc; }
      else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          fv[i] = f(pts[i]);
        }
      }
    }
    order();
  }
  res.x = pts[0];
  res.fval = fv[0];
  res.iterations = it;
  res.converged = it < max_iter;
  return res;
}

inline Eigen::VectorXd numeric_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::fabs(x(i)));
    xp(i) = x(i) + hi;
    const double fp = f(xp);
    xp(i) = x(i) - hi;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * hi);
  }
  return g;
}

// BFGS with backtracking line search and numerical gradients; minimizes f.
inline OptimResult bfgs_min(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, int max_iter = 200,
                            double gtol = 1e-7) {
  const int n = static_cast<int>(x0.size());
  Eigen::VectorXd x = x0;
  double fx = f(x);
  Eigen::VectorXd g = numeric_gradient(f, x);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  OptimResult res;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.norm() < gtol) break;
    Eigen::VectorXd p = -H * g;
    if (p.dot(g) > 0.0) p = -g;  // reset on loss of descent
    double t = 1.0;
    const double slope = g.dot(p);
    double fn = fx;
    Eigen::VectorXd xn = x;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + t * p;
      fn = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) { ok = true; break; }
      t *= 0.5;
    }
    if (!ok) break;
    Eigen::VectorXd gn = numeric_gradient(f, xn);
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::VectorXd Hy = H * y;
      H += ((sy + y.dot(Hy)) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    if ((xn - x).norm() < 1e-12 * std::max(1.0, x.norm()) &&
        std::fabs(fn - fx) < 1e-14 * std::max(1.0, std::fabs(fx))) {
      x = xn; fx = fn; g = gn;
      break;
    }
    x = xn;
    fx = fn;
    g = gn;
  }
  res.x = x;
  res.fval = fx;
  res.iterations = it;
  res.converged = g.norm() < 1e-4 || it < max_iter;
  return res;
}

}  // namespace acst
