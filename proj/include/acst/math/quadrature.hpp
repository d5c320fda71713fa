#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "acst/math/special.hpp"

// Gauss-Legendre rules (computed once per order, cached) and an adaptive
// Gauss-Kronrod 7-15 integrator.

namespace acst {

struct QuadRule {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

// Newton iteration on Legendre polynomials; accurate to ~1e-15.
inline QuadRule make_gauss_legendre(int n) {
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  return r;
}

inline const QuadRule& gauss_legendre(int n) {
  static std::map<int, QuadRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

template <class F>
double gl_integrate(const F& f, double a, double b, int n) {
  const QuadRule& r = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

namespace detail {

// QUADPACK 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr double kK15Nodes[8] = {
    0.0,
    0.2077849550078985, 0.4058451513773972, 0.5860872354676911,
    0.7415311855993945, 0.8648644233597691, 0.9491079123427585,
    0.9914553711208126};
inline constexpr double kK15Weights[8] = {
    0.2094821410847278,
    0.2044329400752989, 0.1903505780647854, 0.1690047266392679,
    0.1406532597155259, 0.1047900103222502, 0.0630920926299786,
    0.0229353220105292};
inline constexpr double kG7Weights[4] = {
    0.4179591836734694,   // node 0
    0.3818300505051189,   // nodes +-k15[2]
    0.2797053914892767,   // nodes +-k15[4]
    0.1294849661688697};  // nodes +-k15[6]

template <class F>
void gk15(const F& f, double a, double b, double& result, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double f0 = f(c);
  double resk = kK15Weights[0] * f0;
  double resg = kG7Weights[0] * f0;
  for (int j = 1; j < 8; ++j) {
    const double fl = f(c - h * kK15Nodes[j]);
    const double fr = f(c + h * kK15Nodes[j]);
    resk += kK15Weights[j] * (fl + fr);
    if (j % 2 == 0) resg += kG7Weights[j / 2] * (fl + fr);
  }
  result = resk * h;
  err = std::fabs((resk - resg) * h);
}

template <class F>
double adaptive_gk_impl(const F& f, double a, double b, double tol, int depth,
                        double whole, double whole_err) {
  if (whole_err <= tol || depth <= 0) return whole;
  const double m = 0.5 * (a + b);
  double left, left_err, right, right_err;
  gk15(f, a, m, left, left_err);
  gk15(f, m, b, right, right_err);
  return adaptive_gk_impl(f, a, m, 0.5 * tol, depth - 1, left, left_err) +
         adaptive_gk_impl(f, m, b, 0.5 * tol, depth - 1, right, right_err);
}

}  // namespace detail

// Adaptive Gauss-Kronrod with absolute tolerance.
template <class F>
double adaptive_gk(const F& f, double a, double b, double abs_tol = 1e-10,
                   int max_depth = 40) {
  double whole, err;
  detail::gk15(f, a, b, whole, err);
  return detail::adaptive_gk_impl(f, a, b, abs_tol, max_depth, whole, err);
}

}  // namespace acst
