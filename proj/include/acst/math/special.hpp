#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

// Scalar special functions: normal, student-t, gamma/beta incomplete
// integrals and their inverses. All routines are pure and thread-safe.

namespace acst {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.83787706640934548356;
inline constexpr double kSqrt2 = 1.41421356237309504880;

namespace detail {
inline constexpr double kTiny = std::numeric_limits<double>::min();
}

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

inline double norm_log_pdf(double x) { return -0.5 * (x * x + kLog2Pi); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Wichura's AS241 (PPND16). Relative error ~1e-15 over (0,1).
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p outside (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

inline double log_gamma(double x) { return std::lgamma(x); }

// Asymptotic Bernoulli series with upward recurrence below x = 6.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: x must be positive");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv;
  // B_2/(2 x^2) + B_4/(4 x^4) + ...
  result -= inv2 * (1.0 / 12.0 -
            inv2 * (1.0 / 120.0 -
            inv2 * (1.0 / 252.0 -
            inv2 * (1.0 / 240.0 -
            inv2 * (1.0 / 132.0 -
            inv2 * (691.0 / 32760.0 -
            inv2 * (1.0 / 12.0)))))));
  return result;
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Inverse of inc_beta in x: Newton with bisection safeguard.
inline double inc_beta_inv(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  double x = 0.5;
  {
    // Initial guess (Abramowitz & Stegun 26.5.22)
    const double yp = norm_quantile(1.0 - p);
    const double al = 1.0 / (2.0 * a - 1.0), be = 1.0 / (2.0 * b - 1.0);
    if (a > 1.0 && b > 1.0) {
      const double lam = (yp * yp - 3.0) / 6.0;
      const double h = 2.0 / (al + be);
      const double w = yp * std::sqrt(h + lam) / h -
                       (be - al) * (lam + 5.0 / 6.0 - 2.0 / (3.0 * h));
      x = a / (a + b * std::exp(2.0 * w));
    } else {
      const double lna = std::log(a / (a + b)), lnb = std::log(b / (a + b));
      const double t = std::exp(a * lna) / a, u = std::exp(b * lnb) / b;
      const double w = t + u;
      x = (p < t / w) ? std::pow(a * w * p, 1.0 / a)
                      : 1.0 - std::pow(b * w * (1.0 - p), 1.0 / b);
    }
    if (!(x > 0.0 && x < 1.0)) x = 0.5;
  }
  const double lbeta = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  for (int it = 0; it < 100; ++it) {
    const double f = inc_beta(a, b, x) - p;
    if (f > 0.0) hi = x; else lo = x;
    const double logpdf = lbeta + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
    double step = f * std::exp(-logpdf);
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::fabs(xn - x) <= 1e-16 * std::max(1e-300, x)) { x = xn; break; }
    x = xn;
    if (hi - lo < 1e-16 * hi) break;
  }
  return x;
}

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

// Inverse of gamma_p in x.
inline double gamma_p_inv(double a, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0)
    throw std::domain_error("gamma_p_inv: p must be < 1");
  // Wilson-Hilferty start
  double x;
  {
    const double g = norm_quantile(p);
    const double t = 1.0 - 1.0 / (9.0 * a) + g / (3.0 * std::sqrt(a));
    x = a * t * t * t;
    if (!(x > 0.0)) x = a * std::exp((std::log(p) + log_gamma(a + 1.0)) / a);
    if (!(x > 0.0)) x = 1e-100;
  }
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const double f = gamma_p(a, x) - p;
    if (f > 0.0) hi = x; else lo = x;
    const double logpdf = (a - 1.0) * std::log(x) - x - log_gamma(a);
    double xn = x - f * std::exp(-logpdf);
    if (!(xn > lo && xn < hi))
      xn = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
    if (std::fabs(xn - x) <= 1e-15 * x) { x = xn; break; }
    x = xn;
  }
  return x;
}

// ---- Student-t ----

inline double t_log_pdf(double x, double nu) {
  return log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) -
         0.5 * std::log(nu * kPi) -
         0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

inline double t_pdf(double x, double nu) { return std::exp(t_log_pdf(x, nu)); }

inline double t_cdf(double x, double nu) {
  if (x == 0.0) return 0.5;
  const double w = nu / (nu + x * x);
  const double half_ib = 0.5 * inc_beta(0.5 * nu, 0.5, w);
  return (x > 0.0) ? 1.0 - half_ib : half_ib;
}

inline double t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("t_quantile: p outside (0,1)");
  if (p == 0.5) return 0.0;
  const double pp = (p < 0.5) ? p : 1.0 - p;
  const double w = inc_beta_inv(0.5 * nu, 0.5, 2.0 * pp);
  double x = (w > 0.0) ? std::sqrt(nu * (1.0 - w) / w)
                       : std::numeric_limits<double>::infinity();
  return (p < 0.5) ? -x : x;
}

// log-pdf of Gamma(shape, rate)
inline double gamma_log_pdf(double x, double shape, double rate) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - log_gamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

inline double gamma_quantile(double p, double shape, double rate) {
  return gamma_p_inv(shape, p) / rate;
}

inline double chi2_sf(double x, double k) { return gamma_q(0.5 * k, 0.5 * x); }

// Kolmogorov distribution survival Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_sf(double x) {
  if (x < 1e-3) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 101; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * s));
}

}  // namespace acst
