#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <memory>
#include <vector>

#include "acst/errors.hpp"
#include "acst/factor_corr.hpp"
#include "acst/math/interp.hpp"
#include "acst/math/quadrature.hpp"
#include "acst/math/rng.hpp"
#include "acst/math/special.hpp"

// AC skew-t kernels: joint and marginal densities, marginal CDF by adaptive
// quadrature, interpolated quantile tables, alpha<->delta maps, and the two
// generative samplers GR1/GR2.

namespace acst {

inline Eigen::VectorXd delta_from_alpha(const Eigen::VectorXd& alpha,
                                        const CorrelationMatrix& corr) {
  const Eigen::VectorXd oa = corr.omega_bar * alpha;
  return oa / std::sqrt(1.0 + alpha.dot(oa));
}

inline Eigen::VectorXd alpha_from_delta(const Eigen::VectorXd& delta,
                                        const CorrelationMatrix& corr) {
  const Eigen::VectorXd od = corr.inverse * delta;
  const double dod = delta.dot(od);
  if (!(dod < 1.0 - 1e-10))
    throw BoundaryError("alpha_from_delta: delta' Omega^{-1} delta = " +
                        std::to_string(dod));
  return od / std::sqrt(1.0 - dod);
}

struct SkewTParams {
  FactorLoadings loadings;
  Eigen::VectorXd alpha;
  double nu = 0.0;
  // derived
  CorrelationMatrix corr;
  Eigen::VectorXd delta;
  SkewInverse skew;            // C0 = (Omega - dd')^{-1}, log det(Omega - dd')
  Eigen::MatrixXd chol_skew;   // lower chol of (Omega - dd')
  double gibbs_a = 1.0;        // 1 + d' C0 d = 1 / (1 - d' Omega^{-1} d)

  SkewTParams() = default;
  SkewTParams(FactorLoadings L, Eigen::VectorXd a, double nu_)
      : loadings(std::move(L)), alpha(std::move(a)), nu(nu_) {
    if (!(nu > 2.0)) throw std::invalid_argument("SkewTParams: nu must exceed 2");
    if (alpha.size() != loadings.d || !alpha.allFinite())
      throw std::invalid_argument("SkewTParams: bad alpha");
    corr = build_correlation(loadings);
    delta = delta_from_alpha(alpha, corr);
    skew = woodbury_inverse(corr, delta);
    gibbs_a = 1.0 / (1.0 - skew.dod);
    Eigen::MatrixXd S = corr.omega_bar - delta * delta.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
      S.diagonal().array() += 1e-10;
      llt.compute(S);
      if (llt.info() != Eigen::Success)
        throw BoundaryError("SkewTParams: Omega - delta delta' not p.d.");
    }
    chol_skew = llt.matrixL();
  }

  int dim() const { return loadings.d; }
};

// log of 2 f_t(z; 0, Omega, nu) T(alpha'z sqrt((nu+d)/(nu+M)); nu+d)
inline double log_density_joint(const Eigen::VectorXd& z, const SkewTParams& p) {
  if (!z.allFinite() || z.size() != p.dim())
    throw std::invalid_argument("log_density_joint: bad z");
  const int d = p.dim();
  const double m = z.dot(p.corr.inverse * z);
  const double logt = log_gamma(0.5 * (p.nu + d)) - log_gamma(0.5 * p.nu) -
                      0.5 * d * std::log(p.nu * kPi) - 0.5 * p.corr.log_det -
                      0.5 * (p.nu + d) * std::log1p(m / p.nu);
  const double arg = p.alpha.dot(z) * std::sqrt((p.nu + d) / (p.nu + m));
  return std::log(2.0) + logt + std::log(t_cdf(arg, p.nu + d));
}

inline double marginal_log_density(double z, double delta_j, double nu) {
  if (!(std::fabs(delta_j) < 1.0)) throw BoundaryError("marginal density: |delta| >= 1");
  if (!(nu > 2.0)) throw std::invalid_argument("marginal density: nu must exceed 2");
  const double aj = delta_j / std::sqrt(1.0 - delta_j * delta_j);
  const double arg = aj * z * std::sqrt((nu + 1.0) / (nu + z * z));
  return std::log(2.0) + t_log_pdf(z, nu) + std::log(t_cdf(arg, nu + 1.0));
}

inline double marginal_density(double z, double delta_j, double nu) {
  return std::exp(marginal_log_density(z, delta_j, nu));
}

namespace detail {

inline constexpr double kTailProb = 2.5e-8;

// limits of T(alpha_j z sqrt((nu+1)/(nu+z^2)); nu+1) as z -> -inf / +inf
inline double tail_const_low(double delta_j, double nu) {
  const double aj = delta_j / std::sqrt(1.0 - delta_j * delta_j);
  return t_cdf(-aj * std::sqrt(nu + 1.0), nu + 1.0);
}
inline double tail_const_high(double delta_j, double nu) {
  const double aj = delta_j / std::sqrt(1.0 - delta_j * delta_j);
  return t_cdf(aj * std::sqrt(nu + 1.0), nu + 1.0);
}

// mass below the p-quantile of the standard t, integrated in probability
// coordinates where the integrand 2 T(...) is bounded and slowly varying
inline double tail_mass_below(double p, double delta_j, double nu) {
  const double aj = delta_j / std::sqrt(1.0 - delta_j * delta_j);
  auto h = [&](double q) {
    const double y = t_quantile(q, nu);
    return 2.0 * t_cdf(aj * y * std::sqrt((nu + 1.0) / (nu + y * y)), nu + 1.0);
  };
  return gl_integrate(h, 0.0, p, 15);
}
inline double tail_mass_above(double p, double delta_j, double nu) {
  const double aj = delta_j / std::sqrt(1.0 - delta_j * delta_j);
  auto h = [&](double q) {
    const double y = t_quantile(q, nu);
    return 2.0 * t_cdf(aj * y * std::sqrt((nu + 1.0) / (nu + y * y)), nu + 1.0);
  };
  return gl_integrate(h, 1.0 - p, 1.0, 15);
}

inline double marginal_mode(double delta_j, double nu) {
  // golden-section maximum of the unimodal marginal density
  double a = -4.0, b = 4.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = marginal_log_density(c, delta_j, nu);
  double fd = marginal_log_density(d, delta_j, nu);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = marginal_log_density(c, delta_j, nu);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = marginal_log_density(d, delta_j, nu);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Marginal distribution function by adaptive Gauss-Kronrod on the closed
// form density, split at the mode; absolute error <= 1e-8.
inline double marginal_cdf(double z, double delta_j, double nu) {
  if (!(std::fabs(delta_j) < 1.0)) throw BoundaryError("marginal_cdf: |delta| >= 1");
  if (!(nu > 2.0)) throw std::invalid_argument("marginal_cdf: nu must exceed 2");
  if (!std::isfinite(z)) throw std::invalid_argument("marginal_cdf: non-finite z");
  const double pz = t_cdf(z, nu);
  if (pz <= detail::kTailProb) return detail::tail_mass_below(pz, delta_j, nu);
  if (1.0 - pz <= detail::kTailProb)
    return 1.0 - detail::tail_mass_above(1.0 - pz, delta_j, nu);

  auto f = [&](double t) { return marginal_density(t, delta_j, nu); };
  const double mode = detail::marginal_mode(delta_j, nu);
  if (z <= mode) {
    const double zl = t_quantile(detail::kTailProb, nu);
    double acc = detail::tail_mass_below(detail::kTailProb, delta_j, nu);
    if (z > zl) acc += adaptive_gk(f, zl, z, 5e-10);
    return std::min(1.0, std::max(0.0, acc));
  }
  const double zh = t_quantile(1.0 - detail::kTailProb, nu);
  double acc = detail::tail_mass_above(detail::kTailProb, delta_j, nu);
  if (z < zh) acc += adaptive_gk(f, z, zh, 5e-10);
  return std::min(1.0, std::max(0.0, 1.0 - acc));
}

// Interpolated quantile/CDF table for one margin. Knots follow a standard-t
// stretched grid; the quantile interpolant works in the probit coordinate
// g = Phi^{-1}(u), which keeps the round-trip error below 1e-6 across the
// span while queries need only the normal quantile.
class QuantileTable {
 public:
  struct KnotGrid {
    double nu = 0.0;
    std::vector<double> p;  // knot probabilities of the standard t
    std::vector<double> z;  // t quantiles of p
    int n_tail = 0;
  };

  QuantileTable(double delta_j, double nu, int grid_size = 401)
      : delta_(delta_j), nu_(nu) {
    if (!(std::fabs(delta_j) < 1.0)) throw BoundaryError("QuantileTable: |delta| >= 1");
    if (!(nu > 2.0)) throw std::invalid_argument("QuantileTable: nu must exceed 2");
    if (grid_size < 129) throw std::invalid_argument("QuantileTable: grid too small");
    build(shared_knots(nu, grid_size));
  }

  QuantileTable(double delta_j, std::shared_ptr<const KnotGrid> knots)
      : delta_(delta_j), nu_(knots->nu) {
    if (!(std::fabs(delta_j) < 1.0)) throw BoundaryError("QuantileTable: |delta| >= 1");
    build(std::move(knots));
  }

  // z-knot layout shared across margins with a common nu
  static std::shared_ptr<const KnotGrid> shared_knots(double nu, int grid_size = 401) {
    auto kg = std::make_shared<KnotGrid>();
    kg->nu = nu;
    const int n_tail = 32;
    const int n_central = grid_size - 2 * n_tail;
    kg->n_tail = n_tail;
    const double p_lo = detail::kTailProb, p_c = 0.004;
    const double yl = t_quantile(p_lo, nu), yc = t_quantile(p_c, nu);
    for (int i = 0; i < n_tail; ++i)
      kg->p.push_back(t_cdf(yl + (yc - yl) * i / n_tail, nu));
    for (int i = 0; i < n_central; ++i)
      kg->p.push_back(p_c + (1.0 - 2.0 * p_c) * i / (n_central - 1));
    for (int i = 1; i <= n_tail; ++i)
      kg->p.push_back(t_cdf(-yc + (yc - yl) * i / n_tail, nu));
    kg->z.reserve(kg->p.size());
    for (double p : kg->p) kg->z.push_back(t_quantile(p, nu));
    return kg;
  }

  double delta() const { return delta_; }
  double nu() const { return nu_; }

  // inverse CDF; analytic t-tail beyond the grid span (counted)
  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0))
      throw std::domain_error("QuantileTable::quantile: u outside (0,1)");
    if (u < f_lo_) {
      ++extrapolations_;
      return t_quantile(std::min(1.0, u / (2.0 * c_lo_)), nu_);
    }
    if (u > f_hi_) {
      ++extrapolations_;
      return t_quantile(1.0 - std::min(1.0, (1.0 - u) / (2.0 * c_hi_)), nu_);
    }
    return quant_(norm_quantile(u));
  }

  // forward CDF from the same knots; analytic t-tail beyond the span
  double cdf(double z) const {
    if (z < z_front_) return std::min(1.0, 2.0 * c_lo_ * t_cdf(z, nu_));
    if (z > z_back_) return std::max(0.0, 1.0 - 2.0 * c_hi_ * (1.0 - t_cdf(z, nu_)));
    return std::min(1.0, std::max(0.0, cdf_(z)));
  }

  long extrapolation_count() const { return extrapolations_.load(); }

 private:
  void build(std::shared_ptr<const KnotGrid> kg) {
    nu_ = kg->nu;
    const auto& z = kg->z;
    const auto& p = kg->p;
    const int n = static_cast<int>(z.size());
    std::vector<double> F(n), dens(n);
    for (int i = 0; i < n; ++i) dens[i] = marginal_density(z[i], delta_, nu_);

    F[0] = detail::tail_mass_below(p[0], delta_, nu_);
    auto f = [&](double t) { return marginal_density(t, delta_, nu_); };
    for (int i = 1; i < n; ++i) {
      const bool tail = (i <= kg->n_tail) || (i > n - 1 - kg->n_tail);
      F[i] = F[i - 1] + gl_integrate(f, z[i - 1], z[i], tail ? 15 : 7);
    }

    c_lo_ = detail::tail_const_low(delta_, nu_);
    c_hi_ = detail::tail_const_high(delta_, nu_);
    z_front_ = z.front();
    z_back_ = z.back();
    f_lo_ = F.front();
    f_hi_ = F.back();

    std::vector<double> g(n), slope(n);
    for (int i = 0; i < n; ++i) {
      g[i] = norm_quantile(std::min(1.0 - 1e-16, std::max(1e-300, F[i])));
      slope[i] = norm_pdf(g[i]) / dens[i];
    }
    quant_ = MonotoneCubic(g, z, slope);
    cdf_ = MonotoneCubic(z, F, dens);
  }

  double delta_ = 0.0, nu_ = 0.0;
  double c_lo_ = 0.5, c_hi_ = 0.5;
  double z_front_ = 0.0, z_back_ = 0.0, f_lo_ = 0.0, f_hi_ = 1.0;
  MonotoneCubic quant_, cdf_;
  mutable std::atomic<long> extrapolations_{0};
};

struct SkewTDraws {
  Eigen::MatrixXd z;       // n x d
  Eigen::VectorXd l_tilde; // latent positive normals (GR2) or t draws (GR1)
  Eigen::VectorXd w;       // latent gamma mixing (GR2 only)
};

// W ~ Gamma(nu/2, nu/2); L~ ~ N(0,1)+; Z | l,w ~ N(delta l w^{-1/2}, w^{-1}(Omega-dd'))
inline SkewTDraws sample_gr2(int n, const SkewTParams& p, Rng& rng) {
  const int d = p.dim();
  SkewTDraws out;
  out.z.resize(n, d);
  out.l_tilde.resize(n);
  out.w.resize(n);
  Eigen::VectorXd eps(d);
  for (int i = 0; i < n; ++i) {
    const double w = rng.gamma(0.5 * p.nu, 0.5 * p.nu);
    const double l = rng.normal_positive();
    for (int j = 0; j < d; ++j) eps(j) = rng.normal();
    const double s = 1.0 / std::sqrt(w);
    out.z.row(i) = (p.delta * (l * s) + s * (p.chol_skew * eps)).transpose();
    out.l_tilde(i) = l;
    out.w(i) = w;
  }
  return out;
}

// L ~ t_1(0,1,nu)+; Z | L ~ t_d(delta L, ((nu+L^2)/(nu+1))(Omega-dd'), nu+1)
inline SkewTDraws sample_gr1(int n, const SkewTParams& p, Rng& rng) {
  const int d = p.dim();
  SkewTDraws out;
  out.z.resize(n, d);
  out.l_tilde.resize(n);
  out.w.resize(0);
  Eigen::VectorXd eps(d);
  for (int i = 0; i < n; ++i) {
    const double L = rng.student_t_positive(p.nu);
    for (int j = 0; j < d; ++j) eps(j) = rng.normal();
    const double chi = rng.chi_squared(p.nu + 1.0);
    const double scale = std::sqrt((p.nu + L * L) / (p.nu + 1.0)) *
                         std::sqrt((p.nu + 1.0) / chi);
    out.z.row(i) = (p.delta * L + scale * (p.chol_skew * eps)).transpose();
    out.l_tilde(i) = L;
  }
  return out;
}

}  // namespace acst
