#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "acst/errors.hpp"
#include "acst/factor_corr.hpp"
#include "acst/parallel.hpp"
#include "acst/skewt.hpp"

// Copula-model likelihood stack: pseudo-data transform through the margin
// quantile tables, the GR2 joint density of (z, l~, w) given theta, priors,
// and the log augmented posterior.
//
// Two scalar targets live here. log_gr2_joint treats the pseudo-data as
// given, which is the function the analytic gradient differentiates.
// log_extended_likelihood additionally recomputes z from u at the current
// theta and carries the marginal Jacobian, which is the exact copula-model
// objective used by the MCMC baseline.

namespace acst {

struct CopulaData {
  Eigen::MatrixXd u;  // n x d, entries strictly inside (0,1)

  CopulaData() = default;
  explicit CopulaData(Eigen::MatrixXd u_) : u(std::move(u_)) {
    if (u.rows() < 1 || u.cols() < 1 || !u.allFinite())
      throw std::invalid_argument("CopulaData: bad matrix");
    if ((u.array() <= 0.0).any() || (u.array() >= 1.0).any())
      throw std::invalid_argument("CopulaData: entries must lie strictly in (0,1)");
  }
  int n() const { return static_cast<int>(u.rows()); }
  int d() const { return static_cast<int>(u.cols()); }
};

struct PriorConfig {
  double gdp_a = 3.0;    // a1
  double gdp_b = 1.0;    // b1
  double alpha_sd = 5.0; // sigma
  double nu_shape = 3.0; // a2, on (nu - 2)
  double nu_rate = 0.2;  // b2

  void validate() const {
    if (!(gdp_a > 0 && gdp_b > 0 && alpha_sd > 0 && nu_shape > 0 && nu_rate > 0))
      throw std::invalid_argument("PriorConfig: hyperparameters must be positive");
  }
};

struct AugmentedState {
  SkewTParams theta;
  Eigen::VectorXd l_tilde;  // n, positive
  Eigen::VectorXd w;        // n, positive

  AugmentedState() = default;
  AugmentedState(SkewTParams th, Eigen::VectorXd l, Eigen::VectorXd w_)
      : theta(std::move(th)), l_tilde(std::move(l)), w(std::move(w_)) {
    if (l_tilde.size() != w.size())
      throw std::invalid_argument("AugmentedState: latent size mismatch");
    if ((l_tilde.array() <= 0.0).any() || (w.array() <= 0.0).any())
      throw std::invalid_argument("AugmentedState: latents must be positive");
  }
  int n() const { return static_cast<int>(l_tilde.size()); }
};

// Unconstrained packing theta = [vech(G~), alpha, log(nu-2)].
namespace theta_vec {

inline int size(int d, int k) { return vech_size(d, k) + d + 1; }

inline Eigen::VectorXd pack(const SkewTParams& th) {
  const int m = vech_size(th.loadings.d, th.loadings.k);
  Eigen::VectorXd v(size(th.loadings.d, th.loadings.k));
  v.head(m) = th.loadings.vech_tilde();
  v.segment(m, th.loadings.d) = th.alpha;
  v(v.size() - 1) = std::log(th.nu - 2.0);
  return v;
}

inline SkewTParams unpack(const Eigen::VectorXd& v, int d, int k) {
  const int m = vech_size(d, k);
  if (v.size() != size(d, k)) throw std::invalid_argument("theta_vec: wrong length");
  FactorLoadings L = loadings_from_vech(v.head(m), d, k);
  return SkewTParams(std::move(L), v.segment(m, d), 2.0 + std::exp(v(v.size() - 1)));
}

}  // namespace theta_vec

// Margin quantile tables with the 1e-12 rebuild guard; the standard-t knot
// layout is shared across margins (one set of t quantiles per nu).
class MarginTables {
 public:
  explicit MarginTables(int grid_size = 401) : grid_size_(grid_size) {}

  void update(const Eigen::VectorXd& delta, double nu) {
    const int d = static_cast<int>(delta.size());
    const bool nu_changed = !(std::fabs(nu - nu_) <= 1e-12);
    if (nu_changed) {
      knots_ = QuantileTable::shared_knots(nu, grid_size_);
      nu_ = nu;
      tabs_.assign(d, nullptr);
      cached_delta_ = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
    }
    if (tabs_.size() != static_cast<std::size_t>(d)) {
      tabs_.assign(d, nullptr);
      cached_delta_ = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<int> stale;
    for (int j = 0; j < d; ++j)
      if (!tabs_[j] || !(std::fabs(delta(j) - cached_delta_(j)) <= 1e-12)) stale.push_back(j);
    if (!stale.empty()) {
      parallel_for(stale.size(), [&](std::size_t s) {
        const int j = stale[s];
        tabs_[j] = std::make_shared<QuantileTable>(delta(j), knots_);
      });
      for (int j : stale) cached_delta_(j) = delta(j);
    }
  }

  void update(const SkewTParams& th) { update(th.delta, th.nu); }

  const QuantileTable& margin(int j) const { return *tabs_.at(j); }
  int dims() const { return static_cast<int>(tabs_.size()); }

 private:
  int grid_size_;
  double nu_ = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd cached_delta_;
  std::shared_ptr<const QuantileTable::KnotGrid> knots_;
  std::vector<std::shared_ptr<QuantileTable>> tabs_;
};

struct ClampReport {
  long clamped = 0;
  long total = 0;
};

// z_ij = F_j^{-1}(u_ij); u within 1e-9 of {0,1} clamped and counted
inline Eigen::MatrixXd pseudo_data(const CopulaData& data, const MarginTables& tables,
                                   ClampReport* report = nullptr) {
  const int n = data.n(), d = data.d();
  if (tables.dims() != d) throw std::invalid_argument("pseudo_data: table dimension mismatch");
  Eigen::MatrixXd z(n, d);
  std::vector<long> clamped_per_block(static_cast<std::size_t>(d), 0);
  parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
    const QuantileTable& tab = tables.margin(static_cast<int>(j));
    long c = 0;
    for (int i = 0; i < n; ++i) {
      double u = data.u(i, j);
      if (u < 1e-9) { u = 1e-9; ++c; }
      else if (u > 1.0 - 1e-9) { u = 1.0 - 1e-9; ++c; }
      z(i, j) = tab.quantile(u);
    }
    clamped_per_block[j] = c;
  });
  if (report) {
    report->total = static_cast<long>(n) * d;
    report->clamped = 0;
    for (long c : clamped_per_block) report->clamped += c;
  }
  return z;
}

// Convenience wrapper building fresh tables for theta.
inline Eigen::MatrixXd pseudo_data(const CopulaData& data, const SkewTParams& theta,
                                   ClampReport* report = nullptr, int grid_size = 401) {
  MarginTables tables(grid_size);
  tables.update(theta);
  return pseudo_data(data, tables, report);
}

// Per-observation quadratics reused by likelihood, gradient, and Gibbs.
struct ObsCache {
  Eigen::VectorXd q;  // z_i' C0 z_i
  Eigen::VectorXd b;  // delta' C0 z_i
};

inline ObsCache make_obs_cache(const Eigen::MatrixXd& z, const SkewTParams& th) {
  ObsCache c;
  const Eigen::MatrixXd zc0 = z * th.skew.c0;  // n x d
  c.q = (zc0.array() * z.array()).rowwise().sum();
  c.b = z * (th.skew.c0 * th.delta);
  return c;
}

// log p(z, l~, w | theta) under GR2, z treated as given (Part B.2 scalar
// plus normalizing constants).
inline double log_gr2_joint(const Eigen::MatrixXd& z, const AugmentedState& state,
                            const ObsCache* cache = nullptr) {
  const SkewTParams& th = state.theta;
  const int n = static_cast<int>(z.rows()), d = static_cast<int>(z.cols());
  if (state.n() != n) throw std::invalid_argument("log_gr2_joint: latent length mismatch");
  ObsCache local;
  if (!cache) {
    local = make_obs_cache(z, th);
    cache = &local;
  }
  const double nu = th.nu;
  const double dcd = th.gibbs_a - 1.0;  // delta' C0 delta
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = state.w(i), l = state.l_tilde(i);
    s += (0.5 * (d + nu) - 1.0) * std::log(w);
    s -= 0.5 * (w * cache->q(i) - 2.0 * l * std::sqrt(w) * cache->b(i) + l * l * dcd +
                nu * w + l * l);
  }
  s -= 0.5 * n * th.skew.log_det;
  s += n * (0.5 * nu * std::log(0.5 * nu) - log_gamma(0.5 * nu));
  s += n * std::log(2.0) - 0.5 * n * (d + 1) * kLog2Pi;
  return s;
}

inline double log_gdp(double x, double a, double b) {
  return std::log(0.5 * a / b) - (a + 1.0) * std::log1p(std::fabs(x) / b);
}

// log p(theta): GDP on loadings (log-diagonal with Jacobian), normal on
// alpha, Gamma on nu - 2 expressed in nu~ = log(nu - 2).
inline double log_prior(const SkewTParams& th, const PriorConfig& cfg) {
  cfg.validate();
  double s = 0.0;
  const int d = th.loadings.d, k = th.loadings.k;
  for (int c = 0; c < k; ++c) {
    s += log_gdp(th.loadings.G(c, c), cfg.gdp_a, cfg.gdp_b) + std::log(th.loadings.G(c, c));
    for (int r = c + 1; r < d; ++r) s += log_gdp(th.loadings.G(r, c), cfg.gdp_a, cfg.gdp_b);
  }
  for (int j = 0; j < d; ++j) {
    const double a = th.alpha(j) / cfg.alpha_sd;
    s += -0.5 * a * a - std::log(cfg.alpha_sd) - 0.5 * kLog2Pi;
  }
  const double nu_t = std::log(th.nu - 2.0);
  s += gamma_log_pdf(th.nu - 2.0, cfg.nu_shape, cfg.nu_rate) + nu_t;
  return s;
}

// The scalar Table 1 differentiates: GR2 joint at fixed pseudo-data plus
// the prior.
inline double log_h_given_z(const Eigen::MatrixXd& z, const AugmentedState& state,
                            const PriorConfig& cfg, const ObsCache* cache = nullptr) {
  return log_gr2_joint(z, state, cache) + log_prior(state.theta, cfg);
}

// Extended likelihood of the copula data: GR2 joint at z(u; theta) minus
// the marginal skew-t Jacobian (marginal-model factors are dropped).
inline double log_extended_likelihood(const CopulaData& data, const AugmentedState& state,
                                      const MarginTables& tables,
                                      ClampReport* report = nullptr) {
  const Eigen::MatrixXd z = pseudo_data(data, tables, report);
  double jac = 0.0;
  const int n = data.n(), d = data.d();
  for (int j = 0; j < d; ++j) {
    const double dj = state.theta.delta(j);
    for (int i = 0; i < n; ++i) jac += marginal_log_density(z(i, j), dj, state.theta.nu);
  }
  return log_gr2_joint(z, state) - jac;
}

inline double log_extended_likelihood(const CopulaData& data, const AugmentedState& state,
                                      ClampReport* report = nullptr) {
  MarginTables tables;
  tables.update(state.theta);
  return log_extended_likelihood(data, state, tables, report);
}

// h(psi) up to a constant: extended likelihood times prior.
inline double log_augmented_posterior(const CopulaData& data, const AugmentedState& state,
                                      const PriorConfig& cfg,
                                      ClampReport* report = nullptr) {
  return log_extended_likelihood(data, state, report) + log_prior(state.theta, cfg);
}

// log c(u) = log f_Z(z) - sum_j log f_{Z_j}(z_j) at z = marginal quantiles.
inline double copula_log_density(const Eigen::VectorXd& u, const SkewTParams& theta,
                                 const MarginTables& tables) {
  const int d = theta.dim();
  if (u.size() != d) throw std::invalid_argument("copula_log_density: dimension mismatch");
  Eigen::VectorXd z(d);
  double jac = 0.0;
  for (int j = 0; j < d; ++j) {
    double uj = u(j);
    if (!(uj > 0.0 && uj < 1.0))
      throw std::invalid_argument("copula_log_density: u outside (0,1)");
    uj = std::min(1.0 - 1e-9, std::max(1e-9, uj));
    z(j) = tables.margin(j).quantile(uj);
    jac += marginal_log_density(z(j), theta.delta(j), theta.nu);
  }
  return log_density_joint(z, theta) - jac;
}

inline double copula_log_density(const Eigen::VectorXd& u, const SkewTParams& theta) {
  MarginTables tables;
  tables.update(theta);
  return copula_log_density(u, theta, tables);
}

}  // namespace acst
