#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "acst/copula.hpp"
#include "acst/errors.hpp"
#include "acst/parallel.hpp"
#include "acst/vi.hpp"

// Exact data-augmentation MCMC over the copula augmented posterior:
// Gibbs draws of (l~, w), then coordinate-wise adaptive random-walk
// Metropolis-Hastings on alpha, vech(G~) and nu~. Every proposal reprices
// the pseudo-data and the marginal Jacobian, so the chain is invariant for
// the exact copula-model posterior.

namespace acst {

struct McmcConfig {
  int sweeps = 27000;
  double burn_in_frac = 0.2;
  int thin = 10;
  std::uint64_t seed = 1;
  int k = 1;
  int quantile_grid = 401;
  bool pin_alpha_zero = false;
  double pin_nu = 0.0;
  double initial_step = 0.10;  // RW proposal sd before adaptation

  void validate() const {
    if (sweeps <= 0 || thin <= 0 || k <= 0)
      throw std::invalid_argument("McmcConfig: counts must be positive");
    if (!(burn_in_frac > 0.0 && burn_in_frac < 1.0))
      throw std::invalid_argument("McmcConfig: burn-in fraction outside (0,1)");
  }
};

struct PosteriorDraws {
  Eigen::MatrixXd draws;  // thinned packed theta, one row per retained sweep
  int d = 0, k = 0;
  Eigen::VectorXd acceptance;  // per coordinate, after adaptation froze
  double seconds = 0.0;
  int burn_in = 0;
};

namespace detail {

struct McmcContext {
  SkewTParams theta;
  Eigen::MatrixXd z;
  ObsCache cache;
  double jac = 0.0;        // sum_ij log f_{Z_j}(z_ij)
  double log_prior_v = 0.0;
  std::shared_ptr<const QuantileTable::KnotGrid> knots;
};

inline McmcContext make_mcmc_context(const Eigen::VectorXd& tv, const CopulaData& data,
                                     int d, int k, const PriorConfig& prior, int grid,
                                     std::shared_ptr<const QuantileTable::KnotGrid> hint) {
  McmcContext ctx;
  ctx.theta = theta_vec::unpack(tv, d, k);
  ctx.knots = (hint && std::fabs(hint->nu - ctx.theta.nu) <= 1e-12)
                  ? hint
                  : QuantileTable::shared_knots(ctx.theta.nu, grid);
  const int n = data.n();
  ctx.z.resize(n, d);
  std::vector<double> jac_col(static_cast<std::size_t>(d), 0.0);
  parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
    QuantileTable tab(ctx.theta.delta(static_cast<int>(j)), ctx.knots);
    double jj = 0.0;
    for (int i = 0; i < n; ++i) {
      double u = data.u(i, static_cast<int>(j));
      u = std::min(1.0 - 1e-9, std::max(1e-9, u));
      const double zz = tab.quantile(u);
      ctx.z(i, static_cast<int>(j)) = zz;
      jj += marginal_log_density(zz, ctx.theta.delta(static_cast<int>(j)), ctx.theta.nu);
    }
    jac_col[j] = jj;
  });
  ctx.jac = 0.0;
  for (double v : jac_col) ctx.jac += v;
  ctx.cache = make_obs_cache(ctx.z, ctx.theta);
  ctx.log_prior_v = log_prior(ctx.theta, prior);
  return ctx;
}

inline double mcmc_target(const McmcContext& ctx, const GibbsCarry& carry) {
  AugmentedState st(ctx.theta, carry.l_tilde, carry.w);
  return log_gr2_joint(ctx.z, st, &ctx.cache) - ctx.jac + ctx.log_prior_v;
}

}  // namespace detail

inline PosteriorDraws run_mcmc(const CopulaData& data, const PriorConfig& prior,
                               McmcConfig cfg) {
  cfg.validate();
  prior.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int d = data.d(), k = cfg.k;
  const int p = theta_vec::size(d, k);
  const int m = vech_size(d, k);
  const int burn_in = static_cast<int>(cfg.sweeps * cfg.burn_in_frac);

  Rng rng = Rng(cfg.seed).substream("mcmc");

  SgaConfig pin_cfg;
  pin_cfg.k = k;
  pin_cfg.pin_alpha_zero = cfg.pin_alpha_zero;
  pin_cfg.pin_nu = cfg.pin_nu;
  Eigen::VectorXd tv = initial_lambda(d, k, 0, pin_cfg).mu;
  const Eigen::ArrayXd mask = pin_mask(d, k, pin_cfg);

  detail::McmcContext ctx =
      detail::make_mcmc_context(tv, data, d, k, prior, cfg.quantile_grid, nullptr);
  GibbsCarry carry = GibbsCarry::init(data.n());

  Eigen::VectorXd log_step = Eigen::VectorXd::Constant(p, std::log(cfg.initial_step));
  Eigen::VectorXd adapt_count = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd accepts_post = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd accepts_burn = Eigen::VectorXd::Zero(p);
  long post_updates = 0, burn_updates = 0;

  PosteriorDraws out;
  out.d = d;
  out.k = k;
  out.burn_in = burn_in;
  std::vector<Eigen::VectorXd> kept;
  kept.reserve((cfg.sweeps - burn_in) / cfg.thin + 1);

  double target = detail::mcmc_target(ctx, carry);

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    const bool adapting = sweep < burn_in;
    carry.adapt = adapting;

    // Steps 1-2: latent Gibbs pass
    gibbs_latents(ctx.theta, ctx.cache, 1, rng, carry);
    target = detail::mcmc_target(ctx, carry);

    // Steps 3-5: coordinate-wise RW-MH; alpha block, then loadings, then nu~
    for (int c = m; c < m + d; ++c) {
      if (mask(c) == 0.0) continue;
      const double prop = tv(c) + std::exp(log_step(c)) * rng.normal();
      Eigen::VectorXd tvp = tv;
      tvp(c) = prop;
      detail::McmcContext ctxp =
          detail::make_mcmc_context(tvp, data, d, k, prior, cfg.quantile_grid, ctx.knots);
      const double tp = detail::mcmc_target(ctxp, carry);
      const bool acc = std::isfinite(tp) && std::log(rng.uniform()) < tp - target;
      if (acc) { tv = tvp; ctx = std::move(ctxp); target = tp; }
      if (adapting) {
        adapt_count(c) += 1.0;
        log_step(c) += ((acc ? 1.0 : 0.0) - 0.44) / std::sqrt(adapt_count(c) + 10.0);
        if (sweep >= burn_in / 2) { accepts_burn(c) += acc ? 1 : 0; ++burn_updates; }
      } else { accepts_post(c) += acc ? 1 : 0; ++post_updates; }
    }
    for (int c = 0; c < m; ++c) {
      const double prop = tv(c) + std::exp(log_step(c)) * rng.normal();
      Eigen::VectorXd tvp = tv;
      tvp(c) = prop;
      detail::McmcContext ctxp =
          detail::make_mcmc_context(tvp, data, d, k, prior, cfg.quantile_grid, ctx.knots);
      const double tp = detail::mcmc_target(ctxp, carry);
      const bool acc = std::isfinite(tp) && std::log(rng.uniform()) < tp - target;
      if (acc) { tv = tvp; ctx = std::move(ctxp); target = tp; }
      if (adapting) {
        adapt_count(c) += 1.0;
        log_step(c) += ((acc ? 1.0 : 0.0) - 0.44) / std::sqrt(adapt_count(c) + 10.0);
        if (sweep >= burn_in / 2) { accepts_burn(c) += acc ? 1 : 0; ++burn_updates; }
      } else { accepts_post(c) += acc ? 1 : 0; ++post_updates; }
    }
    {
      const int c = p - 1;
      if (mask(c) != 0.0) {
        const double prop = tv(c) + std::exp(log_step(c)) * rng.normal();
        Eigen::VectorXd tvp = tv;
        tvp(c) = prop;
        detail::McmcContext ctxp =
            detail::make_mcmc_context(tvp, data, d, k, prior, cfg.quantile_grid, nullptr);
        const double tp = detail::mcmc_target(ctxp, carry);
        const bool acc = std::isfinite(tp) && std::log(rng.uniform()) < tp - target;
        if (acc) { tv = tvp; ctx = std::move(ctxp); target = tp; }
        if (adapting) {
          adapt_count(c) += 1.0;
          log_step(c) += ((acc ? 1.0 : 0.0) - 0.44) / std::sqrt(adapt_count(c) + 10.0);
          if (sweep >= burn_in / 2) { accepts_burn(c) += acc ? 1 : 0; ++burn_updates; }
        } else { accepts_post(c) += acc ? 1 : 0; ++post_updates; }
      }
    }

    if (sweep == burn_in - 1 && burn_updates > 0) {
      // stuck-chain guard once adaptation freezes
      const int active = static_cast<int>((mask != 0.0).count());
      const double per_coord = static_cast<double>(burn_updates) / active;
      for (int c = 0; c < p; ++c) {
        if (mask(c) == 0.0) continue;
        if (accepts_burn(c) / per_coord < 0.01)
          throw ConvergenceError("run_mcmc: coordinate " + std::to_string(c) +
                                     " stuck after adaptation",
                                 accepts_burn(c) / per_coord);
      }
    }

    if (sweep >= burn_in && (sweep - burn_in) % cfg.thin == 0) kept.push_back(tv);
  }

  out.draws.resize(static_cast<int>(kept.size()), p);
  for (std::size_t i = 0; i < kept.size(); ++i) out.draws.row(static_cast<int>(i)) = kept[i];
  out.acceptance = post_updates > 0
                       ? (accepts_post / (static_cast<double>(post_updates) /
                                          std::max(1, static_cast<int>((mask != 0.0).count()))))
                             .eval()
                       : Eigen::VectorXd::Zero(p).eval();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Geweke z-scores comparing early and late window means, spectral variance
// by a Bartlett-windowed long-run variance estimate.
inline Eigen::VectorXd geweke_diagnostic(const Eigen::MatrixXd& chain,
                                         double first_frac = 0.1, double last_frac = 0.5) {
  const int n = static_cast<int>(chain.rows());
  if (n < 1000) throw std::invalid_argument("geweke_diagnostic: chain shorter than 1000");
  if (!(first_frac > 0 && last_frac > 0 && first_frac + last_frac <= 1.0))
    throw std::invalid_argument("geweke_diagnostic: bad window fractions");

  auto long_run_var = [](const Eigen::VectorXd& x) {
    const int nw = static_cast<int>(x.size());
    const double mu = x.mean();
    const Eigen::VectorXd c = x.array() - mu;
    const int L = std::max(4, static_cast<int>(4.0 * std::pow(nw / 100.0, 2.0 / 9.0)));
    double s = c.squaredNorm() / nw;
    if (s <= 0.0) throw std::invalid_argument("geweke_diagnostic: zero-variance chain");
    for (int l = 1; l <= L && l < nw; ++l) {
      double g = 0.0;
      for (int t = l; t < nw; ++t) g += c(t) * c(t - l);
      g /= nw;
      s += 2.0 * (1.0 - static_cast<double>(l) / (L + 1.0)) * g;
    }
    return std::max(s, 1e-300);
  };

  const int na = static_cast<int>(n * first_frac);
  const int nb = static_cast<int>(n * last_frac);
  Eigen::VectorXd z(chain.cols());
  for (int j = 0; j < chain.cols(); ++j) {
    const Eigen::VectorXd a = chain.col(j).head(na);
    const Eigen::VectorXd b = chain.col(j).tail(nb);
    const double va = long_run_var(a), vb = long_run_var(b);
    z(j) = (a.mean() - b.mean()) / std::sqrt(va / na + vb / nb);
  }
  return z;
}

}  // namespace acst
