#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "acst/copula.hpp"
#include "acst/errors.hpp"
#include "acst/gradients.hpp"
#include "acst/math/rng.hpp"

// Hybrid variational inference: Gaussian factor approximation over theta,
// reparameterized gradients, nested Gibbs refresh of the per-observation
// latents, stochastic gradient ascent with ADADELTA learning rates.

namespace acst {

struct VariationalParams {
  Eigen::VectorXd mu;     // p
  Eigen::MatrixXd B;      // p x r, zero upper triangle
  Eigen::VectorXd d_vec;  // p

  int p() const { return static_cast<int>(mu.size()); }
  int r() const { return static_cast<int>(B.cols()); }

  void validate() const {
    if (B.rows() != mu.size() || d_vec.size() != mu.size())
      throw std::invalid_argument("VariationalParams: shape mismatch");
    if (!mu.allFinite() || !B.allFinite() || !d_vec.allFinite())
      throw std::invalid_argument("VariationalParams: non-finite");
  }
};

// theta = mu + B eps1 + d o eps2 for eps ~ N(0, I_{r+p})
inline Eigen::VectorXd va_sample(const VariationalParams& lam, const Eigen::VectorXd& eps) {
  if (eps.size() != lam.r() + lam.p())
    throw std::invalid_argument("va_sample: eps length must be r + p");
  return lam.mu + lam.B * eps.head(lam.r()) +
         (lam.d_vec.array() * eps.tail(lam.p()).array()).matrix();
}

namespace detail {

// Solve (BB' + D^2)^{-1} x by Woodbury on the diagonal part.
inline Eigen::VectorXd factor_cov_solve(const VariationalParams& lam,
                                        const Eigen::VectorXd& x, double* log_det = nullptr) {
  const int r = lam.r();
  const Eigen::ArrayXd d2 = lam.d_vec.array().square().max(1e-300);
  const Eigen::VectorXd xd = (x.array() / d2).matrix();
  if (r == 0) {
    if (log_det) *log_det = d2.log().sum();
    return xd;
  }
  const Eigen::MatrixXd Bd = (lam.B.array().colwise() / d2).matrix();  // D^-2 B
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(r, r);
  M.noalias() += lam.B.transpose() * Bd;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (log_det) {
    double lm = 0.0;
    for (int i = 0; i < r; ++i) lm += 2.0 * std::log(llt.matrixL()(i, i));
    *log_det = lm + d2.log().sum();
  }
  return xd - Bd * llt.solve(lam.B.transpose() * xd);
}

}  // namespace detail

inline double va_log_density(const VariationalParams& lam, const Eigen::VectorXd& theta) {
  double log_det = 0.0;
  const Eigen::VectorXd diff = theta - lam.mu;
  const Eigen::VectorXd sol = detail::factor_cov_solve(lam, diff, &log_det);
  return -0.5 * (lam.p() * kLog2Pi + log_det + diff.dot(sol));
}

inline Eigen::VectorXd va_grad_log_density(const VariationalParams& lam,
                                           const Eigen::VectorXd& theta) {
  return -detail::factor_cov_solve(lam, theta - lam.mu);
}

// Persistent latent state carried across SGA steps, with per-observation
// random-walk scales for the w update.
struct GibbsCarry {
  Eigen::VectorXd l_tilde;
  Eigen::VectorXd w;
  Eigen::VectorXd log_step;   // per-observation RW proposal scale (log)
  Eigen::VectorXd adapt_n;    // update counts for Robbins-Monro
  long long proposals = 0;
  long long accepts = 0;
  bool adapt = true;

  static GibbsCarry init(int n) {
    GibbsCarry c;
    c.l_tilde = Eigen::VectorXd::Constant(n, 0.5);
    c.w = Eigen::VectorXd::Ones(n);
    c.log_step = Eigen::VectorXd::Constant(n, std::log(1.0));
    c.adapt_n = Eigen::VectorXd::Zero(n);
    return c;
  }
};

// `count` sweeps of l~ | w ~ N+(B_i/A, 1/A) and w | l~ by adaptive RW-MH on
// log w targeting the Appendix D kernel. Uses cached quadratics only.
inline void gibbs_latents(const SkewTParams& th, const ObsCache& cache, int count,
                          Rng& rng, GibbsCarry& carry) {
  const int n = static_cast<int>(cache.q.size());
  if (carry.l_tilde.size() != n)
    throw std::invalid_argument("gibbs_latents: carry size mismatch");
  const double A = th.gibbs_a;
  const double sdA = 1.0 / std::sqrt(A);
  const int d = th.dim();
  const double nu = th.nu;
  const double half_dnu = 0.5 * (d + nu);

  for (int sweep = 0; sweep < count; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const double bi = cache.b(i), qi = cache.q(i);
      // Step 1: l~_i | w_i
      const double li = rng.truncated_normal_positive(
          std::sqrt(carry.w(i)) * bi / A, sdA);
      carry.l_tilde(i) = li;
      // Step 2: w_i | l~_i via RW-MH on x = log w
      const double x = std::log(carry.w(i));
      auto logk = [&](double xv) {
        const double ex = std::exp(xv);
        return half_dnu * xv - 0.5 * ex * (qi + nu) + li * std::exp(0.5 * xv) * bi;
      };
      const double xp = x + std::exp(carry.log_step(i)) * rng.normal();
      const double la = logk(xp) - logk(x);
      const double u = rng.uniform();
      bool accept = std::isfinite(la) && std::log(u) < la;
      if (accept) carry.w(i) = std::exp(xp);
      ++carry.proposals;
      carry.accepts += accept ? 1 : 0;
      if (carry.adapt) {
        carry.adapt_n(i) += 1.0;
        const double gain = 1.0 / std::sqrt(carry.adapt_n(i) + 10.0);
        carry.log_step(i) += gain * ((accept ? 1.0 : 0.0) - 0.44);
        carry.log_step(i) = std::min(3.0, std::max(-8.0, carry.log_step(i)));
      }
    }
  }
}

// Wrapper matching the operation signature on copula data.
inline void gibbs_latents(const SkewTParams& th, const CopulaData& data, int count,
                          Rng& rng, GibbsCarry& carry, int grid_size = 401) {
  MarginTables tables(grid_size);
  tables.update(th);
  const Eigen::MatrixXd z = pseudo_data(data, tables);
  const ObsCache cache = make_obs_cache(z, th);
  gibbs_latents(th, cache, count, rng, carry);
}

struct SgaConfig {
  int steps = 5000;
  int gibbs_draws = 25;
  int r = 3;
  int averaging_window = 500;
  double adadelta_decay = 0.95;
  double adadelta_eps = 1e-6;
  std::uint64_t seed = 1;
  int k = 1;
  int quantile_grid = 401;
  bool pin_alpha_zero = false;  // t / Gaussian restricted fits
  double pin_nu = 0.0;          // > 2 pins the degrees of freedom
  std::string checkpoint_path;
  int checkpoint_every = 500;

  void validate() const {
    if (steps <= 0 || gibbs_draws <= 0 || r < 0 || averaging_window <= 0 || k <= 0)
      throw std::invalid_argument("SgaConfig: counts must be positive");
    if (!(adadelta_decay > 0.0 && adadelta_decay < 1.0))
      throw std::invalid_argument("SgaConfig: decay outside (0,1)");
  }
};

struct FitResult {
  VariationalParams lambda_hat;
  VariationalParams lambda_final;
  std::vector<double> elbo_trace;     // noisy log h - log q0 per step
  std::vector<double> logpost_trace;  // noisy log h per step
  double seconds = 0.0;
  long clamped_total = 0;
  double mh_acceptance = 0.0;
  int step_halvings = 0;
  int d = 0, k = 0, r = 0;
};

namespace detail {

struct AdaState {
  Eigen::ArrayXd eg2, edx2;
  explicit AdaState(int n) : eg2(Eigen::ArrayXd::Zero(n)), edx2(Eigen::ArrayXd::Zero(n)) {}
  // returns the ascent step for gradient g
  Eigen::ArrayXd step(const Eigen::ArrayXd& g, double rho, double eps) {
    eg2 = rho * eg2 + (1.0 - rho) * g.square();
    Eigen::ArrayXd dx = ((edx2 + eps) / (eg2 + eps)).sqrt() * g;
    edx2 = rho * edx2 + (1.0 - rho) * dx.square();
    return dx;
  }
};

// guards exp overflow in the log-diagonal and nu~ coordinates
inline void clamp_theta(Eigen::VectorXd& tv, int d, int k) {
  const auto diag = vech_diagonal_slots(d, k);
  for (int idx : diag) tv(idx) = std::min(25.0, std::max(-30.0, tv(idx)));
  tv(tv.size() - 1) = std::min(25.0, std::max(-30.0, tv(tv.size() - 1)));
}

}  // namespace detail

inline VariationalParams initial_lambda(int d, int k, int r, const SgaConfig& cfg) {
  const int p = theta_vec::size(d, k);
  VariationalParams lam;
  lam.mu = Eigen::VectorXd::Zero(p);
  for (int idx : vech_diagonal_slots(d, k)) lam.mu(idx) = std::log(0.5);
  lam.mu(p - 1) = std::log(8.0);
  if (cfg.pin_nu > 2.0) lam.mu(p - 1) = std::log(cfg.pin_nu - 2.0);
  lam.B = Eigen::MatrixXd::Zero(p, r);
  lam.d_vec = Eigen::VectorXd::Constant(p, 0.01);
  return lam;
}

// mask rows of the VA for pinned coordinates
inline Eigen::ArrayXd pin_mask(int d, int k, const SgaConfig& cfg) {
  const int p = theta_vec::size(d, k);
  Eigen::ArrayXd m = Eigen::ArrayXd::Ones(p);
  const int mlen = vech_size(d, k);
  if (cfg.pin_alpha_zero) m.segment(mlen, d).setZero();
  if (cfg.pin_nu > 2.0) m(p - 1) = 0.0;
  return m;
}

struct ElboSample {
  Eigen::VectorXd grad_mu;
  Eigen::MatrixXd grad_B;
  Eigen::VectorXd grad_d;
  double elbo = 0.0;
  double log_h = 0.0;
  long clamped = 0;
};

// Single-draw reparameterization estimate of the ELBO gradient; refreshes
// the carried latents with `gibbs_draws` sweeps at the sampled theta.
inline ElboSample elbo_gradient_estimate(const VariationalParams& lam,
                                         const CopulaData& data, const PriorConfig& prior,
                                         const SgaConfig& cfg, Rng& rng, GibbsCarry& carry,
                                         MarginTables& tables,
                                         const Eigen::ArrayXd& mask) {
  const int d = data.d(), k = cfg.k;
  const int p = lam.p(), r = lam.r();
  Eigen::VectorXd eps(r + p);
  for (int i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
  Eigen::VectorXd tv = va_sample(lam, eps);
  detail::clamp_theta(tv, d, k);
  SkewTParams theta = theta_vec::unpack(tv, d, k);

  tables.update(theta);
  ClampReport clamp;
  const Eigen::MatrixXd z = pseudo_data(data, tables, &clamp);
  const ObsCache cache = make_obs_cache(z, theta);
  gibbs_latents(theta, cache, cfg.gibbs_draws, rng, carry);

  AugmentedState state(theta, carry.l_tilde, carry.w);
  const ThetaGradient gt = grad_log_h(z, state, prior);
  Eigen::VectorXd g = gt.packed() - va_grad_log_density(lam, tv);
  g.array() *= mask;

  ElboSample out;
  out.grad_mu = g;
  out.grad_B = g * eps.head(r).transpose();
  for (int i = 0; i < p; ++i)
    for (int c = 0; c < r; ++c)
      if (c > i) out.grad_B(i, c) = 0.0;  // keep B lower trapezoidal
  out.grad_d = (g.array() * eps.tail(p).array()).matrix();
  out.log_h = log_h_given_z(z, state, prior, &cache);
  out.elbo = out.log_h - va_log_density(lam, tv);
  out.clamped = clamp.clamped;
  return out;
}

namespace detail {

inline void write_blob(std::ostream& os, const Eigen::VectorXd& v) {
  const std::int64_t n = v.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(v.data()), n * sizeof(double));
}

inline Eigen::VectorXd read_blob(std::istream& is) {
  std::int64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  Eigen::VectorXd v(n);
  is.read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
  return v;
}

}  // namespace detail

struct Checkpoint {
  std::uint32_t version = 1;
  int step = 0;
  VariationalParams lambda;
  GibbsCarry carry;
  std::string rng_state;

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("Checkpoint: cannot open " + path);
    os.write("ACVC", 4);
    os.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::int64_t meta[3] = {step, lambda.p(), lambda.r()};
    os.write(reinterpret_cast<const char*>(meta), sizeof(meta));
    detail::write_blob(os, lambda.mu);
    Eigen::VectorXd bflat = Eigen::Map<const Eigen::VectorXd>(lambda.B.data(), lambda.B.size());
    detail::write_blob(os, bflat);
    detail::write_blob(os, lambda.d_vec);
    detail::write_blob(os, carry.l_tilde);
    detail::write_blob(os, carry.w);
    detail::write_blob(os, carry.log_step);
    detail::write_blob(os, carry.adapt_n);
    const std::int64_t rn = static_cast<std::int64_t>(rng_state.size());
    os.write(reinterpret_cast<const char*>(&rn), sizeof(rn));
    os.write(rng_state.data(), rn);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("Checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::string(magic, 4) != "ACVC") throw std::runtime_error("Checkpoint: bad magic");
    Checkpoint c;
    is.read(reinterpret_cast<char*>(&c.version), sizeof(c.version));
    if (c.version != 1) throw std::runtime_error("Checkpoint: unsupported version");
    std::int64_t meta[3];
    is.read(reinterpret_cast<char*>(meta), sizeof(meta));
    c.step = static_cast<int>(meta[0]);
    c.lambda.mu = detail::read_blob(is);
    const Eigen::VectorXd bflat = detail::read_blob(is);
    c.lambda.B = Eigen::Map<const Eigen::MatrixXd>(bflat.data(), meta[1], meta[2]);
    c.lambda.d_vec = detail::read_blob(is);
    c.carry.l_tilde = detail::read_blob(is);
    c.carry.w = detail::read_blob(is);
    c.carry.log_step = detail::read_blob(is);
    c.carry.adapt_n = detail::read_blob(is);
    std::int64_t rn = 0;
    is.read(reinterpret_cast<char*>(&rn), sizeof(rn));
    c.rng_state.resize(rn);
    is.read(c.rng_state.data(), rn);
    if (!is) throw std::runtime_error("Checkpoint: truncated file");
    return c;
  }
};

// Algorithm: iterate lambda <- lambda + rho o grad, ADADELTA rates,
// lambda_hat = mean of the final `averaging_window` iterates.
inline FitResult run_sga(const CopulaData& data, const PriorConfig& prior, SgaConfig cfg) {
  cfg.validate();
  prior.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int d = data.d(), k = cfg.k;
  const int p = theta_vec::size(d, k);

  VariationalParams lam = initial_lambda(d, k, cfg.r, cfg);
  const Eigen::VectorXd mu0 = lam.mu;
  const Eigen::ArrayXd mask = pin_mask(d, k, cfg);
  for (int i = 0; i < p; ++i)
    if (mask(i) == 0.0) lam.d_vec(i) = 0.0;

  Rng rng = Rng(cfg.seed).substream("fit");
  GibbsCarry carry = GibbsCarry::init(data.n());
  MarginTables tables(cfg.quantile_grid);

  detail::AdaState ada_mu(p), ada_d(p);
  detail::AdaState ada_B(p * cfg.r);

  FitResult res;
  res.d = d;
  res.k = k;
  res.r = cfg.r;
  res.elbo_trace.reserve(cfg.steps);
  res.logpost_trace.reserve(cfg.steps);

  VariationalParams avg;
  avg.mu = Eigen::VectorXd::Zero(p);
  avg.B = Eigen::MatrixXd::Zero(p, cfg.r);
  avg.d_vec = Eigen::VectorXd::Zero(p);
  int avg_count = 0;

  double step_scale = 1.0;
  double smoothed = 0.0, smoothed_max = -1e300;
  int halvings = 0;
  const int smooth_window = 200;

  for (int t = 0; t < cfg.steps; ++t) {
    ElboSample es = elbo_gradient_estimate(lam, data, prior, cfg, rng, carry, tables, mask);
    res.elbo_trace.push_back(es.elbo);
    res.logpost_trace.push_back(es.log_h);
    res.clamped_total += es.clamped;

    lam.mu.array() += step_scale * ada_mu.step(es.grad_mu.array(), cfg.adadelta_decay,
                                               cfg.adadelta_eps);
    if (cfg.r > 0) {
      Eigen::Map<Eigen::ArrayXd> bmap(es.grad_B.data(), es.grad_B.size());
      Eigen::ArrayXd bstep = ada_B.step(bmap, cfg.adadelta_decay, cfg.adadelta_eps);
      lam.B += step_scale * Eigen::Map<Eigen::MatrixXd>(bstep.data(), p, cfg.r);
    }
    lam.d_vec.array() += step_scale * ada_d.step(es.grad_d.array(), cfg.adadelta_decay,
                                                 cfg.adadelta_eps);
    for (int i = 0; i < p; ++i)
      if (mask(i) == 0.0) {
        lam.mu(i) = mu0(i);
        lam.B.row(i).setZero();
        lam.d_vec(i) = 0.0;
      }

    // divergence guard on the smoothed noisy ELBO
    if (t >= smooth_window) {
      double s = 0.0;
      for (int j = t - smooth_window + 1; j <= t; ++j) s += res.elbo_trace[j];
      smoothed = s / smooth_window;
      smoothed_max = std::max(smoothed_max, smoothed);
      if (smoothed < smoothed_max - 1e3) {
        step_scale *= 0.5;
        smoothed_max = smoothed;
        if (++halvings > 3)
          throw ConvergenceError("run_sga: diverging ELBO after 3 step halvings", smoothed);
      }
    }

    if (t >= cfg.steps - cfg.averaging_window) {
      avg.mu += lam.mu;
      avg.B += lam.B;
      avg.d_vec += lam.d_vec;
      ++avg_count;
    }

    if (!cfg.checkpoint_path.empty() && (t + 1) % cfg.checkpoint_every == 0) {
      Checkpoint ck;
      ck.step = t + 1;
      ck.lambda = lam;
      ck.carry = carry;
      ck.rng_state = rng.serialize();
      ck.save(cfg.checkpoint_path);
    }
  }

  avg.mu /= avg_count;
  avg.B /= avg_count;
  avg.d_vec /= avg_count;
  res.lambda_hat = avg;
  res.lambda_final = lam;
  res.step_halvings = halvings;
  res.mh_acceptance = carry.proposals > 0
                          ? static_cast<double>(carry.accepts) / carry.proposals
                          : 0.0;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// Draw theta vectors from the fitted variational posterior.
inline Eigen::MatrixXd va_draws(const VariationalParams& lam, int count, Rng& rng,
                                int d, int k) {
  Eigen::MatrixXd out(count, lam.p());
  Eigen::VectorXd eps(lam.r() + lam.p());
  for (int s = 0; s < count; ++s) {
    for (int i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
    Eigen::VectorXd tv = va_sample(lam, eps);
    detail::clamp_theta(tv, d, k);
    out.row(s) = tv.transpose();
  }
  return out;
}

}  // namespace acst
