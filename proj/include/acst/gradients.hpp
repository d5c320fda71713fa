#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "acst/copula.hpp"

// Analytic gradient of log h(psi) = log p(z, l~, w | theta) + log p(theta)
// with respect to theta = (vech(G~), alpha, nu~), pseudo-data held fixed.
// Per-observation terms are collapsed into moment sums before the matrix
// recursions, so one evaluation costs O(n d^2 + d^3) with a single pass
// over the data.

namespace acst {

struct ThetaGradient {
  Eigen::VectorXd d_vech_gtilde;
  Eigen::VectorXd d_alpha;
  double d_nu_tilde = 0.0;

  Eigen::VectorXd packed() const {
    Eigen::VectorXd v(d_vech_gtilde.size() + d_alpha.size() + 1);
    v << d_vech_gtilde, d_alpha, d_nu_tilde;
    return v;
  }
};

struct GradientWorkspace {
  double c1 = 0.0;              // 1 + alpha' Omega alpha
  Eigen::MatrixXd c0, c2, c4;   // skew inverse, alpha alpha' Omega, C0 - lin(C0)
  Eigen::MatrixXd s5, s7, s11, s15;  // observation sums of C5i, C7i, C11i, C15i
  Eigen::VectorXd v1, v2;       // diag(V)^{-1/2}, diag(V)^{-3/2}
  Eigen::VectorXd m;            // sum_i l_i sqrt(w_i) z_i
  double sum_w = 0.0, sum_log_w = 0.0, sum_l2 = 0.0;
};

namespace detail {

// X -> C1^{-1} C2 X + C1^{-1} X C2' - C1^{-2} C2 X C2'
inline Eigen::MatrixXd dd_chain(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c2,
                                double c1) {
  const Eigen::MatrixXd c2x = c2 * x;
  return c2x / c1 + (x * c2.transpose()) / c1 - (c2x * c2.transpose()) / (c1 * c1);
}

// X -> (V2 o (V V1 X) + V1 X V1) G  with X symmetrized
inline Eigen::MatrixXd omega_chain(const Eigen::MatrixXd& x, const Eigen::MatrixXd& vv1,
                                   const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                                   const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd xs = 0.5 * (x + x.transpose());
  const Eigen::VectorXd diag_part = v2.array() * (vv1 * xs).diagonal().array();
  Eigen::MatrixXd k = v1.asDiagonal() * xs * v1.asDiagonal();
  k += diag_part.asDiagonal();
  return k * g;
}

}  // namespace detail

inline ThetaGradient grad_log_h(const Eigen::MatrixXd& z, const AugmentedState& state,
                                const PriorConfig& cfg,
                                GradientWorkspace* ws_out = nullptr) {
  cfg.validate();
  const SkewTParams& th = state.theta;
  const int n = static_cast<int>(z.rows());
  const int d = th.loadings.d, k = th.loadings.k;
  if (state.n() != n) throw std::invalid_argument("grad_log_h: latent length mismatch");

  GradientWorkspace ws;
  const Eigen::MatrixXd& omega = th.corr.omega_bar;
  const Eigen::MatrixXd& c0 = th.skew.c0;
  const Eigen::VectorXd& alpha = th.alpha;
  const Eigen::VectorXd& delta = th.delta;
  ws.c0 = c0;
  const Eigen::VectorXd oa = omega * alpha;
  ws.c1 = 1.0 + alpha.dot(oa);
  ws.c2 = alpha * oa.transpose();  // alpha alpha' Omega
  ws.c4 = c0 - detail::dd_chain(c0, ws.c2, ws.c1);

  // moment sums over observations
  const Eigen::VectorXd sqw = state.w.array().sqrt();
  const Eigen::VectorXd lsw = state.l_tilde.array() * sqw.array();
  ws.m = z.transpose() * lsw;
  ws.sum_w = state.w.sum();
  ws.sum_log_w = state.w.array().log().sum();
  ws.sum_l2 = state.l_tilde.squaredNorm();
  const Eigen::MatrixXd mw = z.transpose() * state.w.asDiagonal() * z;

  const double rc1 = 1.0 / std::sqrt(ws.c1);          // C1^{-1/2}
  const double rc3 = rc1 / ws.c1;                     // C1^{-3/2}
  const Eigen::VectorXd c0m = c0 * ws.m;
  const Eigen::VectorXd c0d = c0 * delta;

  ws.s5 = -(c0 * mw * c0);
  ws.s7 = ws.s5 - detail::dd_chain(ws.s5, ws.c2, ws.c1);

  const Eigen::MatrixXd s9 = 2.0 * c0m * c0d.transpose();
  const Eigen::MatrixXd s8 =
      -2.0 * rc1 * (c0m * alpha.transpose()) + rc3 * (ws.c2 * (c0m * alpha.transpose()));
  ws.s11 = s8 + s9 - detail::dd_chain(s9, ws.c2, ws.c1);

  const Eigen::MatrixXd adc0 = alpha * c0d.transpose();
  const Eigen::MatrixXd s12 =
      ws.sum_l2 * (2.0 * rc1 * adc0 - rc3 * (adc0 * ws.c2.transpose()));
  const Eigen::MatrixXd s13 = -ws.sum_l2 * (c0d * c0d.transpose());
  ws.s15 = s12 + s13 - detail::dd_chain(s13, ws.c2, ws.c1);

  // G block
  const Eigen::VectorXd v = th.corr.v_diag;
  ws.v1 = v.array().rsqrt();
  ws.v2 = ws.v1.array() / v.array();
  Eigen::MatrixXd vmat = th.loadings.G * th.loadings.G.transpose();
  vmat.diagonal().array() += 1.0;
  const Eigen::MatrixXd vv1 = vmat * ws.v1.asDiagonal();

  Eigen::MatrixXd grad_g =
      static_cast<double>(n) * detail::omega_chain(ws.c4, vv1, ws.v1, ws.v2, th.loadings.G) +
      detail::omega_chain(ws.s7 + ws.s11 + ws.s15, vv1, ws.v1, ws.v2, th.loadings.G);
  for (int c = 0; c < k; ++c)
    for (int r = c; r < d; ++r) {
      const double g = th.loadings.G(r, c);
      grad_g(r, c) += -(cfg.gdp_a + 1.0) * ((g > 0) - (g < 0)) / (cfg.gdp_b + std::fabs(g));
    }

  ThetaGradient out;
  out.d_vech_gtilde.resize(vech_size(d, k));
  {
    int p = 0;
    for (int c = 0; c < k; ++c)
      for (int r = c; r < d; ++r) {
        if (r == c)
          out.d_vech_gtilde(p++) = grad_g(r, c) * th.loadings.G(r, c) + 1.0;
        else
          out.d_vech_gtilde(p++) = grad_g(r, c);
      }
  }

  // alpha block
  const Eigen::VectorXd oc0d = omega * c0d;
  const double aoc0d = alpha.dot(oc0d);
  const Eigen::VectorXd ga1 = 2.0 * rc3 * aoc0d * oa - 2.0 * rc1 * oc0d;

  auto quad_chain = [&](const Eigen::MatrixXd& s_sym) {
    const Eigen::VectorXd os_oa = omega * (s_sym * oa);
    return os_oa / ws.c1 - (alpha.dot(os_oa) / (ws.c1 * ws.c1)) * oa;
  };

  const Eigen::MatrixXd p5 = ws.s5 + ws.s5.transpose();
  const Eigen::VectorXd ga2 = -quad_chain(p5);

  const Eigen::MatrixXd s17 = -s9;
  const Eigen::VectorXd s16 = -2.0 * rc1 * (omega * c0m) + 2.0 * rc3 * (alpha.dot(omega * c0m)) * oa;
  const Eigen::VectorXd ga3 = s16 + quad_chain(s17 + s17.transpose());

  const Eigen::VectorXd s18 = ws.sum_l2 * (rc1 * oc0d - rc3 * aoc0d * oa);
  const Eigen::MatrixXd s19 = ws.sum_l2 * (c0d * c0d.transpose());
  const Eigen::VectorXd ga4 = 2.0 * s18 + quad_chain(2.0 * s19);

  out.d_alpha = -0.5 * n * ga1 - 0.5 * (ga2 + ga3 + ga4);
  out.d_alpha -= alpha / (cfg.alpha_sd * cfg.alpha_sd);

  // nu~ block
  const double nu = th.nu;
  const double dlik = 0.5 * ws.sum_log_w +
                      n * (0.5 * std::log(0.5 * nu) + 0.5 - 0.5 * digamma(0.5 * nu)) -
                      0.5 * ws.sum_w;
  const double dprior = (cfg.nu_shape - 1.0) / (nu - 2.0) - cfg.nu_rate;
  out.d_nu_tilde = (dlik + dprior) * (nu - 2.0) + 1.0;

  if (ws_out) *ws_out = std::move(ws);
  return out;
}

struct FiniteDiffReport {
  double max_rel_vech = 0.0;
  double max_rel_alpha = 0.0;
  double max_rel_nu = 0.0;
  int argmax_vech = -1;
  int argmax_alpha = -1;
  double max_rel() const {
    return std::max(max_rel_vech, std::max(max_rel_alpha, max_rel_nu));
  }
};

// Central finite differences of log_h_given_z against the analytic gradient.
inline FiniteDiffReport finite_diff_check(const Eigen::MatrixXd& z,
                                          const AugmentedState& state,
                                          const PriorConfig& cfg, double step = 1e-6) {
  if (!(step >= 1e-8 && step <= 1e-4))
    throw std::invalid_argument("finite_diff_check: step outside [1e-8, 1e-4]");
  const int d = state.theta.loadings.d, k = state.theta.loadings.k;
  const int m = vech_size(d, k);
  const Eigen::VectorXd packed = theta_vec::pack(state.theta);
  const ThetaGradient analytic = grad_log_h(z, state, cfg);
  const Eigen::VectorXd a = analytic.packed();

  Eigen::VectorXd fd(packed.size());
  for (int i = 0; i < packed.size(); ++i) {
    Eigen::VectorXd tp = packed, tm = packed;
    tp(i) += step;
    tm(i) -= step;
    AugmentedState sp(theta_vec::unpack(tp, d, k), state.l_tilde, state.w);
    AugmentedState sm(theta_vec::unpack(tm, d, k), state.l_tilde, state.w);
    fd(i) = (log_h_given_z(z, sp, cfg) - log_h_given_z(z, sm, cfg)) / (2.0 * step);
  }

  const double floor = 1e-6 * fd.cwiseAbs().maxCoeff() + 1e-12;
  FiniteDiffReport rep;
  for (int i = 0; i < packed.size(); ++i) {
    const double rel = std::fabs(a(i) - fd(i)) / std::max(std::fabs(fd(i)), floor);
    if (i < m) {
      if (rel > rep.max_rel_vech) { rep.max_rel_vech = rel; rep.argmax_vech = i; }
    } else if (i < m + d) {
      if (rel > rep.max_rel_alpha) { rep.max_rel_alpha = rel; rep.argmax_alpha = i - m; }
    } else {
      rep.max_rel_nu = rel;
    }
  }
  return rep;
}

}  // namespace acst
