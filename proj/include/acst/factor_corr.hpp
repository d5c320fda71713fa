#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "acst/errors.hpp"

// Factor parameterization of the copula correlation matrix
//   Omega = V1 (G G' + I) V1,  V1 = diag(GG'+I)^{-1/2},
// with G a (d x k) loading matrix, zero upper triangle and positive leading
// diagonal. The free parameters are vech(G~): the stacked lower-trapezoid
// columns with leading-diagonal entries on log scale.

namespace acst {

inline int vech_size(int d, int k) { return d * k - k * (k - 1) / 2; }

struct FactorLoadings {
  int d = 0;
  int k = 0;
  Eigen::MatrixXd G;  // d x k, zero upper triangle, positive leading diagonal

  FactorLoadings() = default;
  FactorLoadings(int d_, int k_, Eigen::MatrixXd G_) : d(d_), k(k_), G(std::move(G_)) {
    if (k <= 0 || k >= d + 1 || G.rows() != d || G.cols() != k)
      throw std::invalid_argument("FactorLoadings: bad shape");
    if (!G.allFinite()) throw std::invalid_argument("FactorLoadings: non-finite entries");
    for (int c = 0; c < k; ++c) {
      if (!(G(c, c) > 0.0))
        throw std::invalid_argument("FactorLoadings: leading diagonal must be positive");
      for (int r = 0; r < c; ++r)
        if (G(r, c) != 0.0)
          throw std::invalid_argument("FactorLoadings: upper triangle must be zero");
    }
  }

  Eigen::VectorXd vech_tilde() const {
    Eigen::VectorXd v(vech_size(d, k));
    int p = 0;
    for (int c = 0; c < k; ++c)
      for (int r = c; r < d; ++r)
        v(p++) = (r == c) ? std::log(G(r, c)) : G(r, c);
    return v;
  }
};

// stacked columns of the lower trapezoid; diagonal slots on log scale
inline FactorLoadings loadings_from_vech(const Eigen::VectorXd& vech_tilde, int d, int k) {
  if (vech_tilde.size() != vech_size(d, k))
    throw std::invalid_argument("loadings_from_vech: wrong length");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, k);
  int p = 0;
  for (int c = 0; c < k; ++c)
    for (int r = c; r < d; ++r) {
      const double v = vech_tilde(p++);
      G(r, c) = (r == c) ? std::exp(v) : v;
    }
  return FactorLoadings(d, k, std::move(G));
}

// indices of vech slots holding log-diagonal entries
inline std::vector<int> vech_diagonal_slots(int d, int k) {
  std::vector<int> idx;
  int p = 0;
  for (int c = 0; c < k; ++c)
    for (int r = c; r < d; ++r) {
      if (r == c) idx.push_back(p);
      ++p;
    }
  return idx;
}

struct CorrelationMatrix {
  Eigen::MatrixXd omega_bar;  // d x d, unit diagonal, p.d.
  Eigen::MatrixXd inverse;
  double log_det = 0.0;
  Eigen::VectorXd v_diag;  // diag(GG' + I)
};

inline CorrelationMatrix build_correlation(const FactorLoadings& L) {
  const int d = L.d, k = L.k;
  if (!L.G.allFinite()) throw std::invalid_argument("build_correlation: non-finite G");
  const Eigen::VectorXd v =
      L.G.rowwise().squaredNorm().array() + 1.0;  // diag of V = GG' + I
  const double cond = v.maxCoeff() / v.minCoeff();
  if (!(cond < 1e12))
    throw std::invalid_argument("build_correlation: V nearly singular (condition " +
                                std::to_string(cond) + ")");
  const Eigen::VectorXd v1 = v.array().rsqrt();  // diag of V^{-1/2}
  const Eigen::MatrixXd G1 = v1.asDiagonal() * L.G;

  CorrelationMatrix out;
  out.v_diag = v;
  out.omega_bar = G1 * G1.transpose();
  out.omega_bar.diagonal().setOnes();  // V1 (GG'+I) V1 has exact unit diagonal

  // Omega = G1 G1' + D1, D1 = diag(1/v). Woodbury inverse in O(d k^2 + d^2).
  const Eigen::VectorXd d1inv = v;  // D1^{-1} = diag(v)
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(k, k);
  M.noalias() += G1.transpose() * d1inv.asDiagonal() * G1;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    M.diagonal().array() += 1e-10;
    llt.compute(M);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("build_correlation: factor Gram matrix not p.d.");
  }
  const Eigen::MatrixXd U = d1inv.asDiagonal() * G1;  // D1^{-1} G1
  out.inverse = -U * llt.solve(U.transpose());
  out.inverse.diagonal() += d1inv;

  double logdet_m = 0.0;
  for (int i = 0; i < k; ++i) logdet_m += 2.0 * std::log(llt.matrixL()(i, i));
  out.log_det = logdet_m - v.array().log().sum();
  return out;
}

struct SkewInverse {
  Eigen::MatrixXd c0;   // (Omega - delta delta')^{-1}
  double log_det = 0.0; // log det(Omega - delta delta')
  double dod = 0.0;     // delta' Omega^{-1} delta
};

// Sherman-Morrison step on top of the factor inverse.
inline SkewInverse woodbury_inverse(const CorrelationMatrix& corr,
                                    const Eigen::VectorXd& delta) {
  if (delta.size() != corr.omega_bar.rows())
    throw std::invalid_argument("woodbury_inverse: dimension mismatch");
  SkewInverse out;
  const Eigen::VectorXd oid = corr.inverse * delta;
  out.dod = delta.dot(oid);
  if (!(out.dod < 1.0 - 1e-10))
    throw BoundaryError("woodbury_inverse: delta' Omega^{-1} delta = " +
                        std::to_string(out.dod) + " at feasibility edge");
  out.c0 = corr.inverse + (oid * oid.transpose()) / (1.0 - out.dod);
  out.log_det = corr.log_det + std::log1p(-out.dod);
  return out;
}

}  // namespace acst
