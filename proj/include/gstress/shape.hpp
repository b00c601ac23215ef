#pragma once

// Intrinsic and extrinsic geometry of an immersion at one chart point.
//
// Everything is first computed on jets so that further covariant derivatives
// stay exact; PointGeometry then carries the values at the point in ambient
// coordinates. Conventions:
//   g_ij    = <d_i phi, d_j phi>
//   Gamma^k_ij from the Koszul formula
//   B_ij    = d2_ij phi - Gamma^k_ij d_k phi   (normal part of the Hessian)
//   H       = g^ij B_ij                        (trace, not averaged)

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "gstress/errors.hpp"
#include "gstress/immersion.hpp"
#include "gstress/jet.hpp"

namespace gstress {

using JetVec = std::vector<Jet>;
using JetMat = std::vector<JetVec>;

inline Jet zero_like(const Jet& j) { return Jet::constant_like(j, 0.0); }

inline Jet dot(const JetVec& a, const JetVec& b) {
  Jet r = zero_like(a[0]);
  for (std::size_t k = 0; k < a.size(); ++k) r.add_product(a[k], b[k]);
  return r;
}

inline JetVec truncated(const JetVec& v, int order) {
  JetVec r;
  r.reserve(v.size());
  for (const auto& j : v) r.push_back(j.truncated(order));
  return r;
}

inline JetMat truncated(const JetMat& v, int order) {
  JetMat r;
  r.reserve(v.size());
  for (const auto& row : v) r.push_back(truncated(row, order));
  return r;
}

inline JetVec derivative(const JetVec& v, int var) {
  JetVec r;
  r.reserve(v.size());
  for (const auto& j : v) r.push_back(j.derivative(var));
  return r;
}

inline Eigen::VectorXd values(const JetVec& v) {
  Eigen::VectorXd r(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) r[k] = v[k].value();
  return r;
}

inline Eigen::MatrixXd values(const JetMat& v) {
  Eigen::MatrixXd r(v.size(), v.empty() ? 0 : v[0].size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v[i].size(); ++j) r(i, j) = v[i][j].value();
  return r;
}

/// Inverse of a symmetric positive definite jet matrix (Gauss-Jordan, no pivoting).
inline JetMat spd_inverse(const JetMat& a) {
  const int m = static_cast<int>(a.size());
  JetMat A = a;
  JetMat inv(m);
  for (int i = 0; i < m; ++i) {
    inv[i].assign(m, zero_like(a[0][0]));
    inv[i][i] += 1.0;
  }
  for (int c = 0; c < m; ++c) {
    if (!(A[c][c].value() > 0.0)) throw DegenerateImmersionError("metric is not positive definite");
    const Jet pivot_inv = 1.0 / A[c][c];
    for (int j = 0; j < m; ++j) {
      A[c][j] = A[c][j] * pivot_inv;
      inv[c][j] = inv[c][j] * pivot_inv;
    }
    for (int r = 0; r < m; ++r) {
      if (r == c) continue;
      const Jet f = A[r][c];
      for (int j = 0; j < m; ++j) {
        A[r][j] -= f * A[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

/// Jet-valued geometry. Orders: phi K, dphi/g/g_inv K-1, gamma/B/H K-2.
struct JetGeometry {
  int m = 0;
  int n = 0;
  int order = 0;
  ChartPoint point;
  JetVec phi;
  JetMat dphi;                  // [i][a]
  JetMat g, g_inv;              // [i][j]
  std::vector<JetMat> gamma;    // [k][i][j]
  std::vector<JetMat> B;        // [i][j][a]
  JetVec H;                     // [a]

  const Jet& Gamma(int k, int i, int j) const { return gamma[k][i][j]; }
};

inline std::shared_ptr<const JetGeometry> jet_geometry(const ImmersionSpec& spec,
                                                       std::span<const double> point,
                                                       int order = kDefaultJetOrder) {
  if (order < 2) throw JetError("geometry needs jets of order >= 2");
  const auto sv = jacobian_singular_values(spec, point);
  if (!(sv[spec.m - 1] > kRankTolerance))
    throw DegenerateImmersionError("differential loses rank at this point");

  auto geo = std::make_shared<JetGeometry>();
  JetGeometry& G = *geo;
  const int m = spec.m, n = spec.n;
  G.m = m;
  G.n = n;
  G.order = order;
  G.point.assign(point.begin(), point.end());
  G.phi = eval_immersion(spec, point, order);

  G.dphi.resize(m);
  for (int i = 0; i < m; ++i) G.dphi[i] = derivative(G.phi, i);

  G.g.assign(m, JetVec(m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      G.g[i][j] = dot(G.dphi[i], G.dphi[j]);
      G.g[j][i] = G.g[i][j];
    }
  G.g_inv = spd_inverse(G.g);

  // dg[l][i][j] = d_l g_ij
  std::vector<JetMat> dg(m, JetMat(m, JetVec(m)));
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        dg[l][i][j] = G.g[i][j].derivative(l);
        dg[l][j][i] = dg[l][i][j];
      }
  const JetMat ginv2 = truncated(G.g_inv, order - 2);
  const JetMat dphi2 = truncated(G.dphi, order - 2);

  G.gamma.assign(m, JetMat(m, JetVec(m)));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      JetVec lowered(m);  // Gamma_{l,ij}
      for (int l = 0; l < m; ++l) lowered[l] = 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
      for (int k = 0; k < m; ++k) {
        Jet s = zero_like(lowered[0]);
        for (int l = 0; l < m; ++l) s.add_product(ginv2[k][l], lowered[l]);
        G.gamma[k][i][j] = s;
        G.gamma[k][j][i] = s;
      }
    }

  G.B.assign(m, JetMat(m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      JetVec b = derivative(G.dphi[i], j);
      for (int a = 0; a < n; ++a)
        for (int k = 0; k < m; ++k) b[a] -= G.gamma[k][i][j] * dphi2[k][a];
      G.B[i][j] = b;
      G.B[j][i] = std::move(b);
    }

  G.H.assign(n, zero_like(G.B[0][0][0]));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a) G.H[a].add_product(ginv2[i][j], G.B[i][j][a]);
  return geo;
}

/// Values at the point, in ambient coordinates.
struct PointGeometry {
  int m = 0;
  int n = 0;
  ChartPoint point;
  std::shared_ptr<const JetGeometry> jets;

  Eigen::MatrixXd dphi;             // n x m, columns d_i phi
  Eigen::MatrixXd g, g_inv;         // m x m
  std::vector<double> gamma;        // Gamma^k_ij at (k*m + i)*m + j
  std::vector<Eigen::VectorXd> B;   // B_ij at i*m + j
  Eigen::VectorXd H;
  Eigen::MatrixXd tangent_frame;    // n x m orthonormal, Gram-Schmidt of dphi in index order
  Eigen::MatrixXd frame_coeffs;     // m x m upper triangular: e_a = sum_i C(i, a) d_i
  Eigen::MatrixXd normal_frame;     // n x (n - m) orthonormal
  Eigen::MatrixXd P_T, P_N;         // orthogonal projectors
  double vol_density = 0.0;
  /// +1 if the largest-residual completion was already positively oriented,
  /// -1 if the last normal vector was flipped to make (tangent, normal) positive.
  int normal_orientation = 1;

  double Gamma(int k, int i, int j) const { return gamma[(k * m + i) * m + j]; }
  const Eigen::VectorXd& b(int i, int j) const { return B[i * m + j]; }

  /// B(e_a, e_b) in the orthonormal tangent frame.
  Eigen::VectorXd frame_B(int a, int b) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) r += frame_coeffs(i, a) * frame_coeffs(j, b) * this->b(i, j);
    return r;
  }
};

namespace detail {

inline Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& v) {
  Eigen::MatrixXd e = v;
  for (int a = 0; a < v.cols(); ++a) {
    for (int pass = 0; pass < 2; ++pass)
      for (int b = 0; b < a; ++b) e.col(a) -= e.col(b).dot(e.col(a)) * e.col(b);
    const double nrm = e.col(a).norm();
    if (!(nrm > kRankTolerance)) throw DegenerateImmersionError("tangent vectors are dependent");
    e.col(a) /= nrm;
  }
  return e;
}

/// Complete an orthonormal n x m frame with n - m normals taken from the
/// standard basis, always choosing the vector with the largest residual
/// (lowest index on ties).
inline Eigen::MatrixXd complete_normal_frame(const Eigen::MatrixXd& tangent) {
  const int n = static_cast<int>(tangent.rows()), m = static_cast<int>(tangent.cols());
  Eigen::MatrixXd frame(n, n);
  frame.leftCols(m) = tangent;
  std::vector<bool> used(n, false);
  for (int c = m; c < n; ++c) {
    int best = -1;
    double best_norm = -1.0;
    Eigen::VectorXd best_vec;
    for (int k = 0; k < n; ++k) {
      if (used[k]) continue;
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, k);
      for (int pass = 0; pass < 2; ++pass)
        for (int b = 0; b < c; ++b) v -= frame.col(b).dot(v) * frame.col(b);
      const double nrm = v.norm();
      if (nrm > best_norm) {
        best = k;
        best_norm = nrm;
        best_vec = v;
      }
    }
    used[best] = true;
    frame.col(c) = best_vec / best_norm;
  }
  return frame.rightCols(n - m);
}

}  // namespace detail

inline PointGeometry point_geometry(const ImmersionSpec& spec, std::span<const double> point,
                                    int order = kDefaultJetOrder) {
  PointGeometry P;
  P.jets = jet_geometry(spec, point, order);
  const JetGeometry& J = *P.jets;
  const int m = spec.m, n = spec.n;
  P.m = m;
  P.n = n;
  P.point = J.point;

  P.dphi.resize(n, m);
  for (int i = 0; i < m; ++i) P.dphi.col(i) = values(J.dphi[i]);
  P.g = values(J.g);
  P.g_inv = values(J.g_inv);
  P.gamma.resize(m * m * m);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) P.gamma[(k * m + i) * m + j] = J.gamma[k][i][j].value();
  P.B.resize(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) P.B[i * m + j] = values(J.B[i][j]);
  P.H = values(J.H);

  P.tangent_frame = detail::gram_schmidt(P.dphi);
  const Eigen::MatrixXd R = P.tangent_frame.transpose() * P.dphi;
  P.frame_coeffs = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(m, m));
  P.normal_frame = detail::complete_normal_frame(P.tangent_frame);
  Eigen::MatrixXd full(n, n);
  full << P.tangent_frame, P.normal_frame;
  if (full.determinant() < 0.0) {
    P.normal_frame.col(n - m - 1) *= -1.0;
    P.normal_orientation = -1;
  }
  P.P_T = P.tangent_frame * P.tangent_frame.transpose();
  P.P_N = Eigen::MatrixXd::Identity(n, n) - P.P_T;
  P.vol_density = std::sqrt(P.g.determinant());
  return P;
}

/// Normal projection of d(field)/du_direction at the point: the normal connection
/// applied to a jet-valued normal field.
inline Eigen::VectorXd normal_derivative(const PointGeometry& geom, const JetVec& field,
                                         int direction) {
  if (field.empty() || field[0].order() < 1)
    throw JetError("jet order exhausted: field has no derivative data left");
  Eigen::VectorXd d(field.size());
  for (std::size_t a = 0; a < field.size(); ++a) d[a] = field[a].derivative(direction).value();
  return geom.P_N * d;
}

struct PseudoUmbilicalResult {
  double residual = 0.0;
  bool minimal = false;
};

/// max_ab |<B(e_a, e_b), H> - (|H|^2 / m) delta_ab| in the orthonormal tangent frame.
/// Zero exactly when A_H is a multiple of the identity.
inline PseudoUmbilicalResult pseudo_umbilical_residual(const PointGeometry& geom) {
  PseudoUmbilicalResult r;
  const double h2 = geom.H.squaredNorm();
  double bscale = 0.0;
  for (int a = 0; a < geom.m; ++a)
    for (int b = 0; b < geom.m; ++b) {
      const Eigen::VectorXd Bab = geom.frame_B(a, b);
      bscale = std::max(bscale, Bab.norm());
      const double target = a == b ? h2 / geom.m : 0.0;
      r.residual = std::max(r.residual, std::abs(Bab.dot(geom.H) - target));
    }
  r.minimal = std::sqrt(h2) <= 1e-9 * std::max(1.0, bscale);
  if (r.minimal) r.residual = 0.0;
  return r;
}

/// Shape operator eigenvalues along the oriented unit normal, ascending.
inline Eigen::VectorXd principal_curvatures(const PointGeometry& geom) {
  if (geom.n != geom.m + 1) throw ConfigError("principal curvatures need a hypersurface (n = m + 1)");
  const Eigen::VectorXd nu = geom.normal_frame.col(0);
  Eigen::MatrixXd L(geom.m, geom.m);
  for (int a = 0; a < geom.m; ++a)
    for (int b = a; b < geom.m; ++b) L(a, b) = L(b, a) = geom.frame_B(a, b).dot(nu);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L, Eigen::EigenvaluesOnly).eigenvalues();
}

/// Scalar mean curvature <H, nu> along the oriented normal of a hypersurface.
inline double signed_mean_curvature(const PointGeometry& geom) {
  if (geom.n != geom.m + 1) throw ConfigError("signed mean curvature needs a hypersurface");
  return geom.H.dot(geom.normal_frame.col(0));
}

/// Gaussian curvature of a surface (m = 2) from the Christoffel symbols alone.
inline double intrinsic_gauss_curvature(const PointGeometry& geom) {
  if (geom.m != 2) throw ConfigError("intrinsic Gauss curvature is defined here for m = 2");
  const JetGeometry& J = *geom.jets;
  if (J.order < 3) throw JetError("Gauss curvature needs jets of order >= 3");
  // R(d1, d2) d2 = (d1 G^l_22 - d2 G^l_12 + G^p_22 G^l_1p - G^p_12 G^l_2p) d_l
  double Rl[2];
  for (int l = 0; l < 2; ++l) {
    double v = J.gamma[l][1][1].derivative(0).value() - J.gamma[l][0][1].derivative(1).value();
    for (int p = 0; p < 2; ++p)
      v += geom.Gamma(p, 1, 1) * geom.Gamma(l, 0, p) - geom.Gamma(p, 0, 1) * geom.Gamma(l, 1, p);
    Rl[l] = v;
  }
  const double R1221 = geom.g(0, 0) * Rl[0] + geom.g(0, 1) * Rl[1];
  return R1221 / geom.g.determinant();
}

/// Gaussian curvature of a surface from the Gauss equation (any codimension).
inline double extrinsic_gauss_curvature(const PointGeometry& geom) {
  if (geom.m != 2) throw ConfigError("extrinsic Gauss curvature is defined here for m = 2");
  return (geom.b(0, 0).dot(geom.b(1, 1)) - geom.b(0, 1).squaredNorm()) / geom.g.determinant();
}

/// Midpoints of a k^m tensor grid over the margined chart.
inline std::vector<ChartPoint> chart_grid(const ImmersionSpec& spec, int per_dim) {
  std::vector<ChartPoint> pts;
  std::vector<int> idx(spec.m, 0);
  for (;;) {
    ChartPoint p(spec.m);
    for (int i = 0; i < spec.m; ++i) {
      const auto e = spec.effective(i);
      p[i] = e.lo + (idx[i] + 0.5) * (e.hi - e.lo) / per_dim;
    }
    pts.push_back(std::move(p));
    int d = 0;
    while (d < spec.m && ++idx[d] == per_dim) idx[d++] = 0;
    if (d == spec.m) break;
  }
  return pts;
}

struct ConvexityResult {
  bool strictly_convex = false;
  double min_abs_curvature = 0.0;
  int points = 0;
};

/// True iff every principal curvature has one strict sign over the whole grid.
inline ConvexityResult strict_convexity_check(const ImmersionSpec& spec,
                                              const std::vector<ChartPoint>& grid) {
  if (spec.n != spec.m + 1) throw ConfigError("convexity needs a hypersurface (n = m + 1)");
  ConvexityResult r;
  r.min_abs_curvature = std::numeric_limits<double>::infinity();
  bool any_pos = false, any_neg = false, any_zero = false;
  for (const auto& p : grid) {
    const auto k = principal_curvatures(point_geometry(spec, p, 2));
    for (int i = 0; i < k.size(); ++i) {
      r.min_abs_curvature = std::min(r.min_abs_curvature, std::abs(k[i]));
      if (k[i] > 0.0) any_pos = true;
      else if (k[i] < 0.0) any_neg = true;
      else any_zero = true;
    }
    ++r.points;
  }
  r.strictly_convex = r.points > 0 && !any_zero && (any_pos != any_neg);
  return r;
}

inline ConvexityResult strict_convexity_check(const ImmersionSpec& spec, int per_dim = 5) {
  return strict_convexity_check(spec, chart_grid(spec, per_dim));
}

/// An element of T_pM (x) N_pM as the n x n ambient matrix sum_k X_k xi_k^T
/// (columns tangent, rows normal). Its inner product is the Frobenius product,
/// which realizes <X (x) xi, Y (x) eta> = <X, Y><xi, eta>.
struct TNMatrix {
  Eigen::MatrixXd entries;

  static TNMatrix zero(int n) { return {Eigen::MatrixXd::Zero(n, n)}; }
  double norm() const { return entries.norm(); }
  TNMatrix& operator+=(const TNMatrix& o) {
    entries += o.entries;
    return *this;
  }
  friend TNMatrix operator-(const TNMatrix& a, const TNMatrix& b) { return {a.entries - b.entries}; }
  friend TNMatrix operator*(double s, const TNMatrix& a) { return {s * a.entries}; }
};

inline double inner(const TNMatrix& a, const TNMatrix& b) {
  return (a.entries.array() * b.entries.array()).sum();
}
inline double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }

/// ||P_T A P_N - A||_F
inline double tn_factorization_residual(const TNMatrix& A, const PointGeometry& geom) {
  return (geom.P_T * A.entries * geom.P_N - A.entries).norm();
}

}  // namespace gstress
