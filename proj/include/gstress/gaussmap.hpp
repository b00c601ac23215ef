#pragma once

// The Gauss map p -> T_pM as a point of the Grassmannian of m-planes in R^n.
//
// Two representations are carried side by side:
//  * Pluecker: G = e_1 ^ ... ^ e_m in Lambda^m R^n, with the orthonormal wedge
//    basis e_I, I increasing in lexicographic order. The Grassmannian is never
//    given coordinates; its canonical metric is the one induced from Lambda^m R^n.
//  * T (x) N: the pull-back of the Grassmannian tangent bundle, as n x n ambient
//    matrices (TNMatrix). dG(X) = sum_j e_j (x) B(X, e_j), and the connection is
//    the tensor product of Levi-Civita and the normal connection.

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "gstress/shape.hpp"

namespace gstress {

/// Increasing index tuples of size m from {0..n-1}, lexicographic.
inline std::vector<std::vector<int>> wedge_basis(int n, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(m);
  std::iota(t.begin(), t.end(), 0);
  for (;;) {
    out.push_back(t);
    int i = m - 1;
    while (i >= 0 && t[i] == n - m + i) --i;
    if (i < 0) break;
    ++t[i];
    for (int j = i + 1; j < m; ++j) t[j] = t[j - 1] + 1;
  }
  return out;
}

namespace detail {

struct SignedPermutation {
  std::vector<int> perm;
  int sign;
};

inline const std::vector<SignedPermutation>& permutations(int m) {
  static const auto table = [] {
    std::array<std::vector<SignedPermutation>, kMaxJetVars + 1> t;
    for (int k = 1; k <= kMaxJetVars; ++k) {
      std::vector<int> p(k);
      std::iota(p.begin(), p.end(), 0);
      do {
        int inversions = 0;
        for (int a = 0; a < k; ++a)
          for (int b = a + 1; b < k; ++b)
            if (p[a] > p[b]) ++inversions;
        t[k].push_back({p, inversions % 2 ? -1 : 1});
      } while (std::next_permutation(p.begin(), p.end()));
    }
    return t;
  }();
  return table[m];
}

/// det of the m x m minor with the given rows of frame (frame[col][row]).
inline Jet jet_minor(const JetMat& frame, const std::vector<int>& rows) {
  const int m = static_cast<int>(rows.size());
  Jet det = zero_like(frame[0][0]);
  for (const auto& sp : permutations(m)) {
    Jet term = frame[0][rows[sp.perm[0]]];
    for (int c = 1; c < m; ++c) term = term * frame[c][rows[sp.perm[c]]];
    if (sp.sign > 0)
      det += term;
    else
      det -= term;
  }
  return det;
}

inline double minor(const Eigen::MatrixXd& frame, const std::vector<int>& rows) {
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd sub(m, m);
  for (int r = 0; r < m; ++r) sub.row(r) = frame.row(rows[r]);
  return sub.determinant();
}

}  // namespace detail

/// Pluecker coordinates of the span of the columns of `frame` (n x m, real).
inline Eigen::VectorXd wedge(const Eigen::MatrixXd& frame,
                             const std::vector<std::vector<int>>& basis) {
  Eigen::VectorXd w(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) w[k] = detail::minor(frame, basis[k]);
  return w;
}

/// Gram-Schmidt orthonormal tangent frame on jets, [a][component], order K-1.
inline JetMat jet_tangent_frame(const JetGeometry& J) {
  JetMat e;
  for (int a = 0; a < J.m; ++a) {
    JetVec w = J.dphi[a];
    for (int b = 0; b < a; ++b) {
      const Jet c = dot(w, e[b]);
      for (int k = 0; k < J.n; ++k) w[k] -= c * e[b][k];
    }
    const Jet inv_norm = 1.0 / sqrt(dot(w, w));
    for (auto& x : w) x = x * inv_norm;
    e.push_back(std::move(w));
  }
  return e;
}

struct PluckerPoint {
  int n = 0;
  int m = 0;
  std::vector<std::vector<int>> basis;
  JetVec coords;  // jet-valued, order K-1

  Eigen::VectorXd value() const { return values(coords); }
  /// dG_plucker(d_i) = d_i G at the point.
  Eigen::VectorXd differential(int i) const {
    Eigen::VectorXd v(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) v[k] = coords[k].derivative(i).value();
    return v;
  }
};

inline PluckerPoint gauss_plucker(const JetGeometry& J) {
  PluckerPoint P;
  P.n = J.n;
  P.m = J.m;
  P.basis = wedge_basis(J.n, J.m);
  const JetMat frame = jet_tangent_frame(J);
  P.coords.reserve(P.basis.size());
  for (const auto& I : P.basis) P.coords.push_back(detail::jet_minor(frame, I));
  return P;
}

inline PluckerPoint gauss_plucker(const ImmersionSpec& spec, std::span<const double> point,
                                  int order = kDefaultJetOrder) {
  return gauss_plucker(*jet_geometry(spec, point, order));
}

/// Generalized cross product: the normal nu with (e_1..e_m, nu) positively
/// oriented, read off a hypersurface's Pluecker point through the Hodge star.
inline Eigen::VectorXd hodge_normal(const Eigen::VectorXd& plucker, int n, int m) {
  if (n != m + 1) throw ConfigError("Hodge normal needs a hypersurface");
  const auto basis = wedge_basis(n, m);
  Eigen::VectorXd nu(n);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    // basis[k] omits exactly one index
    int missing = 0;
    while (missing < m && basis[k][missing] == missing) ++missing;
    nu[missing] = ((n - 1 - missing) % 2 ? -1.0 : 1.0) * plucker[k];
  }
  return nu;
}

/// dG(d_i) = sum_{j,k} g^jk d_j phi B_ik^T, one TNMatrix per coordinate direction.
inline std::vector<TNMatrix> gauss_differential(const PointGeometry& geom) {
  std::vector<TNMatrix> dG;
  const Eigen::MatrixXd raised = geom.dphi * geom.g_inv;  // column k: sum_j g^jk d_j phi
  for (int i = 0; i < geom.m; ++i) {
    TNMatrix A = TNMatrix::zero(geom.n);
    for (int k = 0; k < geom.m; ++k) A.entries += raised.col(k) * geom.b(i, k).transpose();
    dG.push_back(A);
  }
  return dG;
}

/// Jet data behind tau(G): the normal derivatives of H and their raised form.
struct GaussJets {
  JetMat normal_dH;  // [i][a] nabla-perp_i H, order K-3
  JetMat raised;     // [j][a] V^j = g^ij nabla-perp_i H, order K-3
};

inline GaussJets gauss_jets(const JetGeometry& J) {
  if (J.order < 3) throw JetError("tension of the Gauss map needs jets of order >= 3");
  const int m = J.m, n = J.n, k3 = J.order - 3;
  const JetMat dphi = truncated(J.dphi, k3);
  const JetMat ginv = truncated(J.g_inv, k3);
  // w_l = sum_k g^kl d_k phi
  JetMat w(m, JetVec(n, zero_like(dphi[0][0])));
  for (int l = 0; l < m; ++l)
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < n; ++a) w[l][a].add_product(ginv[k][l], dphi[k][a]);

  GaussJets out;
  for (int i = 0; i < m; ++i) {
    JetVec dH = derivative(J.H, i);
    for (int l = 0; l < m; ++l) {
      const Jet c = dot(dH, dphi[l]);
      for (int a = 0; a < n; ++a) dH[a] -= c * w[l][a];
    }
    out.normal_dH.push_back(std::move(dH));
  }
  out.raised.assign(m, JetVec(n, zero_like(dphi[0][0])));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < n; ++a) out.raised[j][a].add_product(ginv[i][j], out.normal_dH[i][a]);
  return out;
}

/// tau(G) = sum_{i,j} g^ij d_j phi (nabla-perp_i H)^T.
inline TNMatrix gauss_tension(const PointGeometry& geom, const GaussJets& gj) {
  TNMatrix T = TNMatrix::zero(geom.n);
  for (int j = 0; j < geom.m; ++j) T.entries += geom.dphi.col(j) * values(gj.raised[j]).transpose();
  return T;
}

inline TNMatrix gauss_tension(const PointGeometry& geom) {
  return gauss_tension(geom, gauss_jets(*geom.jets));
}

/// nabla_{d_l} tau(G) under Levi-Civita (x) normal connection, on the coordinate
/// components tau = sum_j d_j phi (x) V^j:
///   sum_j [ Gamma^k_lj d_k phi (x) V^j + d_j phi (x) P_N d_l V^j ].
inline std::vector<TNMatrix> gauss_nabla_tau(const PointGeometry& geom, const GaussJets& gj) {
  if (gj.raised.empty() || gj.raised[0][0].order() < 1)
    throw JetError("jet order exhausted: nabla tau(G) needs jets of order >= 4");
  const int m = geom.m, n = geom.n;
  std::vector<Eigen::VectorXd> V(m);
  for (int j = 0; j < m; ++j) V[j] = values(gj.raised[j]);
  std::vector<TNMatrix> out;
  for (int l = 0; l < m; ++l) {
    TNMatrix A = TNMatrix::zero(n);
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd tangent = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < m; ++k) tangent += geom.Gamma(k, l, j) * geom.dphi.col(k);
      A.entries += tangent * V[j].transpose();
      A.entries += geom.dphi.col(j) * normal_derivative(geom, gj.raised[j], l).transpose();
    }
    out.push_back(A);
  }
  return out;
}

inline std::vector<TNMatrix> gauss_nabla_tau(const PointGeometry& geom) {
  return gauss_nabla_tau(geom, gauss_jets(*geom.jets));
}

/// Jet-valued n x n entries of tau(G), order K-3.
inline JetMat gauss_tension_jets(const JetGeometry& J, const GaussJets& gj) {
  const int k3 = J.order - 3;
  const JetMat dphi = truncated(J.dphi, k3);
  JetMat T(J.n, JetVec(J.n, zero_like(dphi[0][0])));
  for (int j = 0; j < J.m; ++j)
    for (int a = 0; a < J.n; ++a)
      for (int b = 0; b < J.n; ++b) T[a][b].add_product(dphi[j][a], gj.raised[j][b]);
  return T;
}

/// The same covariant derivative taken extrinsically: P_T (d_l tau) P_N.
inline std::vector<TNMatrix> gauss_nabla_tau_extrinsic(const PointGeometry& geom,
                                                       const GaussJets& gj) {
  const JetMat T = gauss_tension_jets(*geom.jets, gj);
  if (T[0][0].order() < 1) throw JetError("jet order exhausted: nabla tau(G) needs jets of order >= 4");
  std::vector<TNMatrix> out;
  for (int l = 0; l < geom.m; ++l) {
    Eigen::MatrixXd D(geom.n, geom.n);
    for (int a = 0; a < geom.n; ++a)
      for (int b = 0; b < geom.n; ++b) D(a, b) = T[a][b].derivative(l).value();
    out.push_back({geom.P_T * D * geom.P_N});
  }
  return out;
}

/// Orthonormal basis of the Grassmannian tangent space at G(p): e_1^..^nu_a^..^e_m
/// with nu_a in slot j, paired with the T (x) N element e_j nu_a^T.
struct GrassmannTangentBasis {
  std::vector<Eigen::VectorXd> plucker;
  std::vector<TNMatrix> tn;
};

inline GrassmannTangentBasis grassmann_tangent_basis(const PointGeometry& geom,
                                                     const std::vector<std::vector<int>>& basis) {
  GrassmannTangentBasis out;
  for (int j = 0; j < geom.m; ++j)
    for (int a = 0; a < geom.n - geom.m; ++a) {
      Eigen::MatrixXd frame = geom.tangent_frame;
      frame.col(j) = geom.normal_frame.col(a);
      out.plucker.push_back(wedge(frame, basis));
      out.tn.push_back({geom.tangent_frame.col(j) * geom.normal_frame.col(a).transpose()});
    }
  return out;
}

/// Independent route to tau(G): the tangential part of the Laplace-Beltrami
/// operator applied to the Pluecker coordinates, mapped back into T (x) N.
inline TNMatrix plucker_tension(const PointGeometry& geom, const PluckerPoint& G) {
  const int m = geom.m;
  if (G.coords[0].order() < 2) throw JetError("Pluecker Laplacian needs jets of order >= 3");
  Eigen::VectorXd lap = Eigen::VectorXd::Zero(G.coords.size());
  for (std::size_t c = 0; c < G.coords.size(); ++c) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      const Jet di = G.coords[c].derivative(i);
      for (int j = 0; j < m; ++j) {
        double hess = di.derivative(j).value();
        for (int k = 0; k < m; ++k) hess -= geom.Gamma(k, i, j) * G.coords[c].derivative(k).value();
        s += geom.g_inv(i, j) * hess;
      }
    }
    lap[c] = s;
  }
  const auto tb = grassmann_tangent_basis(geom, G.basis);
  TNMatrix T = TNMatrix::zero(geom.n);
  for (std::size_t k = 0; k < tb.plucker.size(); ++k) T.entries += lap.dot(tb.plucker[k]) * tb.tn[k].entries;
  return T;
}

/// ||tau(G) via nabla-perp H - tau(G) via the Pluecker Laplacian||_F.
inline double ruh_vilms_residual(const PointGeometry& geom, const PluckerPoint& G) {
  return (gauss_tension(geom) - plucker_tension(geom, G)).norm();
}

inline double ruh_vilms_residual(const ImmersionSpec& spec, std::span<const double> point,
                                 int order = kDefaultJetOrder) {
  const auto geom = point_geometry(spec, point, order);
  return ruh_vilms_residual(geom, gauss_plucker(*geom.jets));
}

/// Gram matrices of dG in the orthonormal tangent frame, three ways:
/// Pluecker-induced, Frobenius on T (x) N, and sum_c <B(e_a,e_c), B(e_b,e_c)>.
struct CanonicalMetric {
  Eigen::MatrixXd plucker;
  Eigen::MatrixXd frobenius;
  Eigen::MatrixXd second_fundamental_form;

  double residual() const {
    return std::max((plucker - second_fundamental_form).cwiseAbs().maxCoeff(),
                    (frobenius - second_fundamental_form).cwiseAbs().maxCoeff());
  }
};

inline CanonicalMetric canonical_metric(const PointGeometry& geom, const PluckerPoint& G) {
  const int m = geom.m;
  const auto dG = gauss_differential(geom);
  std::vector<Eigen::VectorXd> dpl(m);
  std::vector<TNMatrix> dtn(m);
  for (int a = 0; a < m; ++a) {
    dpl[a] = Eigen::VectorXd::Zero(G.coords.size());
    dtn[a] = TNMatrix::zero(geom.n);
    for (int i = 0; i < m; ++i) {
      dpl[a] += geom.frame_coeffs(i, a) * G.differential(i);
      dtn[a] += geom.frame_coeffs(i, a) * dG[i];
    }
  }
  std::vector<Eigen::VectorXd> fB(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) fB[a * m + b] = geom.frame_B(a, b);
  CanonicalMetric out{Eigen::MatrixXd(m, m), Eigen::MatrixXd(m, m), Eigen::MatrixXd(m, m)};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      out.plucker(a, b) = dpl[a].dot(dpl[b]);
      out.frobenius(a, b) = inner(dtn[a], dtn[b]);
      double s = 0.0;
      for (int c = 0; c < m; ++c) s += fB[a * m + c].dot(fB[b * m + c]);
      out.second_fundamental_form(a, b) = s;
    }
  return out;
}

/// dG, tau(G) and nabla tau(G) at one point.
struct GaussFields {
  std::vector<TNMatrix> dG;
  std::vector<Eigen::VectorXd> dG_plucker;  // empty unless a Pluecker point was supplied
  TNMatrix tau;
  std::vector<TNMatrix> nabla_tau;
};

inline GaussFields gauss_fields(const PointGeometry& geom, const PluckerPoint* plucker = nullptr) {
  GaussFields f;
  f.dG = gauss_differential(geom);
  const auto gj = gauss_jets(*geom.jets);
  f.tau = gauss_tension(geom, gj);
  f.nabla_tau = gauss_nabla_tau(geom, gj);
  if (plucker)
    for (int i = 0; i < geom.m; ++i) f.dG_plucker.push_back(plucker->differential(i));
  return f;
}

}  // namespace gstress
