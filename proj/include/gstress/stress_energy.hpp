#pragma once

// Stress-energy tensors of a map psi: (M, g) -> target, evaluated at one point
// from its "map fields": d psi(d_i), tau(psi) and nabla_{d_i} tau(psi).
//
// The same code serves two instances:
//   immersion  phi: M -> R^n      targets are ambient vectors, Euclidean dot
//   Gauss map  G:   M -> G(n, m)  targets are TNMatrix, Frobenius product
//
//   S_ij   = 1/2 |d psi|^2 g_ij - <d psi_i, d psi_j>
//   S2_ij  = 1/2 |tau|^2 g_ij + <d psi, nabla tau> g_ij
//            - <d psi_i, nabla_j tau> - <d psi_j, nabla_i tau>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "gstress/gaussmap.hpp"
#include "gstress/shape.hpp"

namespace gstress {

template <class Target>
struct MapFields {
  int m = 0;
  Eigen::MatrixXd g, g_inv;
  std::vector<double> gamma;  // Gamma^k_ij at (k*m + i)*m + j
  std::vector<Target> dmap;
  Target tau;
  std::vector<Target> nabla_tau;

  // Jet-valued data for one covariant divergence of S. Targets are flattened to
  // components in an orthonormal basis of the target space (ambient coordinates,
  // or the n*n entries of a TNMatrix), so the target inner product is the sum of
  // componentwise products. Empty when not requested.
  std::vector<JetVec> dmap_jets;
  JetMat g_jets, g_inv_jets;

  double Gamma(int k, int i, int j) const { return gamma[(k * m + i) * m + j]; }
  bool has_div_data() const { return !dmap_jets.empty(); }
};

enum class StressRole { harmonic, biharmonic };

struct SymTensor2 {
  Eigen::MatrixXd value;
  StressRole role = StressRole::harmonic;
};

/// Components of a coordinate 2-tensor in the orthonormal tangent frame.
inline Eigen::MatrixXd frame_components(const SymTensor2& t, const PointGeometry& geom) {
  return geom.frame_coeffs.transpose() * t.value * geom.frame_coeffs;
}

template <class Target>
double dmap_norm2(const MapFields<Target>& f) {
  double s = 0.0;
  for (int k = 0; k < f.m; ++k)
    for (int l = 0; l < f.m; ++l) s += f.g_inv(k, l) * inner(f.dmap[k], f.dmap[l]);
  return s;
}

/// <d psi, nabla tau> = g^kl <d psi(d_k), nabla_l tau>.
template <class Target>
double dmap_dot_nabla_tau(const MapFields<Target>& f) {
  double s = 0.0;
  for (int k = 0; k < f.m; ++k)
    for (int l = 0; l < f.m; ++l) s += f.g_inv(k, l) * inner(f.dmap[k], f.nabla_tau[l]);
  return s;
}

template <class Target>
SymTensor2 harmonic_S(const MapFields<Target>& f) {
  const double e = 0.5 * dmap_norm2(f);
  SymTensor2 S{Eigen::MatrixXd(f.m, f.m), StressRole::harmonic};
  for (int i = 0; i < f.m; ++i)
    for (int j = i; j < f.m; ++j) S.value(i, j) = S.value(j, i) = e * f.g(i, j) - inner(f.dmap[i], f.dmap[j]);
  return S;
}

template <class Target>
SymTensor2 biharmonic_S2(const MapFields<Target>& f) {
  const double t2 = inner(f.tau, f.tau);
  const double c = dmap_dot_nabla_tau(f);
  SymTensor2 S{Eigen::MatrixXd(f.m, f.m), StressRole::biharmonic};
  for (int i = 0; i < f.m; ++i)
    for (int j = i; j < f.m; ++j)
      S.value(i, j) = S.value(j, i) = (0.5 * t2 + c) * f.g(i, j) - inner(f.dmap[i], f.nabla_tau[j]) -
                                      inner(f.dmap[j], f.nabla_tau[i]);
  return S;
}

inline double metric_trace(const Eigen::MatrixXd& g_inv, const Eigen::MatrixXd& t) {
  return (g_inv.array() * t.array()).sum();
}

/// |trace S2 - (m/2)|tau|^2 - (m - 2)<d psi, nabla tau>|.
template <class Target>
double s2_trace_identity_residual(const MapFields<Target>& f) {
  const double tr = metric_trace(f.g_inv, biharmonic_S2(f).value);
  const double direct = 0.5 * f.m * inner(f.tau, f.tau) + (f.m - 2) * dmap_dot_nabla_tau(f);
  return std::abs(tr - direct);
}

/// The tensor 1/2 |tau|^2 g_ij + <d psi_i, nabla_j tau> + <d psi_j, nabla_i tau>.
template <class Target>
Eigen::MatrixXd reform_tensor(const MapFields<Target>& f) {
  const double t2 = inner(f.tau, f.tau);
  Eigen::MatrixXd R(f.m, f.m);
  for (int i = 0; i < f.m; ++i)
    for (int j = i; j < f.m; ++j)
      R(i, j) = R(j, i) =
          0.5 * t2 * f.g(i, j) + inner(f.dmap[i], f.nabla_tau[j]) + inner(f.dmap[j], f.nabla_tau[i]);
  return R;
}

/// max_ij |S2_ij + R_ij - (|tau|^2 + <d psi, nabla tau>) g_ij|.
template <class Target>
double reform_identity_residual(const MapFields<Target>& f) {
  const Eigen::MatrixXd lhs = biharmonic_S2(f).value + reform_tensor(f);
  const Eigen::MatrixXd rhs = (inner(f.tau, f.tau) + dmap_dot_nabla_tau(f)) * f.g;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

/// max_j |(div S)_j + <tau, d psi(d_j)>|, with
/// (div S)_j = g^ik (d_i S_kj - Gamma^l_ik S_lj - Gamma^l_ij S_kl).
template <class Target>
double div_S_residual(const MapFields<Target>& f) {
  if (!f.has_div_data()) throw JetError("div S needs jet-valued map fields");
  const int m = f.m;
  const int order = f.dmap_jets[0][0].order();
  if (order < 1) throw JetError("jet order exhausted: div S needs map fields of order >= 1");
  const JetMat g = truncated(f.g_jets, order);
  const JetMat ginv = truncated(f.g_inv_jets, order);

  JetMat gram(m, JetVec(m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) gram[i][j] = gram[j][i] = dot(f.dmap_jets[i], f.dmap_jets[j]);
  Jet energy = zero_like(g[0][0]);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) energy.add_product(ginv[k][l], gram[k][l]);
  energy *= 0.5;
  JetMat S(m, JetVec(m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) S[i][j] = S[j][i] = energy * g[i][j] - gram[i][j];

  Eigen::MatrixXd Sv(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Sv(i, j) = S[i][j].value();
  double worst = 0.0;
  for (int j = 0; j < m; ++j) {
    double div = 0.0;
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        double cov = S[k][j].derivative(i).value();
        for (int l = 0; l < m; ++l) cov -= f.Gamma(l, i, k) * Sv(l, j) + f.Gamma(l, i, j) * Sv(k, l);
        div += f.g_inv(i, k) * cov;
      }
    worst = std::max(worst, std::abs(div + inner(f.tau, f.dmap[j])));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Instances

namespace detail {

template <class Target>
void copy_metric(MapFields<Target>& f, const PointGeometry& geom) {
  f.m = geom.m;
  f.g = geom.g;
  f.g_inv = geom.g_inv;
  f.gamma = geom.gamma;
}

}  // namespace detail

/// The immersion into flat R^n: d phi(d_i) = d_i phi, tau = trace nabla d phi = H,
/// nabla_l tau = d_l H (trivial connection on the pull-back of T R^n).
inline MapFields<Eigen::VectorXd> immersion_fields(const PointGeometry& geom,
                                                   bool with_div_data = true) {
  const JetGeometry& J = *geom.jets;
  if (J.order < 3) throw JetError("immersion map fields need jets of order >= 3");
  MapFields<Eigen::VectorXd> f;
  detail::copy_metric(f, geom);
  for (int i = 0; i < geom.m; ++i) f.dmap.push_back(geom.dphi.col(i));
  f.tau = geom.H;
  for (int l = 0; l < geom.m; ++l) f.nabla_tau.push_back(values(derivative(J.H, l)));
  if (with_div_data) {
    f.dmap_jets = J.dphi;
    f.g_jets = J.g;
    f.g_inv_jets = J.g_inv;
  }
  return f;
}

/// Tension of the immersion straight from its definition,
/// g^ij (normal part of d2_ij phi), using the real projector P_N.
inline Eigen::VectorXd immersion_tension_by_projection(const PointGeometry& geom) {
  const JetGeometry& J = *geom.jets;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(geom.n);
  for (int i = 0; i < geom.m; ++i)
    for (int j = 0; j < geom.m; ++j)
      t += geom.g_inv(i, j) * (geom.P_N * values(derivative(J.dphi[i], j)));
  return t;
}

/// Flattened (row-major) jet entries of dG(d_i), order K-2.
inline std::vector<JetVec> gauss_differential_jets(const JetGeometry& J) {
  const int m = J.m, n = J.n, k2 = J.order - 2;
  const JetMat dphi = truncated(J.dphi, k2);
  const JetMat ginv = truncated(J.g_inv, k2);
  JetMat w(m, JetVec(n, zero_like(dphi[0][0])));
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a) w[k][a].add_product(ginv[j][k], dphi[j][a]);
  std::vector<JetVec> out(m, JetVec(n * n, zero_like(dphi[0][0])));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out[i][a * n + b].add_product(w[k][a], J.B[i][k][b]);
  return out;
}

inline MapFields<TNMatrix> gauss_map_fields(const PointGeometry& geom, const GaussFields& gf,
                                            bool with_div_data = false) {
  MapFields<TNMatrix> f;
  detail::copy_metric(f, geom);
  f.dmap = gf.dG;
  f.tau = gf.tau;
  f.nabla_tau = gf.nabla_tau;
  if (with_div_data) {
    const JetGeometry& J = *geom.jets;
    f.dmap_jets = gauss_differential_jets(J);
    f.g_jets = J.g;
    f.g_inv_jets = J.g_inv;
  }
  return f;
}

inline MapFields<TNMatrix> gauss_map_fields(const PointGeometry& geom, bool with_div_data = false) {
  return gauss_map_fields(geom, gauss_fields(geom), with_div_data);
}

/// Bitension of the immersion into flat R^n: -Delta tau with
/// Delta = g^ij (d_i d_j - Gamma^k_ij d_k) on ambient components.
inline Eigen::VectorXd bitension_flat(const PointGeometry& geom) {
  const JetGeometry& J = *geom.jets;
  if (J.order < 4) throw JetError("bitension needs jets of order >= 4");
  Eigen::VectorXd lap = Eigen::VectorXd::Zero(geom.n);
  for (int i = 0; i < geom.m; ++i) {
    const JetVec di = derivative(J.H, i);
    for (int j = 0; j < geom.m; ++j) {
      Eigen::VectorXd hess = values(derivative(di, j));
      for (int k = 0; k < geom.m; ++k) hess -= geom.Gamma(k, i, j) * values(derivative(J.H, k));
      lap += geom.g_inv(i, j) * hess;
    }
  }
  return -lap;
}

// ---------------------------------------------------------------------------
// Trace chain for the Gauss map of a 4-manifold

struct TraceChain {
  double half_trace_s2 = 0.0;          // 1/2 g^ij S2_ij
  double tension_terms = 0.0;          // |tau|^2 + <dG, nabla tau>
  double div_omega = 0.0;              // div of omega_i = <tau(G), dG(d_i)>_F
  double div_omega_contracted = 0.0;   // div of g^jk <nabla-perp_j H, B_ik>
  double expanded = 0.0;               // div div <H, B> - div <H, nabla-perp H>

  double residual() const {
    const double v[] = {half_trace_s2, tension_terms, div_omega, div_omega_contracted, expanded};
    return *std::max_element(std::begin(v), std::end(v)) - *std::min_element(std::begin(v), std::end(v));
  }
};

namespace detail {

/// g^ij (d_i w_j - Gamma^k_ij w_k) for a jet-valued 1-form of order >= 1.
inline double divergence(const PointGeometry& geom, const JetVec& w) {
  double s = 0.0;
  for (int i = 0; i < geom.m; ++i)
    for (int j = 0; j < geom.m; ++j) {
      double c = w[j].derivative(i).value();
      for (int k = 0; k < geom.m; ++k) c -= geom.Gamma(k, i, j) * w[k].value();
      s += geom.g_inv(i, j) * c;
    }
  return s;
}

}  // namespace detail

inline TraceChain s2_gauss_trace_chain(const PointGeometry& geom) {
  if (geom.m != 4) throw ConfigError("the Gauss-map trace chain is stated for m = 4");
  const JetGeometry& J = *geom.jets;
  if (J.order < 4) throw JetError("trace chain needs jets of order >= 4");
  const int m = geom.m, n = geom.n, k3 = J.order - 3;
  const GaussJets gj = gauss_jets(J);
  const GaussFields gf{gauss_differential(geom), {}, gauss_tension(geom, gj), gauss_nabla_tau(geom, gj)};
  const auto f = gauss_map_fields(geom, gf);

  TraceChain tc;
  tc.half_trace_s2 = 0.5 * metric_trace(geom.g_inv, biharmonic_S2(f).value);
  tc.tension_terms = inner(f.tau, f.tau) + dmap_dot_nabla_tau(f);

  // omega from the assembled n x n matrices
  const JetMat T = gauss_tension_jets(J, gj);
  const auto dG = gauss_differential_jets(J);
  JetVec omega(m, zero_like(T[0][0]));
  for (int i = 0; i < m; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) omega[i].add_product(T[a][b], dG[i][a * n + b].truncated(k3));
  tc.div_omega = detail::divergence(geom, omega);

  // omega by contraction with B
  const JetMat ginv3 = truncated(J.g_inv, k3);
  JetVec omega_c(m, zero_like(T[0][0]));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        omega_c[i].add_product(ginv3[j][k], dot(gj.normal_dH[j], truncated(J.B[i][k], k3)));
  tc.div_omega_contracted = detail::divergence(geom, omega_c);

  // h_ij = <H, B_ij>, second covariant derivative, double trace
  JetMat h(m, JetVec(m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) h[i][j] = h[j][i] = dot(J.H, J.B[i][j]);
  std::vector<JetMat> gam3(m, JetMat(m));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i) gam3[k][i] = truncated(J.gamma[k][i], k3);
  // Dh[k][i][j] = (nabla_k h)_ij, order K-3
  std::vector<JetMat> Dh(m, JetMat(m, JetVec(m)));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Jet v = h[i][j].derivative(k);
        for (int p = 0; p < m; ++p) {
          v -= gam3[p][k][i] * h[p][j].truncated(k3);
          v -= gam3[p][k][j] * h[i][p].truncated(k3);
        }
        Dh[k][i][j] = std::move(v);
      }
  double divdiv = 0.0;
  for (int l = 0; l < m; ++l)
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double w = geom.g_inv(l, i) * geom.g_inv(k, j);
          if (w == 0.0) continue;
          double v = Dh[k][i][j].derivative(l).value();
          for (int p = 0; p < m; ++p)
            v -= geom.Gamma(p, l, k) * Dh[p][i][j].value() + geom.Gamma(p, l, i) * Dh[k][p][j].value() +
                 geom.Gamma(p, l, j) * Dh[k][i][p].value();
          divdiv += w * v;
        }
  const JetVec H3 = truncated(J.H, k3);
  JetVec theta(m);
  for (int i = 0; i < m; ++i) theta[i] = dot(H3, gj.normal_dH[i]);
  tc.expanded = divdiv - detail::divergence(geom, theta);
  return tc;
}

inline double s2_gauss_trace_chain_residual(const ImmersionSpec& spec, std::span<const double> point,
                                            int order = kDefaultJetOrder) {
  return s2_gauss_trace_chain(point_geometry(spec, point, order)).residual();
}

/// omega_i = <tau(G), dG(d_i)> and its divergence, for quadrature of the
/// divergence-theorem step.
inline double gauss_div_omega(const PointGeometry& geom) {
  const JetGeometry& J = *geom.jets;
  if (J.order < 4) throw JetError("div omega needs jets of order >= 4");
  const int m = geom.m, k3 = J.order - 3;
  const GaussJets gj = gauss_jets(J);
  const JetMat ginv3 = truncated(J.g_inv, k3);
  JetVec omega(m, zero_like(gj.normal_dH[0][0]));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        omega[i].add_product(ginv3[j][k], dot(gj.normal_dH[j], truncated(J.B[i][k], k3)));
  return detail::divergence(geom, omega);
}

}  // namespace gstress
