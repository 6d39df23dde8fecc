#pragma once

// Real spherical harmonics on S^2: a Gauss-Legendre x equispaced collocation
// grid with forward/inverse transforms, and a Cartesian evaluation of the
// degree-one homogeneous extension through regular solid harmonics.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "logflow/jet.hpp"
#include "logflow/quadrature.hpp"

namespace logflow {

inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int degree) { return (degree + 1) * (degree + 1); }

namespace detail {

inline int tri_index(int l, int m) { return l * (l + 1) / 2 + m; }

// Fully normalized associated Legendre functions (no Condon-Shortley phase)
// at t = cos(theta), s = sin(theta). Output packed by tri_index.
inline void normalized_legendre(int degree, double t, double s, double* p) {
  p[0] = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int m = 1; m <= degree; ++m) {
    p[tri_index(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[tri_index(m - 1, m - 1)];
  }
  for (int m = 0; m < degree; ++m) {
    p[tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * t * p[tri_index(m, m)];
  }
  for (int m = 0; m <= degree; ++m) {
    for (int l = m + 2; l <= degree; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[tri_index(l, m)] = a * (t * p[tri_index(l - 1, m)] - b * p[tri_index(l - 2, m)]);
    }
  }
}

}  // namespace detail

/// Derivatives in spherical coordinates of a field at every grid node.
/// theta is colatitude, phi longitude.
struct SphericalDerivatives {
  Eigen::VectorXd h, h_t, h_p, h_tt, h_tp, h_pp;
};

/// Collocation grid for real spherical harmonics up to `degree`.
///
/// Node k = i * n_phi + j sits at colatitude acos(t_i) (Gauss-Legendre in
/// t = cos(theta)) and longitude 2*pi*j/n_phi. The grid integrates products
/// of two degree-`degree` harmonics exactly, so analysis of band-limited data
/// is exact.
class SphereGrid {
 public:
  explicit SphereGrid(int degree, int n_theta = 0, int n_phi = 0)
      : degree_(degree),
        n_theta_(n_theta > 0 ? n_theta : degree + 1),
        n_phi_(n_phi > 0 ? n_phi : 2 * degree + 2) {
    const GaussLegendre gl = gauss_legendre(n_theta_);
    const int ntri = (degree_ + 1) * (degree_ + 2) / 2;
    t_ = gl.nodes;
    w_ = gl.weights;
    s_.resize(n_theta_);
    p_.assign(std::size_t(n_theta_) * ntri, 0.0);
    dp_.assign(p_.size(), 0.0);
    d2p_.assign(p_.size(), 0.0);
    for (int i = 0; i < n_theta_; ++i) {
      const double t = t_[i];
      const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
      s_[i] = s;
      double* p = &p_[std::size_t(i) * ntri];
      double* dp = &dp_[std::size_t(i) * ntri];
      double* d2p = &d2p_[std::size_t(i) * ntri];
      detail::normalized_legendre(degree_, t, s, p);
      for (int m = 0; m <= degree_; ++m) {
        for (int l = m; l <= degree_; ++l) {
          const int k = detail::tri_index(l, m);
          double lower = 0.0;
          if (l > m) {
            lower = std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * (double(l) * l - double(m) * m)) *
                    p[detail::tri_index(l - 1, m)];
          }
          dp[k] = (l * t * p[k] - lower) / s;
          d2p[k] = -(t / s) * dp[k] - (l * (l + 1.0) - double(m) * m / (s * s)) * p[k];
        }
      }
    }
    phi_.resize(n_phi_);
    cos_.assign(std::size_t(degree_ + 1) * n_phi_, 0.0);
    sin_.assign(cos_.size(), 0.0);
    for (int j = 0; j < n_phi_; ++j) {
      phi_[j] = 2.0 * std::numbers::pi * j / n_phi_;
      for (int m = 0; m <= degree_; ++m) {
        cos_[std::size_t(m) * n_phi_ + j] = std::cos(m * phi_[j]);
        sin_[std::size_t(m) * n_phi_ + j] = std::sin(m * phi_[j]);
      }
    }
  }

  int degree() const { return degree_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  int node_count() const { return n_theta_ * n_phi_; }
  int coeff_count() const { return sh_count(degree_); }

  double cos_theta(int i) const { return t_[i]; }
  double sin_theta(int i) const { return s_[i]; }
  double phi(int j) const { return phi_[j]; }

  Eigen::Vector3d node(int k) const {
    const int i = k / n_phi_;
    const int j = k % n_phi_;
    return {s_[i] * std::cos(phi_[j]), s_[i] * std::sin(phi_[j]), t_[i]};
  }

  // Unit tangent vectors along increasing colatitude / longitude.
  Eigen::Vector3d e_theta(int k) const {
    const int i = k / n_phi_;
    const int j = k % n_phi_;
    return {t_[i] * std::cos(phi_[j]), t_[i] * std::sin(phi_[j]), -s_[i]};
  }
  Eigen::Vector3d e_phi(int k) const {
    const int j = k % n_phi_;
    return {-std::sin(phi_[j]), std::cos(phi_[j]), 0.0};
  }

  double weight(int k) const { return w_[k / n_phi_] * 2.0 * std::numbers::pi / n_phi_; }

  // Quadrature projection of nodal values onto the harmonic coefficients.
  Eigen::VectorXd analyze(const Eigen::VectorXd& nodal) const {
    const int ntri = (degree_ + 1) * (degree_ + 2) / 2;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(coeff_count());
    const double dphi = 2.0 * std::numbers::pi / n_phi_;
    std::vector<double> a(degree_ + 1), b(degree_ + 1);
    for (int i = 0; i < n_theta_; ++i) {
      for (int m = 0; m <= degree_; ++m) {
        double sa = 0.0;
        double sb = 0.0;
        const double* cm = &cos_[std::size_t(m) * n_phi_];
        const double* sm = &sin_[std::size_t(m) * n_phi_];
        for (int j = 0; j < n_phi_; ++j) {
          const double v = nodal[i * n_phi_ + j];
          sa += v * cm[j];
          sb += v * sm[j];
        }
        a[m] = sa * w_[i] * dphi;
        b[m] = sb * w_[i] * dphi;
      }
      const double* p = &p_[std::size_t(i) * ntri];
      for (int m = 0; m <= degree_; ++m) {
        for (int l = m; l <= degree_; ++l) {
          const double pl = p[detail::tri_index(l, m)];
          if (m == 0) {
            c[sh_index(l, 0)] += a[0] * pl;
          } else {
            c[sh_index(l, m)] += std::numbers::sqrt2 * a[m] * pl;
            c[sh_index(l, -m)] += std::numbers::sqrt2 * b[m] * pl;
          }
        }
      }
    }
    return c;
  }

  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const {
    return synthesize_impl(coeffs, false).h;
  }

  SphericalDerivatives synthesize_derivatives(const Eigen::VectorXd& coeffs) const {
    return synthesize_impl(coeffs, true);
  }

 private:
  SphericalDerivatives synthesize_impl(const Eigen::VectorXd& coeffs, bool derivs) const {
    const int ntri = (degree_ + 1) * (degree_ + 2) / 2;
    const int nn = node_count();
    SphericalDerivatives out;
    out.h = Eigen::VectorXd::Zero(nn);
    if (derivs) {
      out.h_t = out.h_p = out.h_tt = out.h_tp = out.h_pp = Eigen::VectorXd::Zero(nn);
    }
    // Per ring: Fourier coefficients of h, h_theta, h_theta_theta.
    std::vector<double> ac(degree_ + 1), as(degree_ + 1);
    std::vector<double> dc(degree_ + 1), ds(degree_ + 1);
    std::vector<double> ec(degree_ + 1), es(degree_ + 1);
    for (int i = 0; i < n_theta_; ++i) {
      const double* p = &p_[std::size_t(i) * ntri];
      const double* dp = &dp_[std::size_t(i) * ntri];
      const double* d2p = &d2p_[std::size_t(i) * ntri];
      for (int m = 0; m <= degree_; ++m) {
        double c0 = 0, s0 = 0, c1 = 0, s1 = 0, c2 = 0, s2 = 0;
        const double scale = m == 0 ? 1.0 : std::numbers::sqrt2;
        for (int l = m; l <= degree_; ++l) {
          const int k = detail::tri_index(l, m);
          const double cc = coeffs[sh_index(l, m)] * scale;
          const double cs = m == 0 ? 0.0 : coeffs[sh_index(l, -m)] * scale;
          c0 += cc * p[k];
          s0 += cs * p[k];
          if (derivs) {
            c1 += cc * dp[k];
            s1 += cs * dp[k];
            c2 += cc * d2p[k];
            s2 += cs * d2p[k];
          }
        }
        ac[m] = c0;
        as[m] = s0;
        dc[m] = c1;
        ds[m] = s1;
        ec[m] = c2;
        es[m] = s2;
      }
      for (int j = 0; j < n_phi_; ++j) {
        const int node = i * n_phi_ + j;
        double h = 0, ht = 0, hp = 0, htt = 0, htp = 0, hpp = 0;
        for (int m = 0; m <= degree_; ++m) {
          const double cm = cos_[std::size_t(m) * n_phi_ + j];
          const double sm = sin_[std::size_t(m) * n_phi_ + j];
          h += ac[m] * cm + as[m] * sm;
          if (derivs) {
            ht += dc[m] * cm + ds[m] * sm;
            htt += ec[m] * cm + es[m] * sm;
            hp += m * (-ac[m] * sm + as[m] * cm);
            htp += m * (-dc[m] * sm + ds[m] * cm);
            hpp += -double(m) * m * (ac[m] * cm + as[m] * sm);
          }
        }
        out.h[node] = h;
        if (derivs) {
          out.h_t[node] = ht;
          out.h_p[node] = hp;
          out.h_tt[node] = htt;
          out.h_tp[node] = htp;
          out.h_pp[node] = hpp;
        }
      }
    }
    return out;
  }

  int degree_;
  int n_theta_;
  int n_phi_;
  std::vector<double> t_, s_, w_, phi_;
  std::vector<double> p_, dp_, d2p_;
  std::vector<double> cos_, sin_;
};

inline double make_constant(double, double c) { return c; }
inline Jet make_constant(const Jet&, double c) { return Jet::constant(c); }
inline double radial_power(double r2, double p) { return std::pow(r2, p); }
inline Jet radial_power(const Jet& r2, double p) { return pow(r2, p); }

/// Evaluates sum_lm c_lm |x|^(1-l) S_lm(x), the degree-one homogeneous
/// extension of a harmonic expansion, where S_lm are the regular solid
/// harmonics matching the grid's real harmonics on the unit sphere.
/// `Scalar` is double (value only) or Jet (value, gradient, Hessian).
template <class Scalar>
Scalar solid_harmonic_extension(const Eigen::VectorXd& coeffs, int degree, const Scalar& x,
                                const Scalar& y, const Scalar& z) {
  const Scalar zero = make_constant(x, 0.0);
  const Scalar r2 = x * x + y * y + z * z;
  std::vector<Scalar> by_degree(degree + 1, zero);

  // Diagonal T_m^m = C + iS, carried along m.
  Scalar diag_c = make_constant(x, 1.0 / std::sqrt(4.0 * std::numbers::pi));
  Scalar diag_s = zero;
  for (int m = 0; m <= degree; ++m) {
    if (m > 0) {
      const double k = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
      const Scalar nc = (x * diag_c - y * diag_s) * k;
      const Scalar ns = (x * diag_s + y * diag_c) * k;
      diag_c = nc;
      diag_s = ns;
    }
    const double scale = m == 0 ? 1.0 : std::numbers::sqrt2;
    Scalar prev_c = diag_c;
    Scalar prev_s = diag_s;
    by_degree[m] = by_degree[m] + prev_c * (coeffs[sh_index(m, m)] * scale);
    if (m > 0) by_degree[m] = by_degree[m] + prev_s * (coeffs[sh_index(m, -m)] * scale);
    if (m + 1 > degree) continue;
    Scalar cur_c = z * prev_c * std::sqrt(2.0 * m + 3.0);
    Scalar cur_s = z * prev_s * std::sqrt(2.0 * m + 3.0);
    by_degree[m + 1] = by_degree[m + 1] + cur_c * (coeffs[sh_index(m + 1, m)] * scale);
    if (m > 0) by_degree[m + 1] = by_degree[m + 1] + cur_s * (coeffs[sh_index(m + 1, -m)] * scale);
    for (int l = m + 2; l <= degree; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      const Scalar next_c = (z * cur_c - r2 * prev_c * b) * a;
      by_degree[l] = by_degree[l] + next_c * (coeffs[sh_index(l, m)] * scale);
      prev_c = cur_c;
      cur_c = next_c;
      if (m > 0) {
        const Scalar next_s = (z * cur_s - r2 * prev_s * b) * a;
        by_degree[l] = by_degree[l] + next_s * (coeffs[sh_index(l, -m)] * scale);
        prev_s = cur_s;
        cur_s = next_s;
      }
    }
  }
  Scalar total = zero;
  for (int l = 0; l <= degree; ++l) total = total + by_degree[l] * radial_power(r2, 0.5 * (1.0 - l));
  return total;
}

}  // namespace logflow
