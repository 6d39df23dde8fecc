#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "logflow/errors.hpp"
#include "logflow/jet.hpp"
#include "logflow/spherical_harmonics.hpp"

namespace logflow {

/// Uniform periodic grid of N nodes on S^1 (N even, so antipodes are nodes).
class CircleGrid {
 public:
  explicit CircleGrid(int n) : n_(n) {
    if (n < 8 || n % 2 != 0) throw std::invalid_argument("CircleGrid needs an even node count >= 8");
  }
  int size() const { return n_; }
  double spacing() const { return 2.0 * std::numbers::pi / n_; }
  double theta(int k) const { return spacing() * k; }
  double weight(int) const { return spacing(); }
  Eigen::Vector2d node(int k) const { return {std::cos(theta(k)), std::sin(theta(k))}; }

  // Fourth-order central differences on the periodic grid.
  Eigen::VectorXd first_derivative(const Eigen::VectorXd& f) const {
    Eigen::VectorXd d(n_);
    const double h = spacing();
    for (int k = 0; k < n_; ++k) {
      d[k] = (f[wrap(k - 2)] - 8.0 * f[wrap(k - 1)] + 8.0 * f[wrap(k + 1)] - f[wrap(k + 2)]) / (12.0 * h);
    }
    return d;
  }
  Eigen::VectorXd second_derivative(const Eigen::VectorXd& f) const {
    Eigen::VectorXd d(n_);
    const double h = spacing();
    for (int k = 0; k < n_; ++k) {
      d[k] = (-f[wrap(k - 2)] + 16.0 * f[wrap(k - 1)] - 30.0 * f[k] + 16.0 * f[wrap(k + 1)] -
              f[wrap(k + 2)]) /
             (12.0 * h * h);
    }
    return d;
  }

  // Trigonometric interpolation of nodal data at angle theta.
  double interpolate(const Eigen::VectorXd& f, double theta) const {
    double acc = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double u = 0.5 * (theta - this->theta(k));
      const double su = std::sin(u);
      if (std::abs(su) < 1e-14) {
        acc += f[k];
        continue;
      }
      acc += f[k] * std::sin(n_ * u) * std::cos(u) / (n_ * su);
    }
    return acc;
  }

  // Largest modulus of the discrete second-derivative symbol.
  double laplacian_bound() const { return 16.0 / (3.0 * spacing() * spacing()); }

 private:
  int wrap(int k) const { return ((k % n_) + n_) % n_; }
  int n_;
};

/// Per-node geometric quantities of a support field.
struct NodalGeometry {
  int dim = 1;
  Eigen::VectorXd h;                   // support values
  Eigen::MatrixXd points;              // (n+1) x nodes, boundary points p = grad H
  Eigen::MatrixXd radii;               // n x nodes, ascending per node
  Eigen::VectorXd tangential_gradient; // |grad_S H| per node

  double min_radius() const { return radii.minCoeff(); }
  double max_radius() const { return radii.maxCoeff(); }
};

/// Discretized support function H(., t) of a closed convex hypersurface in
/// R^{n+1}, n in {1, 2}.
///
/// n = 1 stores nodal values on a CircleGrid. n = 2 stores real spherical
/// harmonic coefficients and caches their values on the SphereGrid nodes.
/// Fields are immutable values; grids are shared.
class SupportField {
 public:
  static SupportField on_circle(std::shared_ptr<const CircleGrid> grid, Eigen::VectorXd nodal,
                                double t = 0.0) {
    if (nodal.size() != grid->size()) throw std::invalid_argument("nodal size does not match grid");
    SupportField f;
    f.dim_ = 1;
    f.circle_ = std::move(grid);
    f.values_ = std::move(nodal);
    f.time_ = t;
    return f;
  }

  static SupportField on_sphere(std::shared_ptr<const SphereGrid> grid, Eigen::VectorXd coeffs,
                                double t = 0.0) {
    if (coeffs.size() != grid->coeff_count()) throw std::invalid_argument("coefficient count does not match grid");
    SupportField f;
    f.dim_ = 2;
    f.values_ = grid->synthesize(coeffs);
    f.sphere_ = std::move(grid);
    f.coeffs_ = std::move(coeffs);
    f.time_ = t;
    return f;
  }

  /// Samples h on the nodes (projecting onto harmonics for n = 2).
  template <class Fn>
  static SupportField sample_circle(std::shared_ptr<const CircleGrid> grid, Fn&& h, double t = 0.0) {
    Eigen::VectorXd v(grid->size());
    for (int k = 0; k < grid->size(); ++k) v[k] = h(Eigen::VectorXd(grid->node(k)));
    return on_circle(std::move(grid), std::move(v), t);
  }
  template <class Fn>
  static SupportField sample_sphere(std::shared_ptr<const SphereGrid> grid, Fn&& h, double t = 0.0) {
    Eigen::VectorXd v(grid->node_count());
    for (int k = 0; k < grid->node_count(); ++k) v[k] = h(Eigen::VectorXd(grid->node(k)));
    Eigen::VectorXd c = grid->analyze(v);
    return on_sphere(std::move(grid), std::move(c), t);
  }

  int dim() const { return dim_; }
  double time() const { return time_; }
  int node_count() const { return int(values_.size()); }
  const Eigen::VectorXd& nodal_values() const { return values_; }
  const std::shared_ptr<const CircleGrid>& circle_grid() const { return circle_; }
  const std::shared_ptr<const SphereGrid>& sphere_grid() const { return sphere_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }

  Eigen::VectorXd node(int k) const {
    if (dim_ == 1) return circle_->node(k);
    return sphere_->node(k);
  }
  double weight(int k) const { return dim_ == 1 ? circle_->weight(k) : sphere_->weight(k); }

  /// Total measure |S^n| as seen by the node quadrature.
  double measure() const {
    double s = 0.0;
    for (int k = 0; k < node_count(); ++k) s += weight(k);
    return s;
  }

  /// The ODE state: nodal values (n = 1) or coefficients (n = 2).
  const Eigen::VectorXd& state() const { return dim_ == 1 ? values_ : coeffs_; }

  SupportField with_state(Eigen::VectorXd state, double t) const {
    return dim_ == 1 ? on_circle(circle_, std::move(state), t) : on_sphere(sphere_, std::move(state), t);
  }

  /// Nodal data projected into state space (identity for n = 1).
  Eigen::VectorXd project(const Eigen::VectorXd& nodal) const {
    return dim_ == 1 ? nodal : sphere_->analyze(nodal);
  }

  /// Adds a linear function w.x (a rigid translation of the body).
  SupportField translated(const Eigen::VectorXd& w) const {
    Eigen::VectorXd v(node_count());
    for (int k = 0; k < node_count(); ++k) v[k] = values_[k] + w.dot(node(k));
    if (dim_ == 1) return on_circle(circle_, std::move(v), time_);
    return on_sphere(sphere_, sphere_->analyze(v), time_);
  }

  /// Value of the homogeneous degree-one extension at any x != 0.
  double eval(const Eigen::VectorXd& x) const {
    if (dim_ == 1) {
      const double r = x.norm();
      return r * circle_->interpolate(values_, std::atan2(x[1], x[0]));
    }
    return solid_harmonic_extension<double>(coeffs_, sphere_->degree(), x[0], x[1], x[2]);
  }

  /// Euclidean gradient of the extension, i.e. the boundary point with normal x.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    if (dim_ == 1) {
      const double th = std::atan2(x[1], x[0]);
      const double h = circle_->interpolate(values_, th);
      const double dh = circle_->interpolate(circle_->first_derivative(values_), th);
      Eigen::Vector2d u(std::cos(th), std::sin(th)), t(-std::sin(th), std::cos(th));
      return h * u + dh * t;
    }
    const Jet j = extension_jet(x);
    return Eigen::Vector3d(j.g[0], j.g[1], j.g[2]);
  }

  /// (n+1)x(n+1) Euclidean Hessian of the extension at any x != 0.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    if (dim_ == 1) {
      const double r = x.norm();
      const double th = std::atan2(x[1], x[0]);
      const double rad = circle_->interpolate(nodal_radii_circle(), th);
      Eigen::Vector2d t(-std::sin(th), std::cos(th));
      return (rad / r) * t * t.transpose();
    }
    const Jet j = extension_jet(x);
    Eigen::Matrix3d m;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) m(a, b) = j.hess(a, b);
    return m;
  }

  /// Geometry at every node, without convexity checks.
  NodalGeometry geometry() const {
    NodalGeometry g;
    g.dim = dim_;
    g.h = values_;
    const int nn = node_count();
    g.points.resize(dim_ + 1, nn);
    g.radii.resize(dim_, nn);
    g.tangential_gradient.resize(nn);
    if (dim_ == 1) {
      const Eigen::VectorXd d1 = circle_->first_derivative(values_);
      const Eigen::VectorXd d2 = circle_->second_derivative(values_);
      for (int k = 0; k < nn; ++k) {
        const double th = circle_->theta(k);
        Eigen::Vector2d u(std::cos(th), std::sin(th)), t(-std::sin(th), std::cos(th));
        g.points.col(k) = values_[k] * u + d1[k] * t;
        g.radii(0, k) = d2[k] + values_[k];
        g.tangential_gradient[k] = std::abs(d1[k]);
      }
      return g;
    }
    const SphericalDerivatives d = sphere_->synthesize_derivatives(coeffs_);
    for (int k = 0; k < nn; ++k) {
      const int i = k / sphere_->n_phi();
      const double s = sphere_->sin_theta(i);
      const double c = sphere_->cos_theta(i);
      const double a11 = d.h_tt[k] + d.h[k];
      const double a12 = (d.h_tp[k] - (c / s) * d.h_p[k]) / s;
      const double a22 = d.h_pp[k] / (s * s) + (c / s) * d.h_t[k] + d.h[k];
      const double mean = 0.5 * (a11 + a22);
      const double dev = std::hypot(0.5 * (a11 - a22), a12);
      g.radii(0, k) = mean - dev;
      g.radii(1, k) = mean + dev;
      const double gp = d.h_p[k] / s;
      g.points.col(k) = d.h[k] * sphere_->node(k) + d.h_t[k] * sphere_->e_theta(k) + gp * sphere_->e_phi(k);
      g.tangential_gradient[k] = std::hypot(d.h_t[k], gp);
    }
    return g;
  }

  /// Largest nodal support value; the reference scale for convexity floors.
  double outer_scale() const { return values_.cwiseAbs().maxCoeff(); }

 private:
  SupportField() = default;

  Jet extension_jet(const Eigen::VectorXd& x) const {
    return solid_harmonic_extension<Jet>(coeffs_, sphere_->degree(), Jet::variable(x[0], 0),
                                         Jet::variable(x[1], 1), Jet::variable(x[2], 2));
  }

  Eigen::VectorXd nodal_radii_circle() const {
    return circle_->second_derivative(values_) + values_;
  }

  int dim_ = 1;
  double time_ = 0.0;
  std::shared_ptr<const CircleGrid> circle_;
  std::shared_ptr<const SphereGrid> sphere_;
  Eigen::VectorXd values_;
  Eigen::VectorXd coeffs_;
};

/// H at a unit normal x; eval(x/|x|)*|x| gives the degree-one extension.
inline double eval_support(const SupportField& field, const Eigen::VectorXd& x) {
  if (std::abs(x.norm() - 1.0) > 1e-12) throw InvalidPoint("eval_support expects a unit vector");
  return field.eval(x);
}

/// Orthonormal basis of the tangent space of S^n at unit x, as columns.
inline Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& x) {
  const Eigen::VectorXd u = x.normalized();
  if (u.size() == 2) return Eigen::Vector2d(-u[1], u[0]);
  Eigen::Vector3d a = std::abs(u[0]) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  Eigen::Vector3d e1 = (a - a.dot(u) * Eigen::Vector3d(u)).normalized();
  Eigen::Vector3d e2 = Eigen::Vector3d(u).cross(e1);
  Eigen::MatrixXd t(3, 2);
  t.col(0) = e1;
  t.col(1) = e2;
  return t;
}

/// Convexity floor: radii at or below this signal loss of uniform convexity.
inline double radius_floor(const SupportField& field) { return 1e-8 * field.outer_scale(); }

/// The n nonzero eigenvalues of the extension Hessian at unit x, ascending.
inline Eigen::VectorXd principal_radii(const SupportField& field, const Eigen::VectorXd& x) {
  const Eigen::VectorXd u = x.normalized();
  const Eigen::MatrixXd t = tangent_basis(u);
  const Eigen::MatrixXd a = t.transpose() * field.hessian(u) * t;
  Eigen::VectorXd radii;
  if (a.rows() == 1) {
    radii = Eigen::VectorXd::Constant(1, a(0, 0));
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
    es.computeDirect(Eigen::Matrix2d(a));
    radii = es.eigenvalues();
  }
  if (radii.minCoeff() <= radius_floor(field)) {
    throw NonConvex("principal radius " + std::to_string(radii.minCoeff()) + " below convexity floor");
  }
  return radii;
}

}  // namespace logflow
