#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "logflow/curvature.hpp"
#include "logflow/errors.hpp"
#include "logflow/grids.hpp"
#include "logflow/speed.hpp"
#include "logflow/support_field.hpp"

namespace logflow {

struct SolitonFit {
  Eigen::VectorXd xi;
  double residual = 0.0;        // sup |dH/dt - xi.x| over the window
  double t_begin = 0.0;
  double t_end = 0.0;
  Eigen::VectorXd xi_first_half;
  Eigen::VectorXd xi_second_half;
  double half_window_change = 0.0;
  bool translating = false;
  SupportField profile;         // H(t_end) - t_end xi.x
};

namespace detail {

struct TranslationLsq {
  Eigen::MatrixXd normal;
  Eigen::VectorXd moment;
};

// Centered-difference dH/dt at interior records [first, last].
inline Eigen::VectorXd centered_rate(const std::vector<SupportField>& w, std::size_t i) {
  return (w[i + 1].nodal_values() - w[i - 1].nodal_values()) / (w[i + 1].time() - w[i - 1].time());
}

inline Eigen::VectorXd solve_translation(const std::vector<SupportField>& w, std::size_t first, std::size_t last,
                                         const Eigen::MatrixXd& nodes) {
  const int d = int(nodes.rows());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (std::size_t i = first; i <= last; ++i) {
    const Eigen::VectorXd rate = centered_rate(w, i);
    a += nodes * nodes.transpose();
    b += nodes * rate;
  }
  return a.ldlt().solve(b);
}

}  // namespace detail

/// Least-squares translation speed of a window of recorded fields.
inline SolitonFit fit_translation(const std::vector<SupportField>& window, double tol_trans = 1e-2) {
  if (window.size() < 3) throw InsufficientWindow("translation fit needs at least 3 recorded fields");
  const auto& last = window.back();
  Eigen::MatrixXd nodes(last.dim() + 1, last.node_count());
  for (int k = 0; k < last.node_count(); ++k) nodes.col(k) = last.node(k);

  const std::size_t lo = 1, hi = window.size() - 2;
  SolitonFit fit{.profile = last};
  fit.xi = detail::solve_translation(window, lo, hi, nodes);
  fit.t_begin = window.front().time();
  fit.t_end = last.time();
  for (std::size_t i = lo; i <= hi; ++i) {
    const Eigen::VectorXd res = detail::centered_rate(window, i) - nodes.transpose() * fit.xi;
    fit.residual = std::max(fit.residual, res.cwiseAbs().maxCoeff());
  }

  const std::size_t mid = (lo + hi) / 2;
  fit.xi_first_half = detail::solve_translation(window, lo, std::max(lo, mid), nodes);
  fit.xi_second_half = detail::solve_translation(window, std::min(hi, mid + 1), hi, nodes);
  const double change = (fit.xi_first_half - fit.xi_second_half).norm();
  fit.half_window_change = change / std::max(fit.xi.norm(), 1e-300);
  const bool stable = change <= 1e-2 * std::max(fit.xi.norm(), tol_trans);
  fit.translating = fit.residual <= tol_trans && stable;
  fit.profile = last.translated(-last.time() * fit.xi);
  return fit;
}

struct GaussSpeedSolution {
  Eigen::VectorXd xi;
  double gradient_norm = 0.0;  // |int x e^{s xi.x}/f|
  double potential = 0.0;      // int e^{s xi.x}/f
  int iterations = 0;
  int sign = 1;
};

namespace detail {

struct SphereQuadrature {
  Eigen::MatrixXd nodes;  // (n+1) x count
  Eigen::VectorXd weights;
};

inline SphereQuadrature speed_quadrature(int n, int resolution) {
  SphereQuadrature q;
  if (n == 1) {
    const auto g = circle_grid(2048);
    q.nodes.resize(2, g->size());
    q.weights.resize(g->size());
    for (int k = 0; k < g->size(); ++k) {
      q.nodes.col(k) = g->node(k);
      q.weights[k] = g->weight(k);
    }
    return q;
  }
  const auto g = sphere_grid(2 * resolution);
  q.nodes.resize(3, g->node_count());
  q.weights.resize(g->node_count());
  for (int k = 0; k < g->node_count(); ++k) {
    q.nodes.col(k) = g->node(k);
    q.weights[k] = g->weight(k);
  }
  return q;
}

}  // namespace detail

/// Minimizes G(xi) = int e^{s xi.x}/f dsigma by damped Newton. With the
/// default s = +1 the result satisfies int x e^{xi.x}/f dsigma = 0, i.e. it
/// is the speed xi with dH/dt -> xi.x.
inline GaussSpeedSolution gauss_translator_speed(const PrescribedSpeed& speed, int sign = 1,
                                                 Eigen::VectorXd start = {}, int resolution = 24) {
  const int n = speed.dim();
  const auto q = detail::speed_quadrature(n, resolution);
  Eigen::VectorXd inv_f(q.weights.size());
  for (int k = 0; k < inv_f.size(); ++k) inv_f[k] = q.weights[k] / speed(q.nodes.col(k));

  const double s = sign >= 0 ? 1.0 : -1.0;
  auto potential = [&](const Eigen::VectorXd& xi) {
    return (s * (q.nodes.transpose() * xi)).array().exp().matrix().dot(inv_f);
  };

  GaussSpeedSolution sol;
  sol.sign = int(s);
  Eigen::VectorXd xi = start.size() == n + 1 ? start : Eigen::VectorXd::Zero(n + 1);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd w =
        (s * (q.nodes.transpose() * xi)).array().exp().matrix().cwiseProduct(inv_f);
    const double g0 = w.sum();
    const Eigen::VectorXd grad = s * (q.nodes * w);
    const Eigen::MatrixXd hess = q.nodes * w.asDiagonal() * q.nodes.transpose();
    sol.iterations = it;
    sol.potential = g0;
    sol.gradient_norm = grad.norm();
    if (grad.norm() <= 1e-13 * g0) {
      sol.xi = xi;
      return sol;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    double alpha = 1.0;
    while (alpha > 1e-10 && potential(xi + alpha * step) > g0 + 1e-4 * alpha * grad.dot(step)) alpha *= 0.5;
    xi += alpha * step;
  }
  const Eigen::VectorXd w = (s * (q.nodes.transpose() * xi)).array().exp().matrix().cwiseProduct(inv_f);
  sol.potential = w.sum();
  sol.gradient_norm = (q.nodes * w).norm();
  sol.xi = xi;
  if (sol.gradient_norm <= 1e-8 * sol.potential) return sol;
  throw NonConvergence("translator speed Newton iteration did not converge in 100 steps");
}

/// sup over nodes of |log F(kappa) - log f + s xi.x|; zero when the field
/// solves the translator equation for speed xi in convention s.
inline double translator_residual_gauss(const SupportField& field, const Eigen::VectorXd& xi,
                                        const PrescribedSpeed& speed, int sign = 1,
                                        const CurvatureSpec* spec = nullptr) {
  const CurvatureSpec gauss = gauss_inverse(field.dim());
  const CurvatureSpec& f = spec ? *spec : gauss;
  const NodalGeometry g = field.geometry();
  const double floor = radius_floor(field);
  double worst = 0.0;
  Eigen::VectorXd r(field.dim());
  for (int k = 0; k < field.node_count(); ++k) {
    r = g.radii.col(k);
    if (r.minCoeff() <= floor) throw NonConvex("field is not uniformly convex at a node");
    const Eigen::VectorXd x = field.node(k);
    const double log_k = -std::log(f.value(r));
    worst = std::max(worst, std::abs(log_k - std::log(speed(x)) + sign * xi.dot(x)));
  }
  return worst;
}

}  // namespace logflow
