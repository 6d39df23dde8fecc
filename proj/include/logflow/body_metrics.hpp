#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "logflow/support_field.hpp"

namespace logflow {

struct BodyMetrics {
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double diameter = 0.0;
  Eigen::VectorXd steiner;  // (1/|S^n|) int x H dsigma
  Eigen::VectorXd inner_center;
  Eigen::VectorXd outer_center;
};

/// q = (1/|S^n|) int x H(x) dsigma(x) by the node quadrature.
inline Eigen::VectorXd steiner_point(const SupportField& field) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(field.dim() + 1);
  double total = 0.0;
  for (int k = 0; k < field.node_count(); ++k) {
    q += field.weight(k) * field.nodal_values()[k] * field.node(k);
    total += field.weight(k);
  }
  return q / total;
}

namespace detail {

// Nodes as columns; avoids recomputing trig in the search loops.
inline Eigen::MatrixXd node_matrix(const SupportField& field) {
  Eigen::MatrixXd x(field.dim() + 1, field.node_count());
  for (int k = 0; k < field.node_count(); ++k) x.col(k) = field.node(k);
  return x;
}

inline std::vector<Eigen::VectorXd> search_directions(int dim) {
  std::vector<Eigen::VectorXd> dirs;
  if (dim == 2) {
    for (int j = 0; j < 16; ++j) {
      const double a = 2.0 * std::numbers::pi * j / 16.0;
      dirs.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
    return dirs;
  }
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k)
        if (i || j || k) dirs.push_back(Eigen::Vector3d(i, j, k).normalized());
  return dirs;
}

// Pattern search maximizing objective(c) from start, halving the step until
// it drops below tol.
template <class Objective>
Eigen::VectorXd pattern_search(Objective&& objective, Eigen::VectorXd c, double step, double tol) {
  const auto dirs = search_directions(int(c.size()));
  double best = objective(c);
  while (step > tol) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto& d : dirs) {
        const Eigen::VectorXd trial = c + step * d;
        const double v = objective(trial);
        if (v > best) {
          best = v;
          c = trial;
          moved = true;
        }
      }
    }
    step *= 0.5;
  }
  return c;
}

}  // namespace detail

/// Inner radius max_c min_x (H - c.x), outer radius min_c max_x (H - c.x),
/// both by pattern search over centers c started at the Steiner-type point;
/// diameter max_x (H(x) + H(-x)).
inline BodyMetrics body_metrics(const SupportField& field) {
  BodyMetrics m;
  const Eigen::VectorXd& h = field.nodal_values();
  const Eigen::MatrixXd x = detail::node_matrix(field);
  m.steiner = steiner_point(field);

  auto min_gap = [&](const Eigen::VectorXd& c) { return (h - x.transpose() * c).minCoeff(); };
  auto neg_max_gap = [&](const Eigen::VectorXd& c) { return -(h - x.transpose() * c).maxCoeff(); };

  const double scale = std::max(h.maxCoeff(), 1e-300);
  const double start_step = 0.25 * (h.maxCoeff() - h.minCoeff()) + 1e-3 * scale;
  m.outer_center = detail::pattern_search(neg_max_gap, m.steiner, start_step, 1e-7 * scale);
  m.outer_radius = -neg_max_gap(m.outer_center);
  m.inner_center = detail::pattern_search(min_gap, m.steiner, start_step, 1e-7 * m.outer_radius);
  m.inner_radius = min_gap(m.inner_center);

  // Antipodal node of every node: the grids are symmetric under x -> -x.
  double width = 0.0;
  const int nn = field.node_count();
  if (field.dim() == 1) {
    for (int k = 0; k < nn / 2; ++k) width = std::max(width, h[k] + h[k + nn / 2]);
  } else {
    const auto& g = *field.sphere_grid();
    for (int i = 0; i < g.n_theta(); ++i) {
      for (int j = 0; j < g.n_phi(); ++j) {
        const int k = i * g.n_phi() + j;
        const int anti = (g.n_theta() - 1 - i) * g.n_phi() + (j + g.n_phi() / 2) % g.n_phi();
        width = std::max(width, h[k] + h[anti]);
      }
    }
  }
  m.diameter = width;
  return m;
}

struct GradientBound {
  double tangential_sup = 0.0;  // sup |grad_S H|
  double extension_sup = 0.0;   // sup |grad H| of the degree-one extension
  double support_sup = 0.0;     // sup |H|
  bool pass = false;            // extension_sup <= support_sup + tolerance
};

/// For a true support function the gradient of the extension is the
/// boundary point, so sup |grad H| <= sup |H|.
inline GradientBound gradient_bound_check(const SupportField& field, double tolerance = 1e-6) {
  const NodalGeometry g = field.geometry();
  GradientBound b;
  b.tangential_sup = g.tangential_gradient.maxCoeff();
  b.extension_sup = g.points.colwise().norm().maxCoeff();
  b.support_sup = g.h.cwiseAbs().maxCoeff();
  b.pass = b.extension_sup <= b.support_sup + tolerance * std::max(1.0, b.support_sup);
  return b;
}

}  // namespace logflow
