#pragma once

// Restriction of the extended support function to an affine chart
// {x_axis = sign}, and the two chart-side characterizations of the
// principal radii used as cross-checks of the sphere-global computation.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "logflow/errors.hpp"
#include "logflow/support_field.hpp"

namespace logflow {

struct Chart {
  int axis = 0;  // index of the fixed coordinate in R^{n+1}
  int sign = -1; // the fixed coordinate equals sign
};

/// The chart that covers unit vector x best: largest |x_axis|.
inline Chart chart_for(const Eigen::VectorXd& x) {
  Eigen::Index axis = 0;
  x.cwiseAbs().maxCoeff(&axis);
  return Chart{int(axis), x[axis] < 0 ? -1 : 1};
}

class ChartRestriction {
 public:
  ChartRestriction(SupportField field, Chart chart) : field_(std::move(field)), chart_(chart) {}

  const Chart& chart() const { return chart_; }
  const SupportField& field() const { return field_; }
  int dim() const { return field_.dim(); }

  /// The point (y, sign) of R^{n+1}, with the fixed coordinate at `axis`.
  Eigen::VectorXd lift(const Eigen::VectorXd& y) const {
    Eigen::VectorXd p(dim() + 1);
    for (int a = 0, i = 0; a <= dim(); ++a) p[a] = a == chart_.axis ? double(chart_.sign) : y[i++];
    return p;
  }

  /// Chart coordinates of a unit normal x with sign(x_axis) = sign.
  Eigen::VectorXd coordinates(const Eigen::VectorXd& x) const {
    const double xa = x[chart_.axis];
    if (xa * chart_.sign <= 0.0) throw InvalidPoint("normal is not covered by this chart");
    Eigen::VectorXd y(dim());
    for (int a = 0, i = 0; a <= dim(); ++a)
      if (a != chart_.axis) y[i++] = x[a] / std::abs(xa);
    return y;
  }

  Eigen::VectorXd normal(const Eigen::VectorXd& y) const { return lift(y).normalized(); }

  static double lambda(const Eigen::VectorXd& y) { return std::sqrt(1.0 + y.squaredNorm()); }

  double u(const Eigen::VectorXd& y) const { return field_.eval(lift(y)); }

  /// Analytic n x n Hessian of u at y.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const {
    const Eigen::MatrixXd full = field_.hessian(lift(y));
    Eigen::MatrixXd u(dim(), dim());
    for (int a = 0, i = 0; a <= dim(); ++a) {
      if (a == chart_.axis) continue;
      for (int b = 0, j = 0; b <= dim(); ++b) {
        if (b == chart_.axis) continue;
        u(i, j++) = full(a, b);
      }
      ++i;
    }
    return u;
  }

  /// Centered finite-difference Hessian of sampled u at y.
  Eigen::MatrixXd discrete_hessian(const Eigen::VectorXd& y, double step = 1e-3) const {
    const int n = dim();
    Eigen::MatrixXd hs(n, n);
    const double u0 = u(y);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
      ei[i] = step;
      hs(i, i) = (u(y + ei) - 2.0 * u0 + u(y - ei)) / (step * step);
      for (int j = i + 1; j < n; ++j) {
        Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
        ej[j] = step;
        hs(i, j) = hs(j, i) =
            (u(y + ei + ej) - u(y + ei - ej) - u(y - ei + ej) + u(y - ei - ej)) / (4.0 * step * step);
      }
    }
    return hs;
  }

  std::vector<Eigen::VectorXd> samples;
  std::vector<double> values;       // u at samples
  std::vector<double> lambdas;      // sqrt(1+|y|^2) at samples
  std::vector<double> source_l;     // lambda log f(lift(y)); empty without f
  std::vector<double> source_g;     // l + 3 d0 lambda log lambda; empty without f

 private:
  SupportField field_;
  Chart chart_;
};

/// Square stencil of (2k+1)^n points with the given spacing around 0.
inline std::vector<Eigen::VectorXd> chart_stencil(int n, int half_width = 2, double spacing = 0.25) {
  std::vector<Eigen::VectorXd> pts;
  const int w = 2 * half_width + 1;
  const int total = n == 1 ? w : w * w;
  for (int k = 0; k < total; ++k) {
    Eigen::VectorXd y(n);
    y[0] = spacing * (k % w - half_width);
    if (n == 2) y[1] = spacing * (k / w - half_width);
    pts.push_back(y);
  }
  return pts;
}

/// Samples u(y) = H(lift(y)) on a stencil; attaches the chart source terms
/// when a speed function f (degree-0 homogeneous) and degree d0 are given.
inline ChartRestriction chart_restrict(const SupportField& field, Chart chart,
                                       std::vector<Eigen::VectorXd> samples = {},
                                       const std::function<double(const Eigen::VectorXd&)>& f = {},
                                       double d0 = 1.0) {
  ChartRestriction cr(field, chart);
  if (samples.empty()) samples = chart_stencil(field.dim());
  for (const auto& y : samples) {
    const double lam = ChartRestriction::lambda(y);
    cr.values.push_back(cr.u(y));
    cr.lambdas.push_back(lam);
    if (f) {
      const double l = lam * std::log(f(cr.lift(y)));
      cr.source_l.push_back(l);
      cr.source_g.push_back(l + 3.0 * d0 * lam * std::log(lam));
    }
  }
  cr.samples = std::move(samples);
  return cr;
}

/// The (n+1)x(n+1) matrix B(r) at chart point y: corner -lambda^2/r, border
/// y, block lambda u_ij - r delta_ij.
inline Eigen::MatrixXd det_b_matrix(const ChartRestriction& chart, const Eigen::VectorXd& y, double r) {
  const int n = chart.dim();
  const double lam = ChartRestriction::lambda(y);
  const Eigen::MatrixXd u = chart.hessian(y);
  Eigen::MatrixXd b(n + 1, n + 1);
  b(0, 0) = -lam * lam / r;
  for (int i = 0; i < n; ++i) {
    b(0, i + 1) = b(i + 1, 0) = y[i];
    for (int j = 0; j < n; ++j) b(i + 1, j + 1) = lam * u(i, j) - (i == j ? r : 0.0);
  }
  return b;
}

inline double det_B_residual(const ChartRestriction& chart, const Eigen::VectorXd& y, double r) {
  return det_b_matrix(chart, y, r).determinant();
}

/// Hadamard bound (product of row norms): the natural scale for |det B|.
inline double row_norm_scale(const Eigen::MatrixXd& b) {
  double s = 1.0;
  for (int i = 0; i < b.rows(); ++i) s *= b.row(i).norm();
  return s;
}

/// Radii at an on-axis chart point as eigenvalues of lambda*u_ij with the
/// axis row and column scaled once more by lambda.
inline Eigen::VectorXd axis_chart_radii(const ChartRestriction& chart, const Eigen::VectorXd& y,
                                        double axis_tolerance = 1e-14) {
  const int n = chart.dim();
  int axis = -1;
  for (int i = 0; i < n; ++i) {
    if (std::abs(y[i]) > axis_tolerance) {
      if (axis >= 0) throw InvalidPoint("chart point is not on a coordinate axis");
      axis = i;
    }
  }
  const double lam = ChartRestriction::lambda(y);
  Eigen::MatrixXd a = lam * chart.hessian(y);
  if (axis >= 0) {
    a.row(axis) *= lam;
    a.col(axis) *= lam;
  }
  if (n == 1) return Eigen::VectorXd::Constant(1, a(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
  es.computeDirect(Eigen::Matrix2d(a));
  return es.eigenvalues();
}

}  // namespace logflow
