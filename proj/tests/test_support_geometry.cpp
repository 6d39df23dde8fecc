#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "logflow/body_metrics.hpp"
#include "logflow/chart.hpp"
#include "logflow/errors.hpp"
#include "logflow/grids.hpp"
#include "logflow/support_field.hpp"

using namespace logflow;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

double ellipse_h(double a, double b, double th) {
  return std::sqrt(a * a * std::cos(th) * std::cos(th) + b * b * std::sin(th) * std::sin(th));
}

// Closed-form support function of the ellipsoid with semi-axes (2, 1, 1).
double ellipsoid_h(const Vector3d& x) { return std::sqrt(4 * x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

// Centered finite-difference Hessian of a function on R^3.
template <class Fn>
Eigen::Matrix3d fd_hessian(Fn f, const Vector3d& x, double h = 1e-4) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vector3d ei = Vector3d::Unit(i) * h, ej = Vector3d::Unit(j) * h;
      m(i, j) = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h);
    }
  return m;
}

// Unit sphere plus a small random perturbation in degrees 2 to 4.
SupportField perturbed_sphere(int degree, std::mt19937_64& rng, double amplitude) {
  auto grid = sphere_grid(degree);
  VectorXd c = VectorXd::Zero(grid->coeff_count());
  std::normal_distribution<double> nd;
  // Coefficients are against orthonormal harmonics; Y_00 = 1/sqrt(4 pi).
  const double unit = std::sqrt(4.0 * kPi);
  c[0] = unit;
  for (int l = 2; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] = unit * amplitude * nd(rng) / (l * l * l);
  return SupportField::on_sphere(grid, c);
}

}  // namespace

TEST(EvalSupport, SphereIsConstant) {
  auto f = sphere_field({2, 12}, 1.7);
  EXPECT_NEAR(eval_support(f, Vector3d(0.6, 0.0, 0.8)), 1.7, 1e-12);
  auto g = sphere_field({1, 64}, 1.7);
  EXPECT_NEAR(eval_support(g, Vector2d(std::cos(0.3), std::sin(0.3))), 1.7, 1e-12);
}

TEST(EvalSupport, TranslatedBallLinearPartIsExact) {
  auto f = sample_field({2, 12}, [](const VectorXd& x) { return 1.0 + 0.2 * x[0]; });
  EXPECT_NEAR(eval_support(f, Vector3d(1, 0, 0)), 1.2, 1e-12);
}

TEST(EvalSupport, EllipseAtQuarterPi) {
  auto f = ellipsoid_field({1, 256}, Vector2d(2, 1));
  const double th = kPi / 4;
  EXPECT_NEAR(eval_support(f, Vector2d(std::cos(th), std::sin(th))), std::sqrt(2.5), 1e-10);
  // Off-node point, trigonometric interpolation.
  const double t2 = 0.123;
  EXPECT_NEAR(eval_support(f, Vector2d(std::cos(t2), std::sin(t2))), ellipse_h(2, 1, t2), 1e-10);
}

TEST(EvalSupport, RejectsNonUnitInput) {
  auto f = sphere_field({1, 64}, 1.0);
  EXPECT_THROW(eval_support(f, Vector2d(2, 0)), InvalidPoint);
}

TEST(PrincipalRadii, SphereGivesRho) {
  auto f = sphere_field({2, 10}, 0.7);
  const VectorXd r = principal_radii(f, Vector3d(0.3, -0.4, std::sqrt(0.75)));
  EXPECT_NEAR(r[0], 0.7, 1e-12);
  EXPECT_NEAR(r[1], 0.7, 1e-12);
}

TEST(PrincipalRadii, EllipseAgainstDenseFiniteDifference) {
  // Oracle: H'' + H from a 10^4-node second difference of the closed form.
  const double h = 2 * kPi / 1e4;
  auto fd_radius = [&](double th) {
    return (ellipse_h(2, 1, th + h) - 2 * ellipse_h(2, 1, th) + ellipse_h(2, 1, th - h)) / (h * h) + ellipse_h(2, 1, th);
  };
  auto f = ellipsoid_field({1, 256}, Vector2d(2, 1));
  EXPECT_NEAR(principal_radii(f, Vector2d(1, 0))[0], fd_radius(0.0), 1e-5);
  EXPECT_NEAR(fd_radius(0.0), 0.5, 1e-6);
  for (double th : {0.4, 1.3, 2.9}) {
    EXPECT_NEAR(principal_radii(f, Vector2d(std::cos(th), std::sin(th)))[0], fd_radius(th), 1e-5) << th;
  }
}

TEST(PrincipalRadii, EllipsoidPoleAgainstClosedFormHessian) {
  auto f = ellipsoid_field({2, 40}, Vector3d(2, 1, 1));
  const Vector3d pole(0, 0, 1);
  const Eigen::Matrix3d hs = fd_hessian(ellipsoid_h, pole);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(hs.topLeftCorner<2, 2>());
  const VectorXd r = principal_radii(f, pole);
  EXPECT_NEAR(r[0], es.eigenvalues()[0], 1e-6);
  EXPECT_NEAR(r[1], es.eigenvalues()[1], 1e-6);
}

TEST(PrincipalRadii, ExtensionHessianAnnihilatesNormal) {
  std::mt19937_64 rng(3);
  auto f = perturbed_sphere(16, rng, 0.1);
  for (int k = 0; k < f.node_count(); k += 37) {
    const VectorXd x = f.node(k);
    const Eigen::MatrixXd hs = f.hessian(x);
    EXPECT_LE((hs * x).norm(), 1e-6 * principal_radii(f, x).maxCoeff());
  }
}

TEST(PrincipalRadii, GridAndJetRoutesAgree) {
  std::mt19937_64 rng(5);
  auto f = perturbed_sphere(16, rng, 0.1);
  const NodalGeometry g = f.geometry();
  for (int k = 0; k < f.node_count(); k += 41) {
    const VectorXd r = principal_radii(f, f.node(k));
    EXPECT_NEAR(r[0], g.radii(0, k), 1e-9);
    EXPECT_NEAR(r[1], g.radii(1, k), 1e-9);
  }
}

TEST(PrincipalRadii, NonConvexDataThrows) {
  auto f = sample_field({1, 128}, [](const VectorXd& x) {
    const double th = std::atan2(x[1], x[0]);
    return 1.0 + 0.3 * std::cos(3 * th);
  });
  EXPECT_THROW(principal_radii(f, Vector2d(1, 0)), NonConvex);
}

TEST(ChartRestrict, SphereGivesRhoLambda) {
  auto f = sphere_field({2, 10}, 1.5);
  auto c = chart_restrict(f, Chart{2, -1});
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    EXPECT_NEAR(c.values[i], 1.5 * std::sqrt(1 + c.samples[i].squaredNorm()), 1e-12);
}

TEST(ChartRestrict, TranslatedBallSubstitution) {
  const double cc = 0.3;
  auto f = sample_field({2, 10}, [&](const VectorXd& x) { return 1.0 - cc * x[2]; });
  auto c = chart_restrict(f, Chart{2, -1});
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    EXPECT_NEAR(c.values[i], std::sqrt(1 + c.samples[i].squaredNorm()) + cc, 1e-12);
}

TEST(ChartRestrict, SourceTerms) {
  auto f = sphere_field({2, 10}, 1.0);
  auto exp_f = [](const VectorXd& x) { return std::exp(0.4 * x[0] / x.norm()); };
  auto c = chart_restrict(f, Chart{2, -1}, {}, exp_f, 2.0);
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const VectorXd& y = c.samples[i];
    const double lam = std::sqrt(1 + y.squaredNorm());
    const double l = 0.4 * y[0];  // lambda log f at (y,-1)/lambda
    EXPECT_NEAR(c.source_l[i], l, 1e-12);
    EXPECT_NEAR(c.source_g[i], l + 6.0 * lam * std::log(lam), 1e-12);
  }
  auto c1 = chart_restrict(f, Chart{2, -1}, {VectorXd::Zero(2)}, [](const VectorXd&) { return 1.0; }, 1.0);
  EXPECT_EQ(c1.source_g[0], 0.0);
}

TEST(ChartRestrict, DiscreteHessianIsPositiveOnStencil) {
  std::mt19937_64 rng(11);
  auto f = perturbed_sphere(12, rng, 0.1);
  auto c = chart_restrict(f, Chart{2, -1});
  for (const auto& y : c.samples) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.discrete_hessian(y));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR((c.discrete_hessian(y) - c.hessian(y)).norm(), 0.0, 1e-5);
  }
}

TEST(DetB, SphereClosedForms) {
  const double rho = 1.3;
  for (int n : {1, 2}) {
    auto f = sphere_field({n, n == 1 ? 64 : 10}, rho);
    auto c = chart_restrict(f, Chart{n, -1});
    const VectorXd y = VectorXd::Zero(n);
    EXPECT_NEAR(det_B_residual(c, y, rho), 0.0, 1e-12);
    EXPECT_NEAR(det_B_residual(c, y, 2 * rho), (-1.0 / (2 * rho)) * std::pow(-rho, n), 1e-12);
  }
}

TEST(DetB, PrincipalRadiiAreRootsOffAxis) {
  std::mt19937_64 rng(17);
  auto f = perturbed_sphere(16, rng, 0.15);
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      auto c = chart_restrict(f, Chart{axis, sign});
      for (const VectorXd& y : {VectorXd(Vector2d(0.2, 0.35)), VectorXd(Vector2d(-0.5, 0.1))}) {
        for (double r : principal_radii(f, c.normal(y))) {
          const Eigen::MatrixXd b = det_b_matrix(c, y, r);
          EXPECT_LE(std::abs(b.determinant()), 1e-6 * row_norm_scale(b));
        }
      }
    }
  }
}

TEST(AxisChartRadii, OriginUsesPlainHessian) {
  auto f = ellipsoid_field({2, 40}, Vector3d(2, 1, 1));
  auto c = chart_restrict(f, Chart{2, -1});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.hessian(Eigen::Vector2d::Zero()));
  const VectorXd r = axis_chart_radii(c, Eigen::Vector2d::Zero());
  EXPECT_NEAR(r[0], es.eigenvalues()[0], 1e-12);
  EXPECT_NEAR(r[1], es.eigenvalues()[1], 1e-12);
}

TEST(AxisChartRadii, SphereOnAxis) {
  auto f = sphere_field({2, 10}, 0.8);
  auto c = chart_restrict(f, Chart{2, -1});
  const VectorXd r = axis_chart_radii(c, Vector2d(0.5, 0.0));
  EXPECT_NEAR(r[0], 0.8, 1e-10);
  EXPECT_NEAR(r[1], 0.8, 1e-10);
}

TEST(AxisChartRadii, MatchDetBRootsOnAxis) {
  std::mt19937_64 rng(23);
  auto f = perturbed_sphere(16, rng, 0.15);
  auto c = chart_restrict(f, Chart{2, -1});
  const Vector2d y(0.0, -0.4);
  const VectorXd r = axis_chart_radii(c, y);
  // Oracle: sign changes of det B(r) on a fine scan, refined by bisection.
  auto det = [&](double t) { return det_B_residual(c, y, t); };
  std::vector<double> roots;
  const double lo = 0.2, hi = 3.0;
  const int steps = 4000;
  for (int i = 0; i < steps; ++i) {
    double a = lo + (hi - lo) * i / steps, b = lo + (hi - lo) * (i + 1) / steps;
    if ((det(a) > 0) == (det(b) > 0)) continue;
    for (int it = 0; it < 80; ++it) {
      const double m = 0.5 * (a + b);
      ((det(a) > 0) == (det(m) > 0) ? a : b) = m;
    }
    roots.push_back(0.5 * (a + b));
  }
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(r[0], roots[0], 1e-8);
  EXPECT_NEAR(r[1], roots[1], 1e-8);
  const VectorXd pr = principal_radii(f, c.normal(y));
  EXPECT_NEAR(r[0], pr[0], 1e-8 * pr[0]);
  EXPECT_NEAR(r[1], pr[1], 1e-8 * pr[1]);
}

TEST(AxisChartRadii, OffAxisPointIsRejected) {
  auto f = sphere_field({2, 10}, 1.0);
  auto c = chart_restrict(f, Chart{2, -1});
  EXPECT_THROW(axis_chart_radii(c, Vector2d(0.1, 0.2)), InvalidPoint);
}

TEST(AxisChartRadii, CurveChart) {
  auto f = ellipsoid_field({1, 256}, Vector2d(2, 1));
  auto c = chart_restrict(f, Chart{1, -1});
  const VectorXd y = VectorXd::Constant(1, 0.7);
  EXPECT_NEAR(axis_chart_radii(c, y)[0], principal_radii(f, c.normal(y))[0], 1e-8);
}

TEST(BodyMetrics, Sphere) {
  for (int n : {1, 2}) {
    auto m = body_metrics(sphere_field({n, n == 1 ? 128 : 10}, 1.4));
    EXPECT_NEAR(m.inner_radius, 1.4, 1e-6);
    EXPECT_NEAR(m.outer_radius, 1.4, 1e-6);
    EXPECT_NEAR(m.diameter, 2.8, 1e-12);
    EXPECT_NEAR(m.steiner.norm(), 0.0, 1e-12);
  }
}

TEST(BodyMetrics, SteinerPointOfTranslatedBall) {
  // int x_i x_j dsigma = |S^n| delta_ij / (n+1).
  const Vector3d v(0.2, -0.1, 0.3);
  auto m3 = body_metrics(sample_field({2, 10}, [&](const VectorXd& x) { return 1.0 + v.dot(x); }));
  EXPECT_NEAR((m3.steiner - v / 3).norm(), 0.0, 1e-12);
  EXPECT_NEAR((m3.outer_center - v).norm(), 0.0, 1e-5);
  const Vector2d w(0.3, -0.2);
  auto m2 = body_metrics(sample_field({1, 128}, [&](const VectorXd& x) { return 1.0 + w.dot(x); }));
  EXPECT_NEAR((m2.steiner - w / 2).norm(), 0.0, 1e-12);
  EXPECT_NEAR(m2.inner_radius, 1.0, 1e-6);
  EXPECT_NEAR(m2.outer_radius, 1.0, 1e-6);
}

TEST(BodyMetrics, Ellipse) {
  auto m = body_metrics(ellipsoid_field({1, 256}, Vector2d(2, 1)));
  EXPECT_NEAR(m.inner_radius, 1.0, 1e-6);
  EXPECT_NEAR(m.outer_radius, 2.0, 1e-6);
  EXPECT_NEAR(m.diameter, 4.0, 1e-12);
}

TEST(BodyMetrics, OrderingAndInteriorityOnRandomFields) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = perturbed_sphere(12, rng, 0.15).translated(Vector3d(0.1 * trial, -0.05, 0.02));
    auto m = body_metrics(f);
    EXPECT_GT(m.inner_radius, 0.0);
    EXPECT_LE(m.inner_radius, m.outer_radius);
    EXPECT_LE(m.outer_radius, m.diameter + 1e-12);
    EXPECT_LE(m.diameter, 2 * m.outer_radius + 1e-9);
    double gap = 1e300;
    for (int k = 0; k < f.node_count(); ++k) gap = std::min(gap, f.nodal_values()[k] - m.steiner.dot(f.node(k)));
    EXPECT_GT(gap, 0.0);
  }
}

TEST(GradientBound, Sphere) {
  auto b = gradient_bound_check(sphere_field({2, 10}, 1.2));
  EXPECT_NEAR(b.tangential_sup, 0.0, 1e-12);
  EXPECT_NEAR(b.support_sup, 1.2, 1e-12);
  EXPECT_TRUE(b.pass);
}

TEST(GradientBound, TranslatedBall) {
  auto b = gradient_bound_check(sample_field({1, 256}, [](const VectorXd& x) { return 1.0 + 0.3 * x[0]; }));
  EXPECT_NEAR(b.tangential_sup, 0.3, 1e-6);
  EXPECT_NEAR(b.support_sup, 1.3, 1e-12);
  EXPECT_TRUE(b.pass);
}

TEST(GradientBound, NonSupportDataFailsWithoutError) {
  auto b = gradient_bound_check(sample_field({1, 256}, [](const VectorXd& x) { return x[0] * x[0]; }));
  EXPECT_FALSE(b.pass);
  EXPECT_GT(b.extension_sup, b.support_sup);
}

TEST(TangentBasis, IsOrthonormal) {
  for (const Vector3d& x : {Vector3d(1, 0, 0), Vector3d(0.1, 0.2, -0.97).normalized()}) {
    const Eigen::MatrixXd t = tangent_basis(x);
    EXPECT_NEAR((t.transpose() * t - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-14);
    EXPECT_NEAR((t.transpose() * x).norm(), 0.0, 1e-14);
  }
}
