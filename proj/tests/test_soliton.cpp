#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "logflow/flow.hpp"
#include "logflow/grids.hpp"
#include "logflow/soliton.hpp"

using namespace logflow;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<SupportField> translating_window(const SupportField& h0, const VectorXd& xi, int count, double dt) {
  std::vector<SupportField> w;
  for (int i = 0; i < count; ++i) {
    const SupportField h = h0.translated(i * dt * xi);
    w.push_back(h.with_state(h.state(), i * dt));
  }
  return w;
}

// Moment integral int x e^{s xi.x}/f on a fine trapezoid rule, n = 1.
Eigen::Vector2d circle_moment(const PrescribedSpeed& f, const VectorXd& xi, int sign) {
  const int m = 20000;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int k = 0; k < m; ++k) {
    const double th = 2 * kPi * k / m;
    const Eigen::Vector2d x(std::cos(th), std::sin(th));
    acc += x * std::exp(sign * xi.dot(x)) / f(x);
  }
  return acc * 2 * kPi / m;
}

}  // namespace

TEST(FitTranslation, SyntheticTranslationIsRecovered) {
  const auto h0 = ellipsoid_field({1, 128}, Eigen::Vector2d(1.5, 1.0));
  const Eigen::Vector2d xi(0.3, 0.0);
  const auto fit = fit_translation(translating_window(h0, xi, 6, 0.1));
  EXPECT_LE((fit.xi - xi).norm(), 1e-12);
  EXPECT_LE(fit.residual, 1e-12);
  EXPECT_TRUE(fit.translating);
  EXPECT_DOUBLE_EQ(fit.t_begin, 0.0);
  EXPECT_DOUBLE_EQ(fit.t_end, 0.5);
  EXPECT_LE((fit.profile.nodal_values() - h0.nodal_values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitTranslation, SyntheticTranslationOnSphere) {
  const auto h0 = ellipsoid_field({2, 12}, Eigen::Vector3d(1.2, 1.0, 0.9));
  const Eigen::Vector3d xi(0.1, -0.2, 0.05);
  const auto fit = fit_translation(translating_window(h0, xi, 5, 0.2));
  EXPECT_LE((fit.xi - xi).norm(), 1e-12);
  EXPECT_LE(fit.residual, 1e-12);
  EXPECT_TRUE(fit.translating);
}

TEST(FitTranslation, StationarySphere) {
  RunConfig cfg;
  cfg.t_max = 1.0;
  const auto traj = run(sphere_field({1, 64}, 1.0), gauss_inverse(1), PrescribedSpeed::constant(1, 1.0), cfg);
  const auto fit = fit_translation(traj.fields);
  EXPECT_LE(fit.xi.norm(), 1e-8);
  EXPECT_LE(fit.residual, 1e-8);
}

TEST(FitTranslation, NonTranslatingMotionIsRejected) {
  // A shrinking circle: rate log(rho) is not of the form xi.x.
  std::vector<SupportField> w;
  for (int i = 0; i < 5; ++i) {
    const SupportField h = sphere_field({1, 64}, 0.5 - 0.05 * i);
    w.push_back(h.with_state(h.state(), 0.1 * i));
  }
  const auto fit = fit_translation(w);
  EXPECT_NEAR(fit.residual, 0.5, 1e-12);
  EXPECT_FALSE(fit.translating);
}

TEST(FitTranslation, TooFewFields) {
  const auto h = sphere_field({1, 64}, 1.0);
  EXPECT_THROW(fit_translation({h, h}), InsufficientWindow);
}

TEST(GaussTranslatorSpeed, ConstantSpeedGivesZero) {
  for (int n : {1, 2}) {
    const auto sol = gauss_translator_speed(PrescribedSpeed::constant(n, 3.0));
    EXPECT_LE(sol.xi.norm(), 1e-12);
    EXPECT_EQ(sol.xi.size(), n + 1);
  }
}

TEST(GaussTranslatorSpeed, ExponentialSpeedGivesItsVector) {
  const Eigen::Vector2d v2(0.4, -0.3);
  EXPECT_LE((gauss_translator_speed(PrescribedSpeed::exponential(v2)).xi - v2).norm(), 1e-10);
  const Eigen::Vector3d v3(0.1, 0.2, -0.5);
  EXPECT_LE((gauss_translator_speed(PrescribedSpeed::exponential(v3)).xi - v3).norm(), 1e-10);
  EXPECT_LE((gauss_translator_speed(PrescribedSpeed::exponential(v3), -1).xi + v3).norm(), 1e-10);
}

TEST(GaussTranslatorSpeed, AffineSpeedAgainstBisection) {
  const auto f = PrescribedSpeed::affine(1.0, Eigen::Vector2d(0.5, 0.0));
  // The first moment component as a function of xi_1 alone, by bisection.
  auto moment = [&](double a) { return circle_moment(f, Eigen::Vector2d(a, 0.0), 1)[0]; };
  double lo = -5.0, hi = 5.0;
  ASSERT_LT(moment(lo) * moment(hi), 0.0);
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (moment(mid) * moment(lo) > 0.0 ? lo : hi) = mid;
  }
  const auto sol = gauss_translator_speed(f);
  EXPECT_NEAR(sol.xi[0], 0.5 * (lo + hi), 1e-9);
  EXPECT_NEAR(sol.xi[1], 0.0, 1e-12);
  EXPECT_GT(sol.xi[0], 0.0);
}

TEST(GaussTranslatorSpeed, UniqueFromRandomStarts) {
  const auto f = PrescribedSpeed::log_harmonic(2, {{1, 1, 0.3}, {2, 0, 0.2}, {2, -1, -0.15}});
  const VectorXd ref = gauss_translator_speed(f).xi;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    const VectorXd start = Eigen::Vector3d(nd(rng), nd(rng), nd(rng));
    EXPECT_LE((gauss_translator_speed(f, 1, start).xi - ref).norm(), 1e-8);
  }
}

TEST(GaussTranslatorSpeed, MomentConditionHolds) {
  const auto f = PrescribedSpeed::affine(1.0, Eigen::Vector2d(0.3, -0.4));
  for (int sign : {1, -1}) {
    const auto sol = gauss_translator_speed(f, sign);
    EXPECT_LE(sol.gradient_norm, 1e-8 * sol.potential);
    EXPECT_LE(circle_moment(f, sol.xi, sign).norm(), 1e-8 * sol.potential);
    EXPECT_EQ(sol.sign, sign);
  }
}

TEST(GaussTranslatorSpeed, RotationEquivariance) {
  auto base = [](const VectorXd& x) { return std::exp(0.3 * x[0] + 0.2 * x[1] * x[2] - 0.1 * x[2]); };
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto f = PrescribedSpeed::custom(2, base, "base");
  const auto fr = PrescribedSpeed::custom(2, [&](const VectorXd& x) { return base(rot * x); }, "rotated");
  const VectorXd xi = gauss_translator_speed(f).xi;
  const VectorXd xr = gauss_translator_speed(fr).xi;
  EXPECT_LE((xr - rot.transpose() * xi).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(TranslatorResidual, UnitCircleUnitSpeed) {
  const auto h = sphere_field({1, 64}, 1.0);
  EXPECT_NEAR(translator_residual_gauss(h, Eigen::Vector2d::Zero(), PrescribedSpeed::constant(1, 1.0)), 0.0, 1e-12);
}

TEST(TranslatorResidual, SphereUnderExponentialSpeed) {
  // For f = e^{v.x} the unit sphere closes the equation in one convention
  // only; the other leaves 2|v|.
  const Eigen::Vector3d v(0.2, 0.0, 0.0);
  const auto h = sphere_field({2, 10}, 1.0);
  const auto f = PrescribedSpeed::exponential(v);
  const VectorXd xi = gauss_translator_speed(f).xi;
  EXPECT_NEAR(translator_residual_gauss(h, xi, f, 1), 0.0, 1e-8);
  EXPECT_NEAR(translator_residual_gauss(h, xi, f, -1), 2 * v.norm(), 1e-3);
}

TEST(TranslatorResidual, DetectsNonTranslator) {
  const auto h = ellipsoid_field({1, 128}, Eigen::Vector2d(1.5, 1.0));
  EXPECT_GT(translator_residual_gauss(h, Eigen::Vector2d::Zero(), PrescribedSpeed::constant(1, 1.0)), 0.1);
}

TEST(TranslatorResidual, AlternativeCurvatureFunction) {
  // Sphere of radius 2 under the mean curvature: F = 1, log F = 0.
  const auto h = sphere_field({2, 10}, 2.0);
  const CurvatureSpec spec = harmonic_inverse(2);
  EXPECT_NEAR(translator_residual_gauss(h, Eigen::Vector3d::Zero(), PrescribedSpeed::constant(2, 1.0), 1, &spec), 0.0,
              1e-12);
}

TEST(TranslatorResidual, NonConvexThrows) {
  auto h = sample_field({1, 128}, [](const VectorXd& x) { return 1.0 + 0.3 * std::cos(3 * std::atan2(x[1], x[0])); });
  EXPECT_THROW(translator_residual_gauss(h, Eigen::Vector2d::Zero(), PrescribedSpeed::constant(1, 1.0)), NonConvex);
}
