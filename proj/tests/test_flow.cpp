#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "logflow/flow.hpp"
#include "logflow/grids.hpp"

using namespace logflow;
using Eigen::VectorXd;

namespace {

PrescribedSpeed unit_speed(int n) { return PrescribedSpeed::constant(n, 1.0); }

// Shrink time of the circle rho' = log rho from rho0 < 1: integral of
// 1/(-log rho) over [0, rho0], composite Simpson.
double circle_shrink_time(double rho0) {
  const int m = 200000;
  const double h = rho0 / m;
  auto g = [](double r) { return r <= 0.0 ? 0.0 : -1.0 / std::log(r); };
  double s = g(0.0) + g(rho0);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return s * h / 3.0;
}

RunConfig quick_config(double t_max) {
  RunConfig cfg;
  cfg.t_max = t_max;
  return cfg;
}

}  // namespace

TEST(Rhs, CircleGivesLogRho) {
  auto f = sphere_field({1, 64}, 0.7);
  const VectorXd d = rhs(f, gauss_inverse(1), unit_speed(1));
  EXPECT_NEAR((d.array() - std::log(0.7)).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(Rhs, UnitSphereIsStationary) {
  for (int n : {1, 2}) {
    auto f = sphere_field({n, n == 1 ? 64 : 10}, 1.0);
    EXPECT_LE(rhs(f, gauss_inverse(n), unit_speed(n)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Rhs, SphereWithConstantSpeedFour) {
  auto f = sphere_field({2, 10}, 2.0);
  const VectorXd d = rhs(f, gauss_inverse(2), PrescribedSpeed::constant(2, 4.0));
  EXPECT_NEAR((d.array() - std::log(16.0)).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(Rhs, NonConvexThrows) {
  auto f = sample_field({1, 128}, [](const VectorXd& x) { return 1.0 + 0.3 * std::cos(3 * std::atan2(x[1], x[0])); });
  EXPECT_THROW(rhs(f, gauss_inverse(1), unit_speed(1)), NonConvex);
}

TEST(Advance, StationarySphereIsUnchanged) {
  for (int n : {1, 2}) {
    auto f = sphere_field({n, n == 1 ? 64 : 10}, 1.0);
    const FlowOperator op(gauss_inverse(n), unit_speed(n));
    StepController ctl;
    ctl.dt = 0.1;
    SupportField g = f;
    for (int i = 0; i < 5; ++i) g = advance(g, op, ctl).field;
    EXPECT_LE((g.nodal_values() - f.nodal_values()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(g.time(), 0.0);
  }
}

TEST(Advance, CircleStepMatchesExactSphereFlow) {
  const double dt = 1e-3;
  auto f = sphere_field({1, 64}, 2.0);
  const FlowOperator op(gauss_inverse(1), unit_speed(1));
  StepController ctl;
  ctl.dt = dt;
  const StepResult s = advance(f, op, ctl, dt);
  EXPECT_DOUBLE_EQ(s.dt, dt);
  const double exact = sphere_ode_reference(2.0, gauss_inverse(1), 1.0, dt);
  EXPECT_NEAR(s.field.nodal_values().mean(), exact, 1e-12);
  EXPECT_NEAR(s.field.nodal_values().mean(), 2.0 + dt * std::log(2.0), dt * dt);
  EXPECT_DOUBLE_EQ(s.field.time(), dt);
}

TEST(Advance, OrderedPairStaysOrdered) {
  for (int n : {1, 2}) {
    const Discretization disc{n, n == 1 ? 128 : 12};
    const VectorXd small = n == 1 ? VectorXd(Eigen::Vector2d(1.5, 1.0)) : VectorXd(Eigen::Vector3d(1.5, 1.0, 1.2));
    const VectorXd big = small.array() + 0.1;
    auto h1 = ellipsoid_field(disc, small);
    auto h2 = ellipsoid_field(disc, big);
    ASSERT_LE((h1.nodal_values() - h2.nodal_values()).maxCoeff(), 0.0);
    const FlowOperator op(gauss_inverse(n), unit_speed(n));
    StepController ctl;
    ctl.dt = 0.05;
    const double t = advance(h2, op, ctl).field.time();
    const auto a = replay(h1, op, {t}).back();
    const auto b = replay(h2, op, {t}).back();
    EXPECT_LE((a.nodal_values() - b.nodal_values()).maxCoeff(), 0.0);
  }
}

TEST(Run, SmallCircleShrinks) {
  const auto traj = run(sphere_field({1, 64}, 0.5), gauss_inverse(1), unit_speed(1), quick_config(5.0));
  const double oracle = circle_shrink_time(0.5);
  EXPECT_NEAR(oracle, 0.3787, 1e-3);
  EXPECT_EQ(traj.outcome.kind, OutcomeKind::Shrunk);
  EXPECT_LE(traj.outcome.event_time, oracle);
  EXPECT_NEAR(traj.outcome.event_time, oracle, 5e-3);
  EXPECT_NEAR(traj.outcome.shrink_time_estimate, oracle, 1e-3);
  EXPECT_LT(traj.records.back().metrics.outer_radius, 0.02 * 0.5);
}

TEST(Run, LargeCircleExpands) {
  const auto traj = run(sphere_field({1, 64}, 1.5), gauss_inverse(1), unit_speed(1), quick_config(50.0));
  EXPECT_EQ(traj.outcome.kind, OutcomeKind::Expanded);
  EXPECT_GT(traj.records.back().metrics.inner_radius, 20 * 1.5);
}

TEST(Run, UnitCircleTimesOut) {
  const auto traj = run(sphere_field({1, 64}, 1.0), gauss_inverse(1), unit_speed(1), quick_config(3.0));
  EXPECT_EQ(traj.outcome.kind, OutcomeKind::TimedOut);
  EXPECT_LE(traj.max_abs_ht(), 1e-8);
  EXPECT_NEAR(traj.records.back().t, 3.0, 1e-12);
}

TEST(Run, RecordTimesIncrease) {
  const auto traj = run(ellipsoid_field({1, 128}, Eigen::Vector2d(1.2, 0.8)), gauss_inverse(1), unit_speed(1),
                        quick_config(2.0));
  ASSERT_GE(traj.records.size(), 2u);
  for (std::size_t i = 1; i < traj.records.size(); ++i) EXPECT_GT(traj.records[i].t, traj.records[i - 1].t);
  for (std::size_t i = 1; i < traj.step_times.size(); ++i) EXPECT_GT(traj.step_times[i], traj.step_times[i - 1]);
  EXPECT_EQ(traj.records.size(), traj.fields.size());
}

TEST(SphereOdeReference, StationaryRadius) {
  EXPECT_NEAR(sphere_ode_reference(1.0, gauss_inverse(2), 1.0, 5.0), 1.0, 1e-12);
  // d0 = 2, c = 4, F(1,1) = 1: rho^2 * 4 = 1 at rho = 1/2.
  EXPECT_NEAR(sphere_ode_reference(0.5, gauss_inverse(2), 4.0, 5.0), 0.5, 1e-10);
  // F~ = r1 + r2 has F(1,1) = 1/2: stationary at rho = 1/(2c).
  EXPECT_NEAR(sphere_ode_reference(0.25, trace_inverse(2), 2.0, 3.0), 0.25, 1e-10);
}

TEST(SphereOdeReference, StartsWithUnitSlopeAtE) {
  const double rho0 = std::numbers::e;
  const double h = 1e-5;
  const double slope = (sphere_ode_reference(rho0, gauss_inverse(1), 1.0, h) - rho0) / h;
  EXPECT_NEAR(slope, 1.0, 1e-4);
  double prev = rho0;
  for (double t : {0.1, 0.2, 0.4, 0.8}) {
    const double r = sphere_ode_reference(rho0, gauss_inverse(1), 1.0, t);
    EXPECT_GT(r, prev);
    prev = r;
  }
}

TEST(SphereOdeReference, StopsNearZero) {
  EXPECT_LE(sphere_ode_reference(0.5, gauss_inverse(1), 1.0, 10.0), 1e-6);
}

TEST(SphereConsistency, PdeMatchesOdeWhileRadiusInRange) {
  struct Case {
    int n;
    int res;
    double rho0;
  };
  for (const Case c : {Case{1, 64, 0.5}, Case{1, 64, 1.3}, Case{2, 8, 0.7}, Case{2, 8, 1.2}}) {
    const CurvatureSpec spec = gauss_inverse(c.n);
    const auto traj = run(sphere_field({c.n, c.res}, c.rho0), spec, unit_speed(c.n), quick_config(20.0));
    int compared = 0;
    for (const auto& r : traj.records) {
      const double rho = r.metrics.outer_radius;
      if (rho < 0.05 || rho > 20.0) continue;
      const double ref = sphere_ode_reference(c.rho0, spec, 1.0, r.t);
      EXPECT_NEAR(rho / ref, 1.0, 1e-4) << "n=" << c.n << " rho0=" << c.rho0 << " t=" << r.t;
      ++compared;
    }
    EXPECT_GE(compared, 3);
  }
}

TEST(ComparisonPrinciple, OrderedDataAndSpeedsStayOrdered) {
  const Discretization disc{1, 128};
  auto h1 = ellipsoid_field(disc, Eigen::Vector2d(1.4, 0.9));
  auto h2 = ellipsoid_field(disc, Eigen::Vector2d(1.5, 1.0));
  const FlowOperator op1(gauss_inverse(1), PrescribedSpeed::constant(1, 0.9));
  const FlowOperator op2(gauss_inverse(1), PrescribedSpeed::exponential(Eigen::Vector2d(0.1, 0.0)));
  ASSERT_LE(op1.speed().sup(), op2.speed().inf());
  const auto schedule = run(h2, op2, quick_config(2.0)).step_times;
  const auto a = replay(h1, op1, schedule);
  const auto b = replay(h2, op2, schedule);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double slack = 1e-8 * b[i].nodal_values().cwiseAbs().maxCoeff();
    EXPECT_LE((a[i].nodal_values() - b[i].nodal_values()).maxCoeff(), slack) << "t=" << a[i].time();
  }
}

TEST(Symmetry, ReflectionInvariantDataStaysInvariant) {
  // Reflection x0 -> -x0 fixes both the ellipse and f = exp(0.3 x1).
  const int nodes = 128;
  auto h = ellipsoid_field({1, nodes}, Eigen::Vector2d(2.0, 1.0));
  const auto traj = run(h, gauss_inverse(1), PrescribedSpeed::exponential(Eigen::Vector2d(0.0, 0.3)),
                        quick_config(1.0));
  for (const auto& f : traj.fields) {
    const VectorXd& v = f.nodal_values();
    double worst = 0.0;
    for (int k = 0; k < nodes; ++k) worst = std::max(worst, std::abs(v[k] - v[(nodes / 2 - k + nodes) % nodes]));
    EXPECT_LE(worst, 1e-8) << "t=" << f.time();
  }
}

TEST(Symmetry, SphereReflectionInvariantDataStaysInvariant) {
  // Reflection z -> -z fixes the ellipsoid and f = exp(0.2 x).
  auto h = ellipsoid_field({2, 10}, Eigen::Vector3d(1.3, 1.0, 0.8));
  const auto traj = run(h, gauss_inverse(2), PrescribedSpeed::exponential(Eigen::Vector3d(0.2, 0.0, 0.0)),
                        quick_config(0.5));
  for (const auto& f : traj.fields) {
    for (const Eigen::Vector3d x : {Eigen::Vector3d(0.3, 0.4, std::sqrt(0.75)), Eigen::Vector3d(-0.6, 0.0, 0.8)}) {
      const Eigen::Vector3d y(x[0], x[1], -x[2]);
      EXPECT_NEAR(f.eval(x), f.eval(y), 1e-8);
    }
  }
}

TEST(Determinism, IdenticalRunsAreBitIdentical) {
  auto h = ellipsoid_field({1, 128}, Eigen::Vector2d(1.3, 0.9));
  const auto speed = PrescribedSpeed::exponential(Eigen::Vector2d(0.2, 0.1));
  const auto a = run(h, gauss_inverse(1), speed, quick_config(1.5));
  const auto b = run(h, gauss_inverse(1), speed, quick_config(1.5));
  ASSERT_EQ(a.records.size(), b.records.size());
  EXPECT_EQ(a.step_times, b.step_times);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].metrics.inner_radius, b.records[i].metrics.inner_radius);
    EXPECT_EQ(a.records[i].metrics.outer_radius, b.records[i].metrics.outer_radius);
    EXPECT_EQ(a.records[i].min_ht, b.records[i].min_ht);
    EXPECT_TRUE(a.fields[i].nodal_values() == b.fields[i].nodal_values());
  }
}

TEST(Monitors, SphereRatiosAreConstant) {
  const auto traj = run(sphere_field({1, 64}, 1.0), gauss_inverse(1), unit_speed(1), quick_config(2.0));
  const MonitorSummary m = monitor_report(traj);
  ASSERT_EQ(m.series.size(), 4u);
  for (const auto& s : m.series) EXPECT_NEAR(s.max - s.min, 0.0, 1e-8) << s.name;
  EXPECT_TRUE(m.all_bounded());
  // R^2/(r max radius) = 1 and max radius/(1+D^2) = 1/5 for the unit circle.
  EXPECT_NEAR(m.find("pinching_ratio")->initial, 1.0, 1e-6);
  EXPECT_NEAR(m.find("max_radius_over_diameter_power")->initial, 0.2, 1e-6);
}

TEST(Monitors, EllipseRelaxationStaysBounded) {
  const auto traj = run(ellipsoid_field({1, 128}, Eigen::Vector2d(2.0, 1.0)), gauss_inverse(1), unit_speed(1),
                        quick_config(3.0));
  const MonitorSummary m = monitor_report(traj);
  for (const auto& s : m.series) {
    EXPECT_TRUE(std::isfinite(s.min) && std::isfinite(s.max)) << s.name;
    EXPECT_TRUE(s.bounded) << s.name;
  }
  EXPECT_TRUE(m.gradient_bound_all);
  EXPECT_EQ(m.times.size(), traj.records.size());
}

TEST(Monitors, GammaChangesTheCurvatureRatio) {
  const auto traj = run(sphere_field({1, 64}, 1.0), gauss_inverse(1), unit_speed(1), quick_config(0.5));
  MonitorConfig c;
  c.gamma = 1.5;
  EXPECT_NEAR(monitor_report(traj, c).find("max_radius_over_diameter_power")->initial, 1.0 / (1.0 + std::pow(2.0, 1.5)),
              1e-6);
}
