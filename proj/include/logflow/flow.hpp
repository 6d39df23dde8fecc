#pragma once

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "logflow/body_metrics.hpp"
#include "logflow/curvature.hpp"
#include "logflow/errors.hpp"
#include "logflow/soliton.hpp"
#include "logflow/speed.hpp"
#include "logflow/support_field.hpp"

namespace logflow {

/// The right-hand side log(F~(r) f(x)) with log f cached on the nodes.
class FlowOperator {
 public:
  FlowOperator(CurvatureSpec spec, PrescribedSpeed speed) : spec_(std::move(spec)), speed_(std::move(speed)) {}

  const CurvatureSpec& spec() const { return spec_; }
  const PrescribedSpeed& speed() const { return speed_; }

  /// log(F~ f) at every node; NonConvex if a radius is at or below the floor.
  Eigen::VectorXd nodal_rhs(const SupportField& field) const {
    const Eigen::VectorXd& log_f = log_speed(field);
    const Eigen::MatrixXd radii = nodal_radii(field);
    const double floor = radius_floor(field);
    Eigen::VectorXd out(field.node_count());
    Eigen::VectorXd r(field.dim());
    for (int k = 0; k < field.node_count(); ++k) {
      r = radii.col(k);
      if (!(r.minCoeff() > floor)) throw NonConvex("principal radius below convexity floor during flow");
      out[k] = std::log(spec_.value(r)) + log_f[k];
    }
    return out;
  }

  /// Time derivative of the ODE state (nodal values or coefficients).
  Eigen::VectorXd state_rhs(const SupportField& field) const { return field.project(nodal_rhs(field)); }

  /// Bound on the spectral radius of the linearized operator.
  double stiffness(const SupportField& field) const {
    const Eigen::MatrixXd radii = nodal_radii(field);
    double weight = 0.0;
    Eigen::VectorXd r(field.dim());
    for (int k = 0; k < field.node_count(); ++k) {
      r = radii.col(k);
      if (!(r.minCoeff() > 0.0)) continue;
      weight = std::max(weight, spec_.grad(r).sum() / spec_.value(r));
    }
    if (field.dim() == 1) return weight * field.circle_grid()->laplacian_bound();
    const double l = field.sphere_grid()->degree();
    return weight * l * (l + 1.0);
  }

 private:
  static Eigen::MatrixXd nodal_radii(const SupportField& field) {
    if (field.dim() == 1) {
      const auto& g = *field.circle_grid();
      const Eigen::VectorXd& h = field.nodal_values();
      return (g.second_derivative(h) + h).transpose();
    }
    return field.geometry().radii;
  }

  const Eigen::VectorXd& log_speed(const SupportField& field) const {
    const void* key = field.dim() == 1 ? static_cast<const void*>(field.circle_grid().get())
                                       : static_cast<const void*>(field.sphere_grid().get());
    if (key != cache_key_) {
      cache_.resize(field.node_count());
      for (int k = 0; k < field.node_count(); ++k) cache_[k] = std::log(speed_(field.node(k)));
      cache_key_ = key;
    }
    return cache_;
  }

  CurvatureSpec spec_;
  PrescribedSpeed speed_;
  mutable const void* cache_key_ = nullptr;
  mutable Eigen::VectorXd cache_;
};

inline Eigen::VectorXd rhs(const SupportField& field, const CurvatureSpec& spec, const PrescribedSpeed& data) {
  return FlowOperator(spec, data).nodal_rhs(field);
}

struct StepController {
  double rtol = 1e-7;
  double atol = 1e-9;
  double dt = 1e-3;        // proposal for the next step
  double dt_max = 0.25;
  double c_stab = 2.5;
  double growth = 1.5;
  int max_halvings = 12;
};

struct StepResult {
  SupportField field;
  double dt = 0.0;
  int rejected = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr std::array<std::array<double, 6>, 7> a{{
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  }};
  static constexpr std::array<double, 7> b5{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
  static constexpr std::array<double, 7> b4{5179.0 / 57600, 0.0,          7571.0 / 16695, 393.0 / 640,
                                            -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

// One trial step; returns the 5th-order state and the scaled error norm.
inline std::pair<Eigen::VectorXd, double> dp_trial(const SupportField& field, const FlowOperator& op, double h,
                                                   const StepController& ctl) {
  using T = DormandPrince;
  const Eigen::VectorXd& y = field.state();
  std::array<Eigen::VectorXd, 7> k;
  k[0] = op.state_rhs(field);
  for (int s = 1; s < 7; ++s) {
    Eigen::VectorXd ys = y;
    for (int j = 0; j < s; ++j)
      if (T::a[s][j] != 0.0) ys += h * T::a[s][j] * k[j];
    k[s] = op.state_rhs(field.with_state(ys, field.time() + T::c[s] * h));
  }
  Eigen::VectorXd y5 = y, err = Eigen::VectorXd::Zero(y.size());
  for (int s = 0; s < 7; ++s) {
    y5 += h * T::b5[s] * k[s];
    err += h * (T::b5[s] - T::b4[s]) * k[s];
  }
  const double scale = ctl.atol + ctl.rtol * std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
  return {std::move(y5), err.cwiseAbs().maxCoeff() / scale};
}

}  // namespace detail

/// One adaptive Dormand-Prince step of at most `dt_limit`.
inline StepResult advance(const SupportField& field, const FlowOperator& op, StepController& ctl,
                          double dt_limit = std::numeric_limits<double>::infinity()) {
  const double cap = ctl.c_stab / std::max(op.stiffness(field), 1e-300);
  const double proposal = std::min(ctl.dt, ctl.dt_max);
  double h = std::min({proposal, cap, dt_limit});
  int halvings = 0;
  while (true) {
    double err = std::numeric_limits<double>::infinity();
    std::optional<Eigen::VectorXd> y;
    try {
      auto [y5, e] = detail::dp_trial(field, op, h, ctl);
      if (y5.allFinite() && std::isfinite(e)) {
        y = std::move(y5);
        err = e;
      }
    } catch (const NonConvex&) {
    }
    // The last stage is evaluated at the new state, so acceptance implies convexity there.
    if (y && err <= 1.0) {
      const double factor = std::min(ctl.growth, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
      ctl.dt = factor < 1.0 ? h * factor : (h < proposal ? proposal : h * factor);
      return StepResult{field.with_state(std::move(*y), field.time() + h), h, halvings};
    }
    if (++halvings > ctl.max_halvings)
      throw StepFailure("time step rejected " + std::to_string(ctl.max_halvings) + " consecutive times at t=" +
                        std::to_string(field.time()));
    h *= 0.5;
    ctl.dt = h;
  }
}

enum class OutcomeKind { Shrunk, Expanded, Translating, TimedOut };

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Shrunk: return "Shrunk";
    case OutcomeKind::Expanded: return "Expanded";
    case OutcomeKind::Translating: return "Translating";
    case OutcomeKind::TimedOut: return "TimedOut";
  }
  return "TimedOut";
}

struct Outcome {
  OutcomeKind kind = OutcomeKind::TimedOut;
  double event_time = 0.0;
  double shrink_time_estimate = 0.0;  // Shrunk only: event time plus extrapolation of R to 0
  Eigen::VectorXd xi;                 // Translating only
  double residual = 0.0;              // Translating only
};

struct MonitorConfig {
  double gamma = 2.0;
  double divergence_factor = 10.0;
  bool enabled = true;
};

struct RunConfig {
  double eps_shrink = 0.02;
  double kappa_expand = 20.0;
  double t_max = 50.0;
  double record_dt = 0.1;
  int snapshot_stride = 10;
  bool detect_translation = false;
  double tol_trans = 1e-2;
  double translation_window = 5.0;
  StepController controller;
  MonitorConfig monitors;
};

struct FlowRecord {
  double t = 0.0;
  BodyMetrics metrics;
  double min_radius = 0.0;
  double max_radius = 0.0;
  double min_ht = 0.0;
  double max_abs_ht = 0.0;
  double dt = 0.0;
  GradientBound gradient;
};

struct FlowTrajectory {
  std::vector<FlowRecord> records;
  std::vector<SupportField> fields;  // one per record
  std::vector<double> step_times;    // end time of every accepted step
  Outcome outcome;
  double initial_outer_radius = 0.0;
  int rejected_steps = 0;

  double max_abs_ht() const {
    double m = 0.0;
    for (const auto& r : records) m = std::max(m, r.max_abs_ht);
    return m;
  }
};

/// Raised when stepping fails; carries the trajectory up to the failure.
class RunFailure : public StepFailure {
 public:
  RunFailure(const std::string& what, FlowTrajectory partial)
      : StepFailure(what), partial_(std::make_shared<FlowTrajectory>(std::move(partial))) {}
  const FlowTrajectory& partial() const { return *partial_; }

 private:
  std::shared_ptr<FlowTrajectory> partial_;
};

namespace detail {

inline FlowRecord make_record(const SupportField& field, const FlowOperator& op, double dt) {
  FlowRecord rec;
  rec.t = field.time();
  rec.metrics = body_metrics(field);
  const NodalGeometry g = field.geometry();
  rec.min_radius = g.min_radius();
  rec.max_radius = g.max_radius();
  const Eigen::VectorXd ht = op.nodal_rhs(field);
  rec.min_ht = ht.minCoeff();
  rec.max_abs_ht = ht.cwiseAbs().maxCoeff();
  rec.dt = dt;
  rec.gradient = gradient_bound_check(field);
  return rec;
}

// Cheap bounds around the exact radii: R <= max(H - q.x), R >= d/2,
// r >= min(H - q.x), r <= min width / 2.
struct RadiusBounds {
  double outer_upper, outer_lower, inner_upper, inner_lower;
};

inline RadiusBounds radius_bounds(const SupportField& field, const Eigen::MatrixXd& nodes,
                                  const std::vector<int>& antipode) {
  const Eigen::VectorXd& h = field.nodal_values();
  const Eigen::VectorXd gap = h - nodes.transpose() * steiner_point(field);
  double wmax = 0.0, wmin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < int(h.size()); ++k) {
    const double w = h[k] + h[antipode[k]];
    wmax = std::max(wmax, w);
    wmin = std::min(wmin, w);
  }
  return {gap.maxCoeff(), 0.5 * wmax, 0.5 * wmin, gap.minCoeff()};
}

inline std::vector<int> antipodes(const SupportField& field) {
  std::vector<int> a(field.node_count());
  if (field.dim() == 1) {
    const int n = field.node_count();
    for (int k = 0; k < n; ++k) a[k] = (k + n / 2) % n;
    return a;
  }
  const auto& g = *field.sphere_grid();
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j)
      a[i * g.n_phi() + j] = (g.n_theta() - 1 - i) * g.n_phi() + (j + g.n_phi() / 2) % g.n_phi();
  return a;
}

}  // namespace detail

/// Evolves `initial` until Shrunk, Expanded, Translating (when enabled) or
/// TimedOut. Records are taken every record_dt and at the terminal event.
inline FlowTrajectory run(const SupportField& initial, const FlowOperator& op, const RunConfig& cfg) {
  FlowTrajectory traj;
  StepController ctl = cfg.controller;
  Eigen::MatrixXd nodes(initial.dim() + 1, initial.node_count());
  for (int k = 0; k < initial.node_count(); ++k) nodes.col(k) = initial.node(k);
  const std::vector<int> anti = detail::antipodes(initial);

  SupportField field = initial;
  traj.records.push_back(detail::make_record(field, op, 0.0));
  traj.fields.push_back(field);
  const double r0 = traj.records.front().metrics.outer_radius;
  traj.initial_outer_radius = r0;
  const double shrink_level = cfg.eps_shrink * r0;
  const double expand_level = cfg.kappa_expand * r0;
  const double t0 = initial.time();
  int next_record = 1;
  double last_dt = 0.0;
  // Outer-radius proxy at the last two steps, for extrapolating the shrink time.
  double proxy_t = t0, proxy_r = r0;

  auto finish = [&](OutcomeKind kind) {
    traj.outcome.kind = kind;
    traj.outcome.event_time = field.time();
    if (traj.records.back().t != field.time()) {
      traj.records.push_back(detail::make_record(field, op, last_dt));
      traj.fields.push_back(field);
    }
  };

  while (true) {
    const double t_record = t0 + next_record * cfg.record_dt;
    const double t_stop = std::min(t_record, t0 + cfg.t_max);
    StepResult step = [&] {
      try {
        return advance(field, op, ctl, t_stop - field.time());
      } catch (const StepFailure& e) {
        throw RunFailure(e.what(), traj);
      }
    }();
    traj.rejected_steps += step.rejected;
    last_dt = step.dt;
    field = std::move(step.field);
    if (std::abs(field.time() - t_stop) <= 1e-12 * std::max(1.0, t_stop)) field = field.with_state(field.state(), t_stop);
    traj.step_times.push_back(field.time());

    const auto b = detail::radius_bounds(field, nodes, anti);
    const double prev_proxy_t = proxy_t, prev_proxy_r = proxy_r;
    proxy_t = field.time();
    proxy_r = b.outer_upper;
    if (b.outer_lower < shrink_level || b.inner_lower > expand_level ||
        (b.outer_upper < shrink_level) || (b.inner_upper > expand_level)) {
      const BodyMetrics m = body_metrics(field);
      if (m.outer_radius < shrink_level) {
        finish(OutcomeKind::Shrunk);
        const double slope = (prev_proxy_r - proxy_r) / (proxy_t - prev_proxy_t);
        traj.outcome.shrink_time_estimate = field.time() + (slope > 0.0 ? m.outer_radius / slope : 0.0);
        return traj;
      }
      if (m.inner_radius > expand_level) {
        finish(OutcomeKind::Expanded);
        return traj;
      }
    }

    if (field.time() >= t_stop) {
      if (field.time() >= t_record) {
        traj.records.push_back(detail::make_record(field, op, step.dt));
        traj.fields.push_back(field);
        ++next_record;
        if (cfg.detect_translation && field.time() - t0 >= cfg.translation_window) {
          std::vector<SupportField> window;
          for (const auto& f : traj.fields)
            if (f.time() >= field.time() - cfg.translation_window - 1e-12) window.push_back(f);
          if (window.size() >= 3) {
            const SolitonFit fit = fit_translation(window, cfg.tol_trans);
            if (fit.translating) {
              finish(OutcomeKind::Translating);
              traj.outcome.xi = fit.xi;
              traj.outcome.residual = fit.residual;
              return traj;
            }
          }
        }
      }
      if (field.time() >= t0 + cfg.t_max) {
        finish(OutcomeKind::TimedOut);
        return traj;
      }
    }
  }
}

inline FlowTrajectory run(const SupportField& initial, const CurvatureSpec& spec, const PrescribedSpeed& data,
                          const RunConfig& cfg) {
  return run(initial, FlowOperator(spec, data), cfg);
}

/// Fixed-step replay of a given schedule of step end times.
inline std::vector<SupportField> replay(const SupportField& initial, const FlowOperator& op,
                                        const std::vector<double>& step_times) {
  std::vector<SupportField> out;
  SupportField field = initial;
  StepController ctl;
  ctl.rtol = ctl.atol = std::numeric_limits<double>::infinity();
  ctl.c_stab = std::numeric_limits<double>::infinity();
  for (double t : step_times) {
    ctl.dt = t - field.time();
    ctl.dt_max = ctl.dt;
    field = advance(field, op, ctl, ctl.dt).field;
    field = field.with_state(field.state(), t);
    out.push_back(field);
  }
  return out;
}

/// rho(T) for the sphere ODE rho' = log(rho^d0 c / F(1..1)), adaptive
/// Dormand-Prince at tolerance 1e-10, stopping once rho <= 1e-6.
inline double sphere_ode_reference(double rho0, const CurvatureSpec& spec, double c, double t_end) {
  namespace odeint = boost::numeric::odeint;
  const double d0 = spec.degree;
  const double log_scale = std::log(c / spec.f_at_ones());
  auto system = [&](const std::array<double, 1>& x, std::array<double, 1>& dxdt, double) {
    dxdt[0] = d0 * std::log(std::max(x[0], 1e-12)) + log_scale;
  };
  auto stepper = odeint::make_dense_output(1e-10, 1e-10, odeint::runge_kutta_dopri5<std::array<double, 1>>());
  std::array<double, 1> x{rho0};
  if (t_end <= 0.0) return rho0;
  stepper.initialize(x, 0.0, 1e-4);
  while (stepper.current_time() < t_end) {
    stepper.do_step(system);
    if (stepper.current_state()[0] <= 1e-6) return std::max(stepper.current_state()[0], 0.0);
  }
  stepper.calc_state(t_end, x);
  return x[0];
}

struct MonitorSeries {
  std::string name;
  std::string bound;  // "upper" or "lower"
  std::vector<double> values;
  double initial = 0.0;
  double min = 0.0;
  double max = 0.0;
  double divergence = 0.0;  // worst growth relative to the initial value
  bool bounded = true;
};

struct MonitorSummary {
  std::vector<MonitorSeries> series;
  std::vector<double> times;
  bool gradient_bound_all = true;
  double epsilon0_estimate = 0.0;

  bool all_bounded() const {
    return gradient_bound_all && std::all_of(series.begin(), series.end(), [](const auto& s) { return s.bounded; });
  }
  const MonitorSeries* find(const std::string& name) const {
    for (const auto& s : series)
      if (s.name == name) return &s;
    return nullptr;
  }
};

/// Ratios whose boundedness the a priori estimates predict. Upper-bounded
/// ratios must not grow by more than the divergence factor; lower-bounded
/// ones must not fall by more than it.
inline MonitorSummary monitor_report(const FlowTrajectory& traj, const MonitorConfig& cfg = {}) {
  MonitorSummary s;
  if (traj.records.empty()) return s;
  MonitorSeries curvature{"max_radius_over_diameter_power", "upper"};
  MonitorSeries speed{"min_ht", "lower"};
  MonitorSeries inner{"inner_radius_ratio", "lower"};
  MonitorSeries pinch{"pinching_ratio", "upper"};
  double sup_outer = 0.0;
  for (const auto& r : traj.records) {
    s.times.push_back(r.t);
    sup_outer = std::max(sup_outer, r.metrics.outer_radius);
    curvature.values.push_back(r.max_radius / (1.0 + std::pow(r.metrics.diameter, cfg.gamma)));
    speed.values.push_back(r.min_ht);
    inner.values.push_back(r.metrics.inner_radius * (1.0 + std::pow(sup_outer, cfg.gamma)) /
                           (r.metrics.outer_radius * r.metrics.outer_radius));
    pinch.values.push_back(r.metrics.outer_radius * r.metrics.outer_radius /
                           (r.metrics.inner_radius * r.max_radius));
    s.gradient_bound_all = s.gradient_bound_all && r.gradient.pass;
  }
  for (MonitorSeries* m : {&curvature, &speed, &inner, &pinch}) {
    m->initial = m->values.front();
    m->min = *std::min_element(m->values.begin(), m->values.end());
    m->max = *std::max_element(m->values.begin(), m->values.end());
    if (m == &speed) {
      m->divergence = std::max(0.0, -m->min) / std::max(1.0, std::abs(m->initial));
    } else if (m->bound == "upper") {
      m->divergence = m->max / m->initial;
    } else {
      m->divergence = m->initial / m->min;
    }
    m->bounded = std::isfinite(m->divergence) && m->divergence <= cfg.divergence_factor;
    s.series.push_back(*m);
  }
  return s;
}

}  // namespace logflow
