#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "logflow/errors.hpp"
#include "logflow/flow.hpp"
#include "logflow/grids.hpp"
#include "logflow/support_field.hpp"

namespace logflow {

/// Monotone family Theta -> H_Theta of convex bodies containing the origin.
class Foliation {
 public:
  enum class Kind { spheres, homothets, offset };

  /// H_Theta = Theta
  static Foliation spheres(const Discretization& disc) {
    return Foliation(Kind::spheres, sphere_field(disc, 1.0), {});
  }

  /// H_Theta = Theta H_0
  static Foliation homothets(const SupportField& base) {
    if (!(base.nodal_values().minCoeff() > 0.0)) throw DomainError("homothet base must contain the origin");
    return Foliation(Kind::homothets, base, {});
  }

  /// H_Theta = H_0 + (Theta - 1) s with s > 0
  static Foliation offset(const SupportField& base, const SupportField& direction) {
    if (!(direction.nodal_values().minCoeff() > 0.0)) throw DomainError("offset direction must be positive");
    if (direction.node_count() != base.node_count()) throw DomainError("offset direction resolution mismatch");
    return Foliation(Kind::offset, base, direction);
  }

  Kind kind() const { return kind_; }
  const SupportField& base() const { return base_; }
  double theta_min = 1e-3;
  double theta_max = 1e3;

  /// The leaf at Theta, spot-checked for strict nesting against the last
  /// evaluated leaf.
  SupportField leaf(double theta) const {
    if (!(theta >= theta_min && theta <= theta_max))
      throw DomainError("Theta=" + std::to_string(theta) + " outside the foliation range");
    SupportField h = evaluate(theta);
    if (!(h.nodal_values().minCoeff() > 0.0)) throw NonMonotone("leaf does not contain the origin");
    std::lock_guard lock(mu_);
    if (cached_ && cached_theta_ != theta) {
      const Eigen::VectorXd diff = (h.nodal_values() - cached_->nodal_values()) / (theta - cached_theta_);
      if (!(diff.minCoeff() > 0.0))
        throw NonMonotone("leaves at Theta=" + std::to_string(cached_theta_) + " and " + std::to_string(theta) +
                          " are not strictly nested");
      min_nesting_rate_ = std::min(min_nesting_rate_, diff.minCoeff());
    }
    cached_ = h;
    cached_theta_ = theta;
    return h;
  }

  /// Smallest observed (H_2 - H_1)/(Theta_2 - Theta_1) over checked pairs.
  double min_nesting_rate() const {
    std::lock_guard lock(mu_);
    return min_nesting_rate_;
  }

  Foliation(const Foliation& o)
      : theta_min(o.theta_min), theta_max(o.theta_max), kind_(o.kind_), base_(o.base_), direction_(o.direction_) {}

 private:
  Foliation(Kind kind, SupportField base, std::optional<SupportField> direction)
      : kind_(kind), base_(std::move(base)), direction_(std::move(direction)) {}

  SupportField evaluate(double theta) const {
    switch (kind_) {
      case Kind::spheres:
      case Kind::homothets:
        return base_.with_state(theta * base_.state(), 0.0);
      case Kind::offset:
        return base_.with_state(base_.state() + (theta - 1.0) * direction_->state(), 0.0);
    }
    return base_;
  }

  Kind kind_;
  SupportField base_;
  std::optional<SupportField> direction_;
  mutable std::mutex mu_;
  mutable std::optional<SupportField> cached_;
  mutable double cached_theta_ = 0.0;
  mutable double min_nesting_rate_ = std::numeric_limits<double>::infinity();
};

inline const char* to_string(Foliation::Kind k) {
  switch (k) {
    case Foliation::Kind::spheres: return "spheres";
    case Foliation::Kind::homothets: return "homothets";
    case Foliation::Kind::offset: return "offset";
  }
  return "spheres";
}

struct Probe {
  double theta = 0.0;
  OutcomeKind outcome = OutcomeKind::TimedOut;
  double event_time = 0.0;
  double t_max = 0.0;
  std::string error;  // non-empty when the run failed

  bool decisive() const {
    return error.empty() && (outcome == OutcomeKind::Shrunk || outcome == OutcomeKind::Expanded);
  }
};

struct CriticalBracket {
  double theta_minus = 0.0;  // classified Shrunk
  double theta_plus = 0.0;   // classified Expanded
  double tolerance = 0.0;
  std::vector<Probe> probes;
  std::vector<double> undetermined;
  bool converged = false;
  std::string sweep_log;

  double width() const { return theta_plus - theta_minus; }
  double estimate() const { return 0.5 * (theta_minus + theta_plus); }
};

inline Probe probe_leaf(const Foliation& fol, double theta, const FlowOperator& op, RunConfig cfg) {
  Probe p{theta, OutcomeKind::TimedOut, 0.0, cfg.t_max, {}};
  try {
    const FlowTrajectory tr = run(fol.leaf(theta), op, cfg);
    p.outcome = tr.outcome.kind;
    p.event_time = tr.outcome.event_time;
  } catch (const RunFailure& e) {
    p.error = e.what();
    p.event_time = e.partial().records.empty() ? 0.0 : e.partial().records.back().t;
  }
  return p;
}

/// Radii of the stationary spheres for speeds M = sup f and m = inf f: any
/// leaf inside the first shrinks, any leaf containing the second expands.
inline std::pair<double, double> sphere_criterion_radii(const FlowOperator& op) {
  const double f1 = op.spec().f_at_ones();
  const double d0 = op.spec().degree;
  return {std::pow(f1 / op.speed().sup(), 1.0 / d0), std::pow(f1 / op.speed().inf(), 1.0 / d0)};
}

/// Geometric sweep for a Shrunk leaf below and an Expanded leaf above,
/// seeded by the sphere criterion. Returns the bracket with its probes.
inline CriticalBracket auto_bracket(const Foliation& fol, const FlowOperator& op, const RunConfig& cfg,
                                    int max_sweeps = 40) {
  CriticalBracket b;
  std::ostringstream log;
  const auto [shrink_r, expand_r] = sphere_criterion_radii(op);
  log << "sphere criterion: shrink below " << shrink_r << ", expand above " << expand_r << "\n";

  const double start = std::clamp(1.0, fol.theta_min, fol.theta_max);
  auto fail = [&](const std::string& why) {
    log << why << "\n";
    throw BracketFailure(why, log.str());
  };

  // Seed: the largest swept Theta with max H < shrink radius, and the
  // smallest with min H > expand radius.
  double lo = start;
  for (int i = 0; fol.leaf(lo).nodal_values().maxCoeff() >= shrink_r; ++i) {
    if (lo / 2 < fol.theta_min || i >= max_sweeps) fail("shrink seed sweep left the parameter range");
    lo /= 2;
  }
  double hi = start;
  for (int i = 0; fol.leaf(hi).nodal_values().minCoeff() <= expand_r; ++i) {
    if (hi * 2 > fol.theta_max || i >= max_sweeps) fail("expand seed sweep left the parameter range");
    hi *= 2;
  }
  log << "seeds: Theta_lo=" << lo << " Theta_hi=" << hi << "\n";

  for (int i = 0;; ++i) {
    Probe p = probe_leaf(fol, lo, op, cfg);
    b.probes.push_back(p);
    log << "probe Theta=" << lo << " -> " << (p.error.empty() ? to_string(p.outcome) : "failed") << "\n";
    if (p.decisive() && p.outcome == OutcomeKind::Shrunk) break;
    if (lo / 2 < fol.theta_min || i >= max_sweeps) fail("no shrinking leaf found in the parameter range");
    lo /= 2;
  }
  for (int i = 0;; ++i) {
    Probe p = probe_leaf(fol, hi, op, cfg);
    b.probes.push_back(p);
    log << "probe Theta=" << hi << " -> " << (p.error.empty() ? to_string(p.outcome) : "failed") << "\n";
    if (p.decisive() && p.outcome == OutcomeKind::Expanded) break;
    if (hi * 2 > fol.theta_max || i >= max_sweeps) fail("no expanding leaf found in the parameter range");
    hi *= 2;
  }
  b.theta_minus = lo;
  b.theta_plus = hi;
  b.sweep_log = log.str();
  return b;
}

/// Bisection on Theta. Inconclusive probes (TimedOut, Translating, failed
/// runs) widen an undetermined middle zone; the certified bracket moves only
/// on Shrunk/Expanded. T_max grows by 1.5x whenever both children of a zone
/// refinement are inconclusive.
inline CriticalBracket find_critical(const Foliation& fol, const FlowOperator& op, RunConfig cfg, double tol,
                                     int budget = 40) {
  CriticalBracket b = auto_bracket(fol, op, cfg);
  b.tolerance = tol;
  std::ostringstream log;
  log << b.sweep_log;
  int used = 0;
  std::optional<std::pair<double, double>> zone;

  auto classify = [&](double theta) {
    Probe p = probe_leaf(fol, theta, op, cfg);
    b.probes.push_back(p);
    ++used;
    log << "bisect Theta=" << theta << " T_max=" << cfg.t_max << " -> "
        << (p.error.empty() ? to_string(p.outcome) : "failed: " + p.error) << "\n";
    if (!p.decisive()) b.undetermined.push_back(theta);
    return p;
  };

  while (b.width() > tol && used < budget) {
    if (!zone) {
      const double mid = b.estimate();
      const Probe p = classify(mid);
      if (p.decisive() && p.outcome == OutcomeKind::Shrunk) b.theta_minus = mid;
      else if (p.decisive()) b.theta_plus = mid;
      else zone = std::pair{mid, mid};
      continue;
    }
    bool inconclusive_lo = false, inconclusive_hi = false;
    const double a = 0.5 * (b.theta_minus + zone->first);
    const Probe pa = classify(a);
    if (pa.decisive() && pa.outcome == OutcomeKind::Shrunk) {
      b.theta_minus = a;
    } else if (pa.decisive()) {
      b.theta_plus = a;
      zone.reset();
      continue;
    } else {
      zone->first = a;
      inconclusive_lo = true;
    }
    if (used >= budget) break;
    const double c = 0.5 * (zone->second + b.theta_plus);
    const Probe pc = classify(c);
    if (pc.decisive() && pc.outcome == OutcomeKind::Expanded) {
      b.theta_plus = c;
    } else if (pc.decisive()) {
      b.theta_minus = c;
      zone.reset();
      continue;
    } else {
      zone->second = c;
      inconclusive_hi = true;
    }
    if (inconclusive_lo && inconclusive_hi) cfg.t_max *= 1.5;
  }
  b.converged = b.width() <= tol;
  b.sweep_log = log.str();
  return b;
}

}  // namespace logflow
