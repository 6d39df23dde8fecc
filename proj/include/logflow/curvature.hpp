#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "logflow/errors.hpp"
#include "logflow/support_field.hpp"

namespace logflow {

enum class CurvatureClass { concave, inequality };

inline const char* to_string(CurvatureClass c) {
  return c == CurvatureClass::concave ? "case-i-concave" : "case-ii-inequality";
}

/// Inverse curvature function F~(r_1..r_n), symmetric and homogeneous of
/// degree d0 in the principal radii. F = 1/F~(1/kappa).
///
/// `gradient` and `hessian` are optional; missing ones fall back to
/// fourth-order central differences.
struct CurvatureSpec {
  using Radii = Eigen::VectorXd;

  std::string name;
  int n = 1;
  double degree = 1.0;
  CurvatureClass declared = CurvatureClass::concave;
  std::function<double(const Radii&)> value;
  std::function<Radii(const Radii&)> gradient;
  std::function<Eigen::MatrixXd(const Radii&)> hessian;

  double operator()(const Radii& r) const { return value(r); }

  Radii grad(const Radii& r) const {
    if (gradient) return gradient(r);
    Radii g(r.size());
    for (int i = 0; i < r.size(); ++i) {
      const double h = 1e-3 * r[i];
      auto at = [&](double step) {
        Radii a = r;
        a[i] += step;
        return value(a);
      };
      g[i] = (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
    }
    return g;
  }

  Eigen::MatrixXd hess(const Radii& r) const {
    if (hessian) return hessian(r);
    Eigen::MatrixXd m(r.size(), r.size());
    for (int j = 0; j < r.size(); ++j) {
      const double h = 1e-4 * r[j];
      Radii a = r, b = r;
      a[j] += h;
      b[j] -= h;
      m.col(j) = (grad(a) - grad(b)) / (2.0 * h);
    }
    return 0.5 * (m + m.transpose());
  }

  /// F(1,...,1) = 1 / F~(1,...,1).
  double f_at_ones() const { return 1.0 / value(Radii::Ones(n)); }
};

inline CurvatureSpec gauss_inverse(int n) {
  CurvatureSpec s{"GaussInverse", n, double(n), CurvatureClass::inequality};
  s.value = [](const Eigen::VectorXd& r) { return r.prod(); };
  s.gradient = [](const Eigen::VectorXd& r) {
    Eigen::VectorXd g(r.size());
    for (int i = 0; i < r.size(); ++i) g[i] = r.prod() / r[i];
    return g;
  };
  s.hessian = [](const Eigen::VectorXd& r) {
    const double p = r.prod();
    Eigen::MatrixXd m(r.size(), r.size());
    for (int i = 0; i < r.size(); ++i)
      for (int j = 0; j < r.size(); ++j) m(i, j) = i == j ? 0.0 : p / (r[i] * r[j]);
    return m;
  };
  return s;
}

inline CurvatureSpec root_gauss_inverse(int n) {
  CurvatureSpec s{"RootGaussInverse", n, 1.0, CurvatureClass::concave};
  s.value = [n](const Eigen::VectorXd& r) { return std::pow(r.prod(), 1.0 / n); };
  s.gradient = [n](const Eigen::VectorXd& r) {
    const double g = std::pow(r.prod(), 1.0 / n);
    return Eigen::VectorXd((g / n) * r.cwiseInverse());
  };
  s.hessian = [n](const Eigen::VectorXd& r) {
    const double g = std::pow(r.prod(), 1.0 / n);
    Eigen::MatrixXd m(r.size(), r.size());
    for (int i = 0; i < r.size(); ++i)
      for (int j = 0; j < r.size(); ++j)
        m(i, j) = g / (double(n) * n * r[i] * r[j]) - (i == j ? g / (n * r[i] * r[i]) : 0.0);
    return m;
  };
  return s;
}

inline CurvatureSpec harmonic_inverse(int n) {
  CurvatureSpec s{"HarmonicInverse", n, 1.0, CurvatureClass::concave};
  s.value = [](const Eigen::VectorXd& r) { return 1.0 / r.cwiseInverse().sum(); };
  s.gradient = [](const Eigen::VectorXd& r) {
    const double f = 1.0 / r.cwiseInverse().sum();
    return Eigen::VectorXd(f * f * r.cwiseInverse().cwiseAbs2());
  };
  s.hessian = [](const Eigen::VectorXd& r) {
    const double f = 1.0 / r.cwiseInverse().sum();
    Eigen::MatrixXd m(r.size(), r.size());
    for (int i = 0; i < r.size(); ++i)
      for (int j = 0; j < r.size(); ++j)
        m(i, j) = 2.0 * f * f * f / (r[i] * r[i] * r[j] * r[j]) -
                  (i == j ? 2.0 * f * f / (r[i] * r[i] * r[i]) : 0.0);
    return m;
  };
  return s;
}

inline CurvatureSpec trace_inverse(int n) {
  CurvatureSpec s{"TraceInverse", n, 1.0, CurvatureClass::concave};
  s.value = [](const Eigen::VectorXd& r) { return r.sum(); };
  s.gradient = [](const Eigen::VectorXd& r) { return Eigen::VectorXd(Eigen::VectorXd::Ones(r.size())); };
  s.hessian = [](const Eigen::VectorXd& r) { return Eigen::MatrixXd(Eigen::MatrixXd::Zero(r.size(), r.size())); };
  return s;
}

/// F~ = sum r_i^p, degree p. Not an admissible speed for p <= 0; useful to
/// exercise the checker on a failing input.
inline CurvatureSpec power_sum(int n, double p) {
  CurvatureSpec s{"power_sum", n, p, p <= 1.0 ? CurvatureClass::concave : CurvatureClass::inequality};
  s.value = [p](const Eigen::VectorXd& r) { return r.array().pow(p).sum(); };
  s.gradient = [p](const Eigen::VectorXd& r) { return Eigen::VectorXd(p * r.array().pow(p - 1.0)); };
  s.hessian = [p](const Eigen::VectorXd& r) {
    return Eigen::MatrixXd(Eigen::VectorXd(p * (p - 1.0) * r.array().pow(p - 2.0)).asDiagonal());
  };
  return s;
}

/// Wraps a user callable. Derivatives come from finite differences.
inline CurvatureSpec user_curvature(std::string name, int n, double degree, CurvatureClass declared,
                                    std::function<double(const Eigen::VectorXd&)> value) {
  CurvatureSpec s{std::move(name), n, degree, declared};
  s.value = std::move(value);
  return s;
}

inline CurvatureSpec builtin_curvature(const std::string& name, int n) {
  if (name == "GaussInverse") return gauss_inverse(n);
  if (name == "RootGaussInverse") return root_gauss_inverse(n);
  if (name == "HarmonicInverse") return harmonic_inverse(n);
  if (name == "TraceInverse") return trace_inverse(n);
  throw std::invalid_argument("unknown curvature function: " + name);
}

inline double eval_inverse_curvature(const CurvatureSpec& spec, const Eigen::VectorXd& radii) {
  if (radii.size() != spec.n) throw DomainError("expected " + std::to_string(spec.n) + " radii");
  if (!(radii.minCoeff() > 0.0)) throw DomainError("principal radii must be positive");
  return spec.value(radii);
}

/// F(kappa) = 1 / F~(principal radii) at normal x.
inline double curvature_of_normal(const SupportField& field, const CurvatureSpec& spec, const Eigen::VectorXd& x) {
  return 1.0 / eval_inverse_curvature(spec, principal_radii(field, x));
}

struct AssumptionTest {
  std::string test;
  bool pass = false;
  double worst_violation = 0.0;
};

struct AssumptionReport {
  std::string name;
  int n = 1;
  CurvatureClass declared = CurvatureClass::concave;
  std::vector<AssumptionTest> tests;
  double epsilon0_estimate = 0.0;
  double max_euler_error = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;

  const AssumptionTest* find(const std::string& test) const {
    for (const auto& t : tests)
      if (t.test == test) return &t;
    return nullptr;
  }
  bool passed(const std::string& test) const {
    const auto* t = find(test);
    return t && t->pass;
  }
  /// Every structural test plus the declared class condition.
  bool pass() const {
    const char* cls = declared == CurvatureClass::concave ? "concavity" : "log_concave";
    return passed("euler") && passed("monotonicity") && passed("boundary_decay") && passed("epsilon") &&
           passed(cls);
  }
};

namespace detail {

// F~^{ij,kl} eta_ij eta_kl at a diagonal argument diag(r).
inline double second_variation(const Eigen::VectorXd& r, const Eigen::VectorXd& g,
                               const Eigen::MatrixXd& hs, const Eigen::MatrixXd& eta) {
  const int n = int(r.size());
  double q = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q += hs(i, j) * eta(i, i) * eta(j, j);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dr = r[i] - r[j];
      const double quotient =
          std::abs(dr) > 1e-6 * std::max(r[i], r[j]) ? (g[i] - g[j]) / dr : hs(i, i) - hs(i, j);
      q += quotient * eta(i, j) * eta(i, j);
    }
  }
  return q;
}

}  // namespace detail

/// Seeded sampled check of the structural assumptions on F~ over diagonal
/// arguments with entries log-uniform in [1e-2, 1e2].
inline AssumptionReport verify_assumptions(const CurvatureSpec& spec, int samples, std::uint64_t seed) {
  AssumptionReport rep;
  rep.name = spec.name;
  rep.n = spec.n;
  rep.declared = spec.declared;
  rep.samples = samples;
  rep.seed = seed;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logr(std::log(1e-2), std::log(1e2));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = spec.n;
  AssumptionTest euler{"euler", true, 0.0}, mono{"monotonicity", true, 0.0}, decay{"boundary_decay", true, 0.0};
  AssumptionTest eps{"epsilon", true, 0.0}, concave{"concavity", true, 0.0}, ineq{"log_concave", true, 0.0};
  double eps_inf = std::numeric_limits<double>::infinity();

  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = std::exp(logr(rng));
    const double f = spec.value(r);
    const Eigen::VectorXd g = spec.grad(r);
    const Eigen::MatrixXd hs = spec.hess(r);

    const double euler_err = std::abs(g.dot(r) - spec.degree * f) / std::abs(spec.degree * f);
    rep.max_euler_error = std::max(rep.max_euler_error, euler_err);
    euler.worst_violation = std::max(euler.worst_violation, euler_err);

    const double mono_viol = std::max(0.0, -(g.minCoeff()) / (std::abs(f) / r.maxCoeff()));
    mono.worst_violation = std::max(mono.worst_violation, mono_viol);

    // Boundary decay along the ray that shrinks one radius towards 0.
    const int k = int(unit(rng) * n) % n;
    Eigen::VectorXd edge = r;
    edge[k] *= 1e-10;
    const double ratio = spec.value(edge) / f;
    decay.worst_violation = std::max(decay.worst_violation, std::isfinite(ratio) ? ratio : 1e300);

    // For diagonal h: F~^{ij} h_ik h^k_j = sum F~_i r_i^2.
    eps_inf = std::min(eps_inf, g.dot(r.cwiseAbs2()) / (f * r.sum()));

    Eigen::MatrixXd eta(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) eta(i, j) = eta(j, i) = normal(rng);

    const double q = detail::second_variation(r, g, hs, eta);
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) scale += std::abs(g[i]) * eta(i, j) * eta(i, j) / r[j];
    scale = std::max(scale, 1e-300);
    concave.worst_violation = std::max(concave.worst_violation, q / scale);

    // (F~^{ij} eta_ij)^2 / F~ - F~^{ik} h~^{jl} eta_ij eta_kl, with h~ = diag(1/r).
    double tr = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) tr += g[i] * eta(i, i);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cross += g[i] / r[j] * eta(i, j) * eta(i, j);
    const double rhs = tr * tr / f - cross;
    ineq.worst_violation = std::max(ineq.worst_violation, (q - rhs) / (scale + tr * tr / std::abs(f)));

    // Midpoint concavity along a random segment.
    Eigen::VectorXd r2(n);
    for (int i = 0; i < n; ++i) r2[i] = std::exp(logr(rng));
    const double mid = spec.value(0.5 * (r + r2)) - 0.5 * (f + spec.value(r2));
    const double mid_scale = std::abs(f) + std::abs(spec.value(r2));
    concave.worst_violation = std::max(concave.worst_violation, -mid / mid_scale);
  }

  euler.pass = euler.worst_violation <= 1e-10;
  mono.pass = mono.worst_violation == 0.0;
  decay.pass = decay.worst_violation <= 1e-4;
  rep.epsilon0_estimate = eps_inf;
  eps.pass = eps_inf > 0.0;
  eps.worst_violation = std::max(0.0, -eps_inf);
  concave.pass = spec.degree == 1.0 && concave.worst_violation <= 1e-8;
  ineq.pass = ineq.worst_violation <= 1e-8;
  concave.worst_violation = std::max(0.0, concave.worst_violation);
  ineq.worst_violation = std::max(0.0, ineq.worst_violation);
  rep.tests = {euler, mono, decay, eps, concave, ineq};
  return rep;
}

}  // namespace logflow
