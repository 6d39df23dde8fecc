#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "logflow/errors.hpp"
#include "logflow/grids.hpp"
#include "logflow/spherical_harmonics.hpp"

namespace logflow {

/// One term a * Y_lm of a log-harmonic speed. For n = 1, Y_l,m>=0 is
/// cos(l theta) and Y_l,m<0 is sin(l theta).
struct HarmonicTerm {
  int l = 0;
  int m = 0;
  double a = 0.0;
};

/// Positive prescribed speed f on S^n, extended as f(x/|x|).
class PrescribedSpeed {
 public:
  enum class Kind { constant, exponential, affine, log_harmonic, custom };

  static PrescribedSpeed constant(int n, double c) {
    if (!(c > 0.0)) throw DomainError("constant speed must be positive");
    PrescribedSpeed s(Kind::constant, n);
    s.c_ = c;
    s.fn_ = [c](const Eigen::VectorXd&) { return c; };
    s.inf_ = s.sup_ = c;
    return s;
  }

  /// f = exp(v.x)
  static PrescribedSpeed exponential(const Eigen::VectorXd& v) {
    PrescribedSpeed s(Kind::exponential, int(v.size()) - 1);
    s.v_ = v;
    s.fn_ = [v](const Eigen::VectorXd& x) { return std::exp(v.dot(x)); };
    s.inf_ = std::exp(-v.norm());
    s.sup_ = std::exp(v.norm());
    return s;
  }

  /// f = c + w.x, positive when c > |w|
  static PrescribedSpeed affine(double c, const Eigen::VectorXd& w) {
    if (!(c > w.norm())) throw DomainError("affine speed needs c > |w| to stay positive");
    PrescribedSpeed s(Kind::affine, int(w.size()) - 1);
    s.c_ = c;
    s.v_ = w;
    s.fn_ = [c, w](const Eigen::VectorXd& x) { return c + w.dot(x); };
    s.inf_ = c - w.norm();
    s.sup_ = c + w.norm();
    return s;
  }

  /// f = exp(sum a_lm Y_lm)
  static PrescribedSpeed log_harmonic(int n, std::vector<HarmonicTerm> terms) {
    PrescribedSpeed s(Kind::log_harmonic, n);
    int degree = 0;
    for (const auto& t : terms) {
      if (t.l < 0 || (n == 2 && std::abs(t.m) > t.l)) throw DomainError("invalid harmonic index");
      degree = std::max(degree, t.l);
    }
    s.terms_ = terms;
    if (n == 1) {
      s.fn_ = [terms](const Eigen::VectorXd& x) {
        const double th = std::atan2(x[1], x[0]);
        double e = 0.0;
        for (const auto& t : terms) e += t.a * (t.m >= 0 ? std::cos(t.l * th) : std::sin(t.l * th));
        return std::exp(e);
      };
    } else {
      Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(sh_count(degree));
      for (const auto& t : terms) coeffs[sh_index(t.l, t.m)] += t.a;
      s.fn_ = [coeffs, degree](const Eigen::VectorXd& x) {
        const Eigen::VectorXd u = x.normalized();
        return std::exp(solid_harmonic_extension<double>(coeffs, degree, u[0], u[1], u[2]));
      };
    }
    s.sample_bounds();
    return s;
  }

  static PrescribedSpeed custom(int n, std::function<double(const Eigen::VectorXd&)> f, std::string label) {
    PrescribedSpeed s(Kind::custom, n);
    s.fn_ = std::move(f);
    s.label_ = std::move(label);
    s.sample_bounds();
    return s;
  }

  Kind kind() const { return kind_; }
  int dim() const { return n_; }
  double inf() const { return inf_; }
  double sup() const { return sup_; }
  double constant_value() const { return c_; }
  const Eigen::VectorXd& vector() const { return v_; }
  const std::vector<HarmonicTerm>& terms() const { return terms_; }
  const std::string& label() const { return label_; }

  double operator()(const Eigen::VectorXd& x) const { return fn_(x / x.norm()); }
  const std::function<double(const Eigen::VectorXd&)>& function() const { return fn_; }

  bool is_constant() const { return kind_ == Kind::constant; }

 private:
  PrescribedSpeed(Kind kind, int n) : kind_(kind), n_(n) {
    if (n != 1 && n != 2) throw DomainError("speed dimension must be 1 or 2");
  }

  // Dense sampling; exact bounds are known only for the closed-form kinds.
  void sample_bounds() {
    const auto circle = n_ == 1 ? circle_grid(4096) : nullptr;
    const auto sphere = n_ == 2 ? sphere_grid(64) : nullptr;
    const int count = n_ == 1 ? circle->size() : sphere->node_count();
    inf_ = std::numeric_limits<double>::infinity();
    sup_ = -inf_;
    for (int k = 0; k < count; ++k) {
      const double v = n_ == 1 ? fn_(Eigen::VectorXd(circle->node(k))) : fn_(Eigen::VectorXd(sphere->node(k)));
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("prescribed speed must be positive and finite");
      inf_ = std::min(inf_, v);
      sup_ = std::max(sup_, v);
    }
  }

  Kind kind_;
  int n_;
  double c_ = 0.0;
  Eigen::VectorXd v_;
  std::vector<HarmonicTerm> terms_;
  std::string label_;
  std::function<double(const Eigen::VectorXd&)> fn_;
  double inf_ = 0.0;
  double sup_ = 0.0;
};

inline const char* to_string(PrescribedSpeed::Kind k) {
  switch (k) {
    case PrescribedSpeed::Kind::constant: return "constant";
    case PrescribedSpeed::Kind::exponential: return "exponential";
    case PrescribedSpeed::Kind::affine: return "affine";
    case PrescribedSpeed::Kind::log_harmonic: return "log_harmonic";
    case PrescribedSpeed::Kind::custom: return "custom";
  }
  return "custom";
}

}  // namespace logflow
