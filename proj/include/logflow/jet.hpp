#pragma once

#include <array>
#include <cmath>

namespace logflow {

/// Second-order forward-mode derivative of a scalar function of three
/// variables: value, gradient and (symmetric) Hessian.
///
/// Hessian entries are stored packed as (00, 01, 02, 11, 12, 22).
struct Jet {
  double v = 0.0;
  std::array<double, 3> g{};
  std::array<double, 6> h{};

  static constexpr int pack(int a, int b) {
    if (a > b) {
      const int t = a;
      a = b;
      b = t;
    }
    return a == 0 ? b : (a == 1 ? 2 + b : 5);
  }

  static Jet constant(double c) {
    Jet j;
    j.v = c;
    return j;
  }

  static Jet variable(double value, int axis) {
    Jet j;
    j.v = value;
    j.g[axis] = 1.0;
    return j;
  }

  double hess(int a, int b) const { return h[pack(a, b)]; }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < 3; ++i) g[i] += o.g[i];
    for (int i = 0; i < 6; ++i) h[i] += o.h[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < 3; ++i) g[i] -= o.g[i];
    for (int i = 0; i < 6; ++i) h[i] -= o.h[i];
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    for (auto& e : g) e *= s;
    for (auto& e : h) e *= s;
    return *this;
  }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  int k = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j, ++k) {
      r.h[k] = a.h[k] * b.v + a.v * b.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    }
  }
  return r;
}

// Composition phi(a) given phi, phi', phi'' evaluated at a.v.
inline Jet chain(const Jet& a, double f0, double f1, double f2) {
  Jet r;
  r.v = f0;
  for (int i = 0; i < 3; ++i) r.g[i] = f1 * a.g[i];
  int k = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j, ++k) r.h[k] = f1 * a.h[k] + f2 * a.g[i] * a.g[j];
  }
  return r;
}

inline Jet pow(const Jet& a, double p) {
  const double f0 = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return chain(a, f0, f1, f2);
}

}  // namespace logflow
