#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "logflow/support_field.hpp"

namespace logflow {

// Grids are immutable and reused across fields of the same resolution.
inline std::shared_ptr<const CircleGrid> circle_grid(int nodes) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const CircleGrid>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[nodes];
  if (!slot) slot = std::make_shared<const CircleGrid>(nodes);
  return slot;
}

inline std::shared_ptr<const SphereGrid> sphere_grid(int degree) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const SphereGrid>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[degree];
  if (!slot) slot = std::make_shared<const SphereGrid>(degree);
  return slot;
}

/// Resolution of a discretization: node count N for n = 1, harmonic degree
/// L for n = 2.
struct Discretization {
  int dim = 1;
  int resolution = 256;
};

template <class Fn>
SupportField sample_field(const Discretization& disc, Fn&& h, double t = 0.0) {
  if (disc.dim == 1) return SupportField::sample_circle(circle_grid(disc.resolution), std::forward<Fn>(h), t);
  return SupportField::sample_sphere(sphere_grid(disc.resolution), std::forward<Fn>(h), t);
}

inline SupportField sphere_field(const Discretization& disc, double radius) {
  return sample_field(disc, [radius](const Eigen::VectorXd&) { return radius; });
}

/// Support function of the ellipsoid with the given semi-axes and center:
/// H(x) = sqrt(sum a_i^2 x_i^2) + c.x
inline auto ellipsoid_support(Eigen::VectorXd semi_axes, Eigen::VectorXd center) {
  return [a = std::move(semi_axes), c = std::move(center)](const Eigen::VectorXd& x) {
    return std::sqrt(a.cwiseProduct(x).squaredNorm()) + c.dot(x);
  };
}

inline SupportField ellipsoid_field(const Discretization& disc, const Eigen::VectorXd& semi_axes,
                                    const Eigen::VectorXd& center) {
  return sample_field(disc, ellipsoid_support(semi_axes, center));
}

inline SupportField ellipsoid_field(const Discretization& disc, const Eigen::VectorXd& semi_axes) {
  return ellipsoid_field(disc, semi_axes, Eigen::VectorXd::Zero(semi_axes.size()));
}

}  // namespace logflow
