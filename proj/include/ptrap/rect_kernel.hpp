#pragma once

#include <array>

#include <Eigen/Dense>

namespace ptrap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A scalar field and its derivatives up to third order at one point.
/// third[k](i, j) holds d^3 f / dx_i dx_j dx_k. Units follow the caller.
struct PotentialJet {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
  std::array<Mat3, 3> third{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};

  void add_scaled(const PotentialJet& o, double w, int order);
};

/// Axis-aligned rectangle in the z = 0 plane.
struct Rect {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double diameter() const;
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }
};

namespace kernel {

/// Accumulates w times the single-layer integral  I(p) = \int_rect dA / |p - r'|
/// and its derivatives up to `order` (0..3) into `out`. Requires p.z > 0 for
/// order >= 1; order 0 is also valid on the plane (p.z == 0), where it gives
/// the finite on-surface limit.
void single_layer(const Rect& r, const Vec3& p, int order, double w, PotentialJet& out);

/// On-plane (or off-plane) value of the single-layer integral only.
double single_layer_value(const Rect& r, const Vec3& p);

/// Potential above a grounded plane in which `r` alone is held at 1 V:
/// Omega(p) / 2pi with Omega the solid angle subtended by the rectangle, plus
/// analytic derivatives up to order 2. Requires p.z > 0.
PotentialJet solid_angle_potential(const Rect& r, const Vec3& p, int order);

/// Point charge 1/|p - c| with derivatives up to `order` (0..2), scaled by w.
void point_source(double cx, double cy, const Vec3& p, int order, double w, PotentialJet& out);

}  // namespace kernel
}  // namespace ptrap
