#include "ptrap/rect_kernel.hpp"

#include <cmath>

namespace ptrap {

void PotentialJet::add_scaled(const PotentialJet& o, double w, int order) {
  value += w * o.value;
  if (order >= 1) grad += w * o.grad;
  if (order >= 2) hess += w * o.hess;
  if (order >= 3) {
    for (int k = 0; k < 3; ++k) third[k] += w * o.third[k];
  }
}

double Rect::diameter() const { return std::hypot(width(), height()); }

namespace kernel {
namespace {

// a + sqrt(a^2 + rest2) without cancellation for a < 0; rest2 = r^2 - a^2.
inline double plus_r(double a, double r, double rest2) {
  return a >= 0.0 ? a + r : rest2 / (r - a);
}

// Derivatives of the corner antiderivative F(u, v, z) with
// d^2 F / du dv = 1 / r. Terms that cancel in the alternating corner sum are
// dropped, so only the signed sum over four corners is meaningful.
struct CornerTerms {
  double f = 0.0;
  double fx = 0.0, fy = 0.0, fz = 0.0;
  double xx = 0.0, xy = 0.0, xz = 0.0, yy = 0.0, yz = 0.0, zz = 0.0;
  double xxx = 0.0, xxy = 0.0, xxz = 0.0, xyy = 0.0, xyz = 0.0, yyy = 0.0, yyz = 0.0;
};

inline void corner(double u, double v, double z, int order, CornerTerms& t) {
  const double u2 = u * u;
  const double v2 = v * v;
  const double z2 = z * z;
  const double r = std::sqrt(u2 + v2 + z2);
  const double wv = plus_r(v, r, u2 + z2);
  const double wu = plus_r(u, r, v2 + z2);
  if (order == 0) {
    double f = 0.0;
    if (u != 0.0) f += u * std::log(wv);
    if (v != 0.0) f += v * std::log(wu);
    if (z != 0.0) f -= z * std::atan2(u * v, z * r);
    t.f = f;
    return;
  }
  t.fx = std::log(wv);
  t.fy = std::log(wu);
  t.fz = -std::atan2(u * v, z * r);
  // F is homogeneous of degree one up to terms that cancel in the corner sum.
  t.f = u * t.fx + v * t.fy + z * t.fz;
  if (order >= 2) {
    const double inv_r = 1.0 / r;
    t.xx = u * inv_r / wv;
    t.xy = inv_r;
    t.xz = z * inv_r / wv;
    t.yy = v * inv_r / wu;
    t.yz = z * inv_r / wu;
    t.zz = u * v * (u2 + v2 + 2.0 * z2) / ((u2 * v2 + z2 * r * r) * r);
  }
  if (order >= 3) {
    const double r2 = r * r;
    const double r3 = r2 * r;
    t.xxx = (wv * (v2 + z2) - u2 * r) / (r3 * wv * wv);
    t.xxy = -u / r3;
    t.xxz = -u * z * (wv + r) / (r3 * wv * wv);
    t.xyy = -v / r3;
    t.xyz = -z / r3;
    t.yyy = (wu * (u2 + z2) - v2 * r) / (r3 * wu * wu);
    t.yyz = -v * z * (wu + r) / (r3 * wu * wu);
  }
}

// Signed sum over the four rectangle corners: + at (x - x0, y - y0) and
// (x - x1, y - y1), - at the mixed corners.
inline CornerTerms corner_sum(const Rect& rc, const Vec3& p, int order) {
  const double us[2] = {p.x() - rc.x0, p.x() - rc.x1};
  const double vs[2] = {p.y() - rc.y0, p.y() - rc.y1};
  const double z = std::abs(p.z());
  CornerTerms sum;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double s = (i == j) ? 1.0 : -1.0;
      CornerTerms t;
      corner(us[i], vs[j], z, order, t);
      sum.f += s * t.f;
      sum.fx += s * t.fx;
      sum.fy += s * t.fy;
      sum.fz += s * t.fz;
      sum.xx += s * t.xx;
      sum.xy += s * t.xy;
      sum.xz += s * t.xz;
      sum.yy += s * t.yy;
      sum.yz += s * t.yz;
      sum.zz += s * t.zz;
      sum.xxx += s * t.xxx;
      sum.xxy += s * t.xxy;
      sum.xxz += s * t.xxz;
      sum.xyy += s * t.xyy;
      sum.xyz += s * t.xyz;
      sum.yyy += s * t.yyy;
      sum.yyz += s * t.yyz;
    }
  }
  return sum;
}

}  // namespace

double single_layer_value(const Rect& r, const Vec3& p) { return corner_sum(r, p, 0).f; }

void single_layer(const Rect& rc, const Vec3& p, int order, double w, PotentialJet& out) {
  if (order == 0 || p.z() == 0.0) {
    out.value += w * corner_sum(rc, p, 0).f;
    if (order == 0) return;
  }
  const CornerTerms s = corner_sum(rc, p, order);
  if (p.z() != 0.0) out.value += w * s.f;
  out.grad += w * Vec3(s.fx, s.fy, s.fz);
  if (order >= 2) {
    Mat3 h;
    h << s.xx, s.xy, s.xz, s.xy, s.yy, s.yz, s.xz, s.yz, s.zz;
    out.hess += w * h;
  }
  if (order >= 3) {
    const double xzz = -(s.xxx + s.xyy);
    const double yzz = -(s.xxy + s.yyy);
    const double zzz = -(s.xxz + s.yyz);
    Mat3 tx, ty, tz;
    tx << s.xxx, s.xxy, s.xxz, s.xxy, s.xyy, s.xyz, s.xxz, s.xyz, xzz;
    ty << s.xxy, s.xyy, s.xyz, s.xyy, s.yyy, s.yyz, s.xyz, s.yyz, yzz;
    tz << s.xxz, s.xyz, xzz, s.xyz, s.yyz, yzz, xzz, yzz, zzz;
    out.third[0] += w * tx;
    out.third[1] += w * ty;
    out.third[2] += w * tz;
  }
}

PotentialJet solid_angle_potential(const Rect& rc, const Vec3& p, int order) {
  const CornerTerms s = corner_sum(rc, p, order >= 1 ? order + 1 : 1);
  constexpr double inv_2pi = 0.5 / 3.14159265358979323846;
  PotentialJet jet;
  // Omega = -dI/dz, so every derivative of the potential is one z-derivative
  // of the single-layer integral higher.
  jet.value = -s.fz * inv_2pi;
  if (order >= 1) jet.grad = -inv_2pi * Vec3(s.xz, s.yz, s.zz);
  if (order >= 2) {
    const double xzz = -(s.xxx + s.xyy);
    const double yzz = -(s.xxy + s.yyy);
    const double zzz = -(s.xxz + s.yyz);
    jet.hess << s.xxz, s.xyz, xzz, s.xyz, s.yyz, yzz, xzz, yzz, zzz;
    jet.hess *= -inv_2pi;
  }
  return jet;
}

void point_source(double cx, double cy, const Vec3& p, int order, double w, PotentialJet& out) {
  const double dx = p.x() - cx;
  const double dy = p.y() - cy;
  const double dz = p.z();
  const double r2 = dx * dx + dy * dy + dz * dz;
  const double inv_r = 1.0 / std::sqrt(r2);
  out.value += w * inv_r;
  if (order >= 1) {
    const double inv_r3 = inv_r * inv_r * inv_r;
    out.grad += -w * inv_r3 * Vec3(dx, dy, dz);
    if (order >= 2) {
      const double inv_r5 = inv_r3 * inv_r * inv_r;
      const Vec3 d(dx, dy, dz);
      out.hess += w * (3.0 * inv_r5 * d * d.transpose() - inv_r3 * Mat3::Identity());
    }
  }
}

}  // namespace kernel
}  // namespace ptrap
