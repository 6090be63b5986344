#include "ptrap/mathieu.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace ptrap::mathieu {
namespace {

constexpr int kTerms = 48;

// Tridiagonal Hill matrix with diagonal (2r + offset)^2, off-diagonals q, and
// a modified leading block. Returns eigenvalues ascending.
Eigen::VectorXd hill(int offset, double first_diag_shift, bool sqrt2_first, double q) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kTerms, kTerms);
  for (int r = 0; r < kTerms; ++r) {
    const double k = 2.0 * r + offset;
    m(r, r) = k * k;
    if (r + 1 < kTerms) {
      const double off = (r == 0 && sqrt2_first) ? std::sqrt(2.0) * q : q;
      m(r, r + 1) = off;
      m(r + 1, r) = off;
    }
  }
  m(0, 0) += first_diag_shift;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

double char_a(int n, double q) {
  if (n % 2 == 0) return hill(0, 0.0, true, q)[n / 2];
  return hill(1, q, false, q)[n / 2];
}

double char_b(int n, double q) {
  if (n % 2 == 1) return hill(1, -q, false, q)[n / 2];
  return hill(2, 0.0, false, q)[n / 2 - 1];
}

bool stable(double a, double q) {
  q = std::abs(q);
  if (q == 0.0) return a > 0.0;
  for (int n = 0; n < 2 * kTerms - 4; ++n) {
    const double lo = char_a(n, q);
    if (a <= lo) return false;
    if (a < char_b(n + 1, q)) return true;
  }
  return false;
}

double monodromy_trace(double a, double q, int steps) {
  const double period = 3.14159265358979323846;
  const double h = period / steps;
  auto accel = [&](double t, double y) { return -(a - 2.0 * q * std::cos(2.0 * t)) * y; };
  double tr = 0.0;
  for (int col = 0; col < 2; ++col) {
    double y = col == 0 ? 1.0 : 0.0;
    double v = col == 0 ? 0.0 : 1.0;
    double t = 0.0;
    for (int s = 0; s < steps; ++s) {
      const double k1y = v, k1v = accel(t, y);
      const double k2y = v + 0.5 * h * k1v, k2v = accel(t + 0.5 * h, y + 0.5 * h * k1y);
      const double k3y = v + 0.5 * h * k2v, k3v = accel(t + 0.5 * h, y + 0.5 * h * k2y);
      const double k4y = v + h * k3v, k4v = accel(t + h, y + h * k3y);
      y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      t = (s + 1) * h;
    }
    tr += col == 0 ? y : v;
  }
  return tr;
}

bool floquet_stable(double a, double q, int steps) { return std::abs(monodromy_trace(a, q, steps)) < 2.0; }

}  // namespace ptrap::mathieu
