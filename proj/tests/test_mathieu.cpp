#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "ptrap/mathieu.hpp"

using namespace ptrap;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Monodromy trace of y'' + (a - 2q cos 2t) y = 0 over one period, by adaptive
// Dormand-Prince integration of both fundamental solutions.
double odeint_trace(double a, double q) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 4>;
  State s{1.0, 0.0, 0.0, 1.0};  // (y1, y1', y2, y2')
  auto rhs = [a, q](const State& x, State& dx, double t) {
    const double w = a - 2.0 * q * std::cos(2.0 * t);
    dx[0] = x[1];
    dx[1] = -w * x[0];
    dx[2] = x[3];
    dx[3] = -w * x[2];
  };
  ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, s, 0.0, kPi,
                          1e-3);
  return s[0] + s[3];
}

// First a = 0 stability edge by bisection on the odeint trace.
double odeint_edge() {
  double lo = 0.8, hi = 1.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(odeint_trace(0.0, mid)) < 2.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("characteristic values at q = 0 are squares") {
  for (int n = 0; n <= 4; ++n) CHECK(mathieu::char_a(n, 0.0) == doctest::Approx(n * n).epsilon(1e-12));
  for (int n = 1; n <= 4; ++n) CHECK(mathieu::char_b(n, 0.0) == doctest::Approx(n * n).epsilon(1e-12));
}

TEST_CASE("characteristic values follow the small-q series") {
  const double q = 0.05;
  const double q2 = q * q, q4 = q2 * q2;
  CHECK(mathieu::char_a(0, q) == doctest::Approx(-q2 / 2 + 7 * q4 / 128).epsilon(1e-8));
  CHECK(mathieu::char_a(1, q) == doctest::Approx(1 + q - q2 / 8 - q2 * q / 64).epsilon(1e-7));
  CHECK(mathieu::char_b(1, q) == doctest::Approx(1 - q - q2 / 8 + q2 * q / 64).epsilon(1e-7));
  CHECK(mathieu::char_b(2, q) == doctest::Approx(4 - q2 / 12).epsilon(1e-7));
  CHECK(mathieu::char_a(0, -q) == doctest::Approx(mathieu::char_a(0, q)).epsilon(1e-12));
}

TEST_CASE("the a = 0 edge of the first region sits at q = 0.908") {
  const double edge = odeint_edge();
  CHECK(edge == doctest::Approx(0.908046).epsilon(1e-5));
  CHECK(mathieu::char_b(1, edge) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(mathieu::stable(0.0, edge - 1e-4));
  CHECK_FALSE(mathieu::stable(0.0, edge + 1e-4));
}

TEST_CASE("5 x 5 grid across the q = 0.908 edge agrees with Floquet integration") {
  const std::array<double, 5> qs{0.80, 0.87, 0.90, 0.92, 0.99};
  const std::array<double, 5> as{-0.04, -0.02, 0.0, 0.015, 0.03};
  int stable_count = 0;
  for (double q : qs) {
    for (double a : as) {
      const double tr = odeint_trace(a, q);
      REQUIRE(std::abs(std::abs(tr) - 2.0) > 1e-6);
      const bool oracle = std::abs(tr) < 2.0;
      CAPTURE(q);
      CAPTURE(a);
      CHECK(mathieu::stable(a, q) == oracle);
      CHECK(mathieu::floquet_stable(a, q) == oracle);
      CHECK(mathieu::monodromy_trace(a, q) == doctest::Approx(tr).epsilon(1e-6));
      stable_count += oracle ? 1 : 0;
    }
  }
  CHECK(stable_count > 0);
  CHECK(stable_count < 25);
}

TEST_CASE("random operating points in higher bands agree with Floquet integration") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ua(-1.0, 6.0), uq(-3.0, 3.0);
  int checked = 0, stable_count = 0;
  for (int k = 0; k < 300; ++k) {
    const double a = ua(rng), q = uq(rng);
    const double tr = odeint_trace(a, q);
    // Points within roundoff of a band edge have no well-defined verdict.
    if (std::abs(std::abs(tr) - 2.0) < 1e-6) continue;
    CAPTURE(a);
    CAPTURE(q);
    CHECK(mathieu::stable(a, q) == (std::abs(tr) < 2.0));
    ++checked;
    stable_count += std::abs(tr) < 2.0 ? 1 : 0;
  }
  CHECK(checked > 290);
  CHECK(stable_count > 50);
  CHECK(stable_count < checked - 50);
}
