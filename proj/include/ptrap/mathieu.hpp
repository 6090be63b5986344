#pragma once

#include <Eigen/Dense>

namespace ptrap::mathieu {

// Mathieu equation in the form  y'' + (a - 2 q cos 2t) y = 0.

/// Characteristic values of the even (a_n) and odd (b_n) periodic solutions,
/// from truncated Hill matrices. n >= 0 for a, n >= 1 for b.
double char_a(int n, double q);
double char_b(int n, double q);

/// True when (a, q) lies in a stability band a_n(|q|) < a < b_{n+1}(|q|).
bool stable(double a, double q);

/// Trace of the monodromy matrix over one period (pi), by classical RK4 with
/// `steps` steps. |trace| < 2 means bounded motion.
double monodromy_trace(double a, double q, int steps = 4000);

/// Stability from the monodromy trace.
bool floquet_stable(double a, double q, int steps = 4000);

}  // namespace ptrap::mathieu
