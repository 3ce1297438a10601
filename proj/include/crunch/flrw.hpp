#pragma once

#include <vector>

// Background scale factor for the collapsing homogeneous isotropic solution:
// a'' = -(2/3) a^{1/3}, a(0) = 1, a'(0) = 0, integrated forward until a
// reaches a configurable floor.  The collapse ends at the extrapolated zero
// t_crunch where a vanishes linearly.  All downstream modules query a(t),
// a'(t) and H(t) = a'/a through cubic Hermite interpolation on the stored
// (t, a, a') nodes.

namespace crunch {

struct FlrwBackground {
  std::vector<double> t_grid;  // strictly increasing, t_grid[0] = 0
  std::vector<double> a;       // scale factor at nodes, strictly decreasing
  std::vector<double> a_prime; // da/dt at nodes, in [-1, 0]
  double t_crunch = 0.0;       // zero crossing of the Hermite extension of a
  int interpolation_order = 3; // cubic Hermite in between nodes

  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double a_min = 0.0;
  double max_first_integral_drift = 0.0;  // max |a'^2 + a^{4/3} - 1| at nodes
  // tau such that -a' >= (6/7)^{1/3} for all t in [t_crunch - tau, t_crunch)
  double monotonicity_window = 0.0;

  double t_end() const { return t_grid.back(); }
};

struct FlrwSample {
  double a;
  double a_prime;
  double hubble;  // a'/a
};

// Adaptive embedded Runge-Kutta 5(4) solve of the collapse ODE.  Throws
// ConfigError on non-positive tolerances or floor outside (0,1),
// NonConvergence if the step size underflows or the step budget is
// exhausted, InvariantViolation if the first-integral drift exceeds
// 100 * rel_tol.
FlrwBackground solve_scale_factor(double rel_tol = 1e-12,
                                  double abs_tol = 1e-14,
                                  double a_min = 1e-6);

// Collapse time as the quadrature of da/sqrt(1 - a^{4/3}) over (0,1); the
// endpoint singularity at a = 1 is removed by substitution before the
// adaptive rule sees the integrand.
double crunch_time_quadrature(double rel_tol = 1e-12);

// Interpolated background sample.  Domain: 0 <= t <= t_end(); throws
// OutOfDomain otherwise.
FlrwSample flrw_eval(const FlrwBackground& bg, double t);

struct PowerIntegral {
  double value = 0.0;
  // value checked against the collapse-regime bound for the exponent:
  //   p > -1 : bounded by the full-range closed form,
  //   p = -1 : bounded by C (1 + |ln a(t2)|),
  //   p < -1 : bounded by C a(t2)^{p+1} / |p+1|.
  bool bound_ok = false;
  double bound_value = 0.0;
};

// Quadrature of a(t)^p over [t1, t2] within the tabulated range, with the
// regime bound evaluated as a companion check.  Throws OutOfDomain if the
// interval leaves the table or t1 > t2.
PowerIntegral time_integral_power(const FlrwBackground& bg, double p,
                                  double t1, double t2);

}  // namespace crunch
