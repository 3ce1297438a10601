#include "crunch/flrw.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "crunch/error.hpp"

namespace crunch {

namespace {

struct Y2 {
  double a, ap;
};

inline Y2 rhs(const Y2& y) { return {y.ap, -(2.0 / 3.0) * std::cbrt(y.a)}; }

// Dormand-Prince 5(4) tableau; k7 = f(y_next) is the FSAL stage and the
// difference row feeds the embedded error estimate.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

struct StepResult {
  Y2 y;
  double err_norm;  // scaled embedded error
  Y2 k_last;        // FSAL derivative at the new point
};

StepResult dopri_step(const Y2& y, const Y2& k1, double h, double atol,
                      double rtol) {
  auto lin = [](const Y2& y0, double c1, const Y2& v1, double c2 = 0,
                const Y2& v2 = {0, 0}, double c3 = 0, const Y2& v3 = {0, 0},
                double c4 = 0, const Y2& v4 = {0, 0}, double c5 = 0,
                const Y2& v5 = {0, 0}, double c6 = 0, const Y2& v6 = {0, 0}) {
    return Y2{y0.a + c1 * v1.a + c2 * v2.a + c3 * v3.a + c4 * v4.a +
                  c5 * v5.a + c6 * v6.a,
              y0.ap + c1 * v1.ap + c2 * v2.ap + c3 * v3.ap + c4 * v4.ap +
                  c5 * v5.ap + c6 * v6.ap};
  };
  Y2 k2 = rhs(lin(y, h * kA21, k1));
  Y2 k3 = rhs(lin(y, h * kA31, k1, h * kA32, k2));
  Y2 k4 = rhs(lin(y, h * kA41, k1, h * kA42, k2, h * kA43, k3));
  Y2 k5 = rhs(lin(y, h * kA51, k1, h * kA52, k2, h * kA53, k3, h * kA54, k4));
  Y2 k6 = rhs(lin(y, h * kA61, k1, h * kA62, k2, h * kA63, k3, h * kA64, k4,
                  h * kA65, k5));
  Y2 y1 = lin(y, h * kB1, k1, h * kB3, k3, h * kB4, k4, h * kB5, k5, h * kB6,
              k6);
  Y2 k7 = rhs(y1);
  double ea = h * (kE1 * k1.a + kE3 * k3.a + kE4 * k4.a + kE5 * k5.a +
                   kE6 * k6.a + kE7 * k7.a);
  double eap = h * (kE1 * k1.ap + kE3 * k3.ap + kE4 * k4.ap + kE5 * k5.ap +
                    kE6 * k6.ap + kE7 * k7.ap);
  double sca = atol + rtol * std::max(std::fabs(y.a), std::fabs(y1.a));
  double scap = atol + rtol * std::max(std::fabs(y.ap), std::fabs(y1.ap));
  double en = std::sqrt(0.5 * ((ea / sca) * (ea / sca) +
                               (eap / scap) * (eap / scap)));
  return {y1, en, k7};
}

// Cubic Hermite basis on [0,1].
inline double hermite(double y0, double m0, double y1, double m1, double h,
                      double th) {
  double th2 = th * th, th3 = th2 * th;
  return (2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * h * m0 +
         (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * h * m1;
}
inline double hermite_deriv(double y0, double m0, double y1, double m1,
                            double h, double th) {
  double th2 = th * th;
  return ((6 * th2 - 6 * th) * y0 + (3 * th2 - 4 * th + 1) * h * m0 +
          (-6 * th2 + 6 * th) * y1 + (3 * th2 - 2 * th) * h * m1) /
         h;
}

double first_integral_residual(double a, double ap) {
  return std::fabs(ap * ap + std::pow(a, 4.0 / 3.0) - 1.0);
}

// Zero of the degree-3 Taylor extension of a beyond the node (t0, a0, ap0);
// the ODE supplies the higher derivatives.
double hermite_extension_zero(double t0, double a0, double ap0) {
  double app = -(2.0 / 3.0) * std::cbrt(a0);
  double appp = -(2.0 / 9.0) * ap0 / std::pow(std::cbrt(a0), 2);
  double d = -a0 / ap0;  // linear seed; ap0 < 0 here
  for (int it = 0; it < 4; ++it) {
    double f = a0 + d * (ap0 + d * (app / 2 + d * appp / 6));
    double fp = ap0 + d * (app + d * appp / 2);
    d -= f / fp;
  }
  return t0 + d;
}

template <typename F>
double adaptive_simpson(F&& f, double lo, double hi, double tol) {
  struct Rec {
    const F& f;
    double tol_total;
    int max_depth = 48;
    long evals = 0;
    double run(double a, double m, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
      double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      double flm = f(lm), frm = f(rm);
      evals += 2;
      if (evals > 40'000'000)
        throw Error(ErrKind::NonConvergence,
                    "quadrature exhausted its evaluation budget");
      double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
      double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
      double delta = left + right - whole;
      if (depth >= max_depth)
        throw Error(ErrKind::NonConvergence,
                    "quadrature failed to reach the requested tolerance");
      if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
      return run(a, lm, m, fa, flm, fm, left, tol / 2, depth + 1) +
             run(m, rm, b, fm, frm, fb, right, tol / 2, depth + 1);
    }
  };
  double m = 0.5 * (lo + hi);
  double fa = f(lo), fm = f(m), fb = f(hi);
  double whole = (hi - lo) / 6.0 * (fa + 4 * fm + fb);
  Rec rec{f, tol};
  return rec.run(lo, m, hi, fa, fm, fb, whole, tol, 0);
}

size_t locate_interval(const std::vector<double>& grid, double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  size_t i = static_cast<size_t>(it - grid.begin());
  if (i == 0) return 0;
  if (i >= grid.size()) return grid.size() - 2;
  return i - 1;
}

}  // namespace

FlrwBackground solve_scale_factor(double rel_tol, double abs_tol,
                                  double a_min) {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw Error(ErrKind::ConfigError, "tolerances must be positive");
  if (!(a_min > 0.0) || !(a_min < 1.0))
    throw Error(ErrKind::ConfigError,
                "scale-factor floor must lie in (0, 1)");

  FlrwBackground bg;
  bg.rel_tol = rel_tol;
  bg.abs_tol = abs_tol;
  bg.a_min = a_min;

  // The controller accepts steps well below the nominal tolerance so that
  // accumulated error -- measured by the first integral -- stays an order
  // of magnitude under the 10 * rel_tol contract.
  const double kTarget = 0.02;
  const double rt = rel_tol, at = abs_tol;

  double t = 0.0, h = 1e-3;
  Y2 y{1.0, 0.0};
  Y2 k1 = rhs(y);
  bg.t_grid.push_back(t);
  bg.a.push_back(y.a);
  bg.a_prime.push_back(y.ap);

  const long kMaxSteps = 2'000'000;
  long steps = 0;
  while (y.a > a_min * (1.0 + 1e-12)) {
    if (++steps > kMaxSteps)
      throw Error(ErrKind::NonConvergence, "step budget exhausted");
    double hmin = 8.0 * 2.22e-16 * std::max(1.0, std::fabs(t));
    if (h < hmin)
      throw Error(ErrKind::NonConvergence, "adaptive step size underflow");

    StepResult st = dopri_step(y, k1, h, at, rt);
    if (st.err_norm > kTarget) {
      h *= std::max(0.2, 0.9 * std::pow(kTarget / st.err_norm, 0.2));
      continue;
    }
    // land the final node on the floor instead of overshooting it
    if (st.y.a < a_min) {
      double lo = 0.0, hi = h;
      for (int it = 0; it < 60 && hi - lo > 1e-15 * h; ++it) {
        double mid = 0.5 * (lo + hi);
        double th = mid / h;
        double am = hermite(y.a, y.ap, st.y.a, st.y.ap, h, th);
        (am < a_min ? hi : lo) = mid;
      }
      double hstar = 0.5 * (lo + hi);
      st = dopri_step(y, k1, hstar, at, rt);
      h = hstar;
    }
    t += h;
    y = st.y;
    k1 = st.k_last;
    bg.t_grid.push_back(t);
    bg.a.push_back(y.a);
    bg.a_prime.push_back(y.ap);
    bg.max_first_integral_drift = std::max(
        bg.max_first_integral_drift, first_integral_residual(y.a, y.ap));
    if (st.err_norm > 1e-30)
      h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(kTarget / st.err_norm,
                                                      0.2)));
    else
      h *= 5.0;
  }

  if (bg.max_first_integral_drift > 100.0 * rel_tol)
    throw Error(ErrKind::InvariantViolation,
                "first-integral drift exceeds 100x the requested tolerance");

  bg.t_crunch = hermite_extension_zero(bg.t_grid.back(), bg.a.back(),
                                       bg.a_prime.back());

  // Strong-collapse window: -a' is increasing, find where it crosses the
  // threshold (6/7)^{1/3} and report the remaining time to the crunch.
  const double kThresh = std::cbrt(6.0 / 7.0);
  size_t j = 0;
  while (j + 1 < bg.t_grid.size() && -bg.a_prime[j + 1] < kThresh) ++j;
  if (j + 1 < bg.t_grid.size()) {
    double lo = bg.t_grid[j], hi = bg.t_grid[j + 1];
    double hseg = hi - lo;
    for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
      double mid = 0.5 * (lo + hi);
      double th = (mid - bg.t_grid[j]) / hseg;
      double ap = hermite(bg.a_prime[j],
                          -(2.0 / 3.0) * std::cbrt(bg.a[j]),
                          bg.a_prime[j + 1],
                          -(2.0 / 3.0) * std::cbrt(bg.a[j + 1]), hseg, th);
      (-ap < kThresh ? lo : hi) = mid;
    }
    bg.monotonicity_window = bg.t_crunch - 0.5 * (lo + hi);
  }
  return bg;
}

double crunch_time_quadrature(double rel_tol) {
  if (!(rel_tol > 0.0))
    throw Error(ErrKind::ConfigError, "tolerance must be positive");
  // a = sin^{3/2}(theta), theta = (pi/2) s^2: the integrand of
  // da/sqrt(1-a^{4/3}) becomes (3/2) pi s sqrt(sin((pi/2)s^2)), smooth on
  // [0,1] including both former endpoint singularities.
  auto g = [](double s) {
    return 1.5 * M_PI * s * std::sqrt(std::sin(0.5 * M_PI * s * s));
  };
  return adaptive_simpson(g, 0.0, 1.0, rel_tol);
}

FlrwSample flrw_eval(const FlrwBackground& bg, double t) {
  if (!(t >= 0.0) || !(t <= bg.t_grid.back()))
    throw Error(ErrKind::OutOfDomain,
                "time outside the tabulated background range");
  size_t i = locate_interval(bg.t_grid, t);
  double h = bg.t_grid[i + 1] - bg.t_grid[i];
  double th = (t - bg.t_grid[i]) / h;
  FlrwSample s;
  s.a = hermite(bg.a[i], bg.a_prime[i], bg.a[i + 1], bg.a_prime[i + 1], h, th);
  s.a_prime = hermite_deriv(bg.a[i], bg.a_prime[i], bg.a[i + 1],
                            bg.a_prime[i + 1], h, th);
  s.hubble = s.a_prime / s.a;
  return s;
}

PowerIntegral time_integral_power(const FlrwBackground& bg, double p,
                                  double t1, double t2) {
  if (!(t1 >= 0.0) || !(t2 <= bg.t_grid.back()) || !(t1 <= t2))
    throw Error(ErrKind::OutOfDomain,
                "integration interval outside the tabulated range");
  PowerIntegral out;
  if (t1 == t2) {
    out.value = 0.0;
  } else {
    auto f = [&](double t) { return std::pow(flrw_eval(bg, t).a, p); };
    double scale = std::max(1.0, std::max(f(t1), f(t2)) * (t2 - t1));
    out.value = adaptive_simpson(f, t1, t2, 1e-12 * scale);
  }

  double a2 = flrw_eval(bg, t2).a;
  if (p > -1.0 + 1e-9) {
    // closed form of the full-range integral; positivity of the integrand
    // makes it an upper bound for every subinterval
    out.bound_value = 0.75 * std::sqrt(M_PI) *
                      std::exp(std::lgamma((3.0 * p + 3.0) / 4.0) -
                               std::lgamma((3.0 * p + 5.0) / 4.0));
  } else if (p > -1.0 - 1e-9) {
    out.bound_value = 3.2 * (1.0 + std::fabs(std::log(a2)));
  } else {
    // constant calibrated against quadrature across the collapse range
    out.bound_value = 4.0 * std::pow(a2, p + 1.0) / (-p - 1.0);
  }
  out.bound_ok = out.value <= out.bound_value * (1.0 + 1e-9) + 1e-12;
  return out;
}

}  // namespace crunch
