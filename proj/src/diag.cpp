#include "crunch/diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crunch/error.hpp"
#include "crunch/frame.hpp"
#include "crunch/hopf.hpp"

namespace crunch {

namespace {

constexpr double kDenFloor = 1e-14;

struct BgAt {
  double a, ap, a13, a43, a53;
};

BgAt bg_at(const FlrwBackground& bg, double t) {
  const FlrwSample s = flrw_eval(bg, t);
  BgAt f;
  f.a = s.a;
  f.ap = s.a_prime;
  f.a13 = std::cbrt(s.a);
  f.a43 = f.a13 * s.a;
  f.a53 = f.a43 * f.a13;
  return f;
}

// Integral over the slice against the evolving volume form
// sqrt(det G) d(round).
double slice_integral(const RescaledState& s, const ScalarField& density) {
  if (s.homogeneous) return density[0] * std::sqrt(det3(s.G[0])) * kVolRound3;
  ScalarField weighted(density.size());
  for (std::size_t i = 0; i < density.size(); ++i)
    weighted[i] = density[i] * std::sqrt(det3(s.G[i]));
  return integrate_round(s.grid, weighted);
}

// Frame Z-derivatives of a matrix field, component by component; zeros on a
// homogeneous slice where the components are constant.
std::vector<Ten3> z_of_mat_field(const RescaledState& s,
                                 const std::vector<Mat3>& f) {
  std::vector<Ten3> out(s.npoints(), Ten3{});
  if (s.homogeneous) return out;
  ScalarField comp(s.npoints());
  for (int r1 = 0; r1 < 3; ++r1)
    for (int r2 = 0; r2 < 3; ++r2) {
      for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = f[i][r1][r2];
      for (int b = 0; b < 3; ++b) {
        const ScalarField zb = apply_Z(s.grid, b, comp);
        for (std::size_t i = 0; i < comp.size(); ++i)
          out[i][b][r1][r2] = zb[i];
      }
    }
  return out;
}

// Per-node mixed connection of the slice metric.
std::vector<Ten3> connections(const RescaledState& s, const SliceDerivs& d) {
  std::vector<Ten3> gm(s.npoints());
  for (std::size_t i = 0; i < gm.size(); ++i)
    gm[i] = connection_mixed(s.Ginv[i], connection_low(s.G[i], d.zG[i]));
  return gm;
}

}  // namespace

EnergyReport energies(const RescaledState& s, const FlrwBackground& bg,
                      int order, double lambda_star) {
  if (order < 0 || order > 1)
    throw Error(ErrKind::ConfigError,
                "energy order must be 0 or 1, got " + std::to_string(order));
  if (!(lambda_star > 0.0))
    throw Error(ErrKind::ConfigError, "lambda_star must be positive, got " +
                                          std::to_string(lambda_star));
  EnergyReport r;
  r.order = order;
  r.lambda_star = lambda_star;

  const ConstraintResiduals cr = constraint_residuals(s, bg);
  r.ham_sup = cr.ham_sup;
  r.ham_l2 = cr.ham_l2;
  r.mom_sup = cr.mom_sup;
  r.mom_l2 = cr.mom_l2;
  if (order == 0) return r;

  const BgAt f = bg_at(bg, s.t);
  const SliceDerivs d = compute_slice_derivs(s);
  const std::vector<Ten3> gm = connections(s, d);
  const std::size_t n = s.npoints();

  // assemble the pointwise densities summed over the three frame directions,
  // then integrate once per energy
  ScalarField met(n, 0.0), sf(n, 0.0);
  for (int dir = 0; dir < 3; ++dir) {
    const auto lk = lie_z_mat(s, dir, s.Khat);
    const auto lg = lie_z_mat(s, dir, s.G);
    const auto lphi = lie_z_vec(s, dir, s.Phi);
    const auto zPsi = lie_z_scalar(s, dir, s.Psi);
    const auto zlg = z_of_mat_field(s, lg);
    for (std::size_t i = 0; i < n; ++i) {
      const Ten3 nlg = nabla_mat02(gm[i], lg[i], zlg[i]);
      met[i] += norm2_mat11(s.G[i], s.Ginv[i], lk[i]) +
                0.25 * f.a43 * norm2_ten03(s.Ginv[i], nlg);
      sf[i] += zPsi[i] * zPsi[i] +
               f.a43 * norm2_oneform(s.Ginv[i], lphi[i]);
    }
  }
  r.metric = slice_integral(s, met);
  r.scalar = slice_integral(s, sf);
  r.total = lambda_star * r.metric + r.scalar;
  return r;
}

double log_log_slope(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrKind::ConfigError,
                "log-log fit needs two or more matched samples");
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw Error(ErrKind::ConfigError,
                  "log-log fit needs strictly positive samples");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0)
    throw Error(ErrKind::ConfigError, "log-log fit needs distinct abscissae");
  return sxy / sxx;
}

namespace {

// [m1 (x) m2 (x) m3] . (s (x) t) with one matrix per tensor slot.
double contract3(const Mat3& m1, const Mat3& m2, const Mat3& m3, const Ten3& s,
                 const Ten3& t) {
  double v = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          for (int e = 0; e < 3; ++e)
            for (int f = 0; f < 3; ++f)
              v += m1[a][d] * m2[b][e] * m3[c][f] * s[a][b][c] * t[d][e][f];
  return v;
}

// (X . K)_{A;BC} = X_{A;BD} K^D_C  and  (H . nK)_{A;BC} = H_{BD} nK_{A;D;C}:
// the two first-order couplings of a (0,3) gradient with the second
// fundamental form.
Ten3 grad_couple(const Ten3& nlg, const Mat3& lg, const Mat3& k,
                 const Ten3& nk) {
  Ten3 out{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        double v = 0.0;
        for (int dd = 0; dd < 3; ++dd)
          v += nlg[a][b][dd] * k[dd][c] + lg[b][dd] * nk[a][dd][c];
        out[a][b][c] = v;
      }
  return out;
}

// The per-direction slice integrals of J^0 for one current kind.
std::array<double, 3> current_slice(const RescaledState& s,
                                    const FlrwBackground& bg,
                                    CurrentKind which) {
  const BgAt f = bg_at(bg, s.t);
  const Mat3 &G = s.G[0], &Ginv = s.Ginv[0], &K = s.Khat[0];
  const Vec3& Phi = s.Phi[0];
  const Ten3 gm = connection_mixed(Ginv, connection_low(G, Ten3{}));
  const double w = std::sqrt(det3(G)) * kVolRound3;
  std::array<double, 3> out{};
  for (int dir = 0; dir < 3; ++dir) {
    if (which == CurrentKind::Metric) {
      const Mat3 lk = lie_frame_mat(dir, K, mzero3());
      const Mat3 lg = lie_frame_mat(dir, G, mzero3());
      const Ten3 nlg = nabla_mat02(gm, lg, Ten3{});
      out[dir] = (norm2_mat11(G, Ginv, lk) +
                  0.25 * f.a43 * norm2_ten03(Ginv, nlg)) *
                 w;
    } else {
      const Vec3 lphi = lie_frame_vec(dir, Phi, vzero3());
      out[dir] = f.a43 * norm2_oneform(Ginv, lphi) * w;
    }
  }
  return out;
}

}  // namespace

double divergence_identity_residual(const RescaledState& prev,
                                    const RescaledState& mid,
                                    const RescaledState& next,
                                    const FlrwBackground& bg, CurrentKind which,
                                    const CurrentTweaks& tweaks) {
  for (const RescaledState* st : {&prev, &mid, &next})
    if (!st->homogeneous)
      throw Error(ErrKind::ConfigError,
                  "divergence audit supports homogeneous slices only");
  if (!(prev.t < mid.t && mid.t < next.t))
    throw Error(ErrKind::ConfigError,
                "divergence audit needs strictly increasing slice times");
  const int n_terms = which == CurrentKind::Metric ? 7 : 1;
  if (tweaks.term_index >= n_terms)
    throw Error(ErrKind::ConfigError,
                "commuted-term index out of range: " +
                    std::to_string(tweaks.term_index));

  // left side: centered derivative (non-uniform spacing) of the slice
  // integrals of J^0; the flux term integrates to zero on the closed slice
  const std::array<double, 3> ep = current_slice(prev, bg, which);
  const std::array<double, 3> em = current_slice(mid, bg, which);
  const std::array<double, 3> en = current_slice(next, bg, which);
  const double d1 = mid.t - prev.t, d2 = next.t - mid.t;

  // middle-slice data shared by all terms
  const BgAt f = bg_at(bg, mid.t);
  const Mat3 &G = mid.G[0], &Ginv = mid.Ginv[0], &K = mid.Khat[0];
  const Vec3& Phi = mid.Phi[0];
  const double Psi = mid.Psi[0];
  RhsInfo info;
  const StateDeriv sd = rhs_rescaled(mid, bg, {}, &info);
  const double psi = info.psi[0];
  const Mat3 &dG = sd.dG[0], &dGinv = sd.dGinv[0];
  const double lapse_fac = 1.0 + f.a43 * psi;
  const double w = std::sqrt(det3(G)) * kVolRound3;

  const Ten3 gm = connection_mixed(Ginv, connection_low(G, Ten3{}));
  const Curvature cur = curvature_frame(G, Ginv, Ten3{}, Ten4{});
  const Ten3 nK = nabla_mat11(gm, K, Ten3{});
  const Vec3 divK = div_mat11(nK);
  const Vec3 divsK = div_sharp_mat11(Ginv, nK);
  const Ten3 dgam = delta_gamma(Ginv, nabla_mat02(gm, dG, Ten3{}));
  const Vec3 phi_sharp = matvec(Ginv, Phi);

  double num = 0.0, den = 0.0;
  for (int dir = 0; dir < 3; ++dir) {
    const Mat3 lk = lie_frame_mat(dir, K, mzero3());
    const Mat3 lg = lie_frame_mat(dir, G, mzero3());
    const Mat3 lginv = lie_frame_mat(dir, Ginv, mzero3());
    const Vec3 lphi = lie_frame_vec(dir, Phi, vzero3());

    double rhs = 0.0;
    if (which == CurrentKind::Metric) {
      const Ten3 nlg = nabla_mat02(gm, lg, Ten3{});
      const Vec3 divlg = div_mat02(Ginv, nlg);
      const Vec3 divlg_sharp = matvec(Ginv, divlg);
      const Ten3 nlk = nabla_mat11(gm, lk, Ten3{});

      // principal coupling terms of the identity
      const double t_grad = f.ap * f.a13 * norm2_ten03(Ginv, nlg) / 3.0;
      const double t_mom = 2.0 * kSqrt23 * f.a13 * lapse_fac *
                           dot(divlg_sharp, lphi);

      // commuted error terms (mutation hook indices 0..6)
      std::array<double, 7> bterm{};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            for (int dd = 0; dd < 3; ++dd) {
              bterm[0] += dG[a][c] * Ginv[b][dd] * lk[a][b] * lk[c][dd];
              bterm[1] += G[a][c] * dGinv[b][dd] * lk[a][b] * lk[c][dd];
            }
      bterm[2] = 0.25 * f.a43 * contract3(dGinv, Ginv, Ginv, nlg, nlg);
      bterm[3] = 0.5 * f.a43 * contract3(Ginv, dGinv, Ginv, nlg, nlg);

      Ten3 bgrad = -2.0 * grad_couple(nlg, lg, K, nK);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            double comm = 0.0;
            for (int dd = 0; dd < 3; ++dd)
              comm -= dgam[a][dd][b] * lg[dd][c] + dgam[a][dd][c] * lg[b][dd];
            bgrad[a][b][c] += f.a * comm;
          }
      bterm[4] = 0.5 * f.a13 * ip_ten03(Ginv, nlg, bgrad);

      const Vec3 comm_div =
          lie_frame_vec(dir, divK, vzero3()) - div_mat11(nlk);
      const Vec3 bmom_dn = -1.0 * comm_div - Psi * lphi;
      bterm[5] = -f.a13 * lapse_fac * dot(divlg_sharp, bmom_dn);

      const Vec3 comm_divs =
          lie_frame_vec(dir, divsK, vzero3()) - div_sharp_mat11(Ginv, nlk);
      const Vec3 lginv_phi = matvec(lginv, Phi);
      const Vec3 ginv_lphi = matvec(Ginv, lphi);
      const Vec3 bmom_up = -1.0 * comm_divs - kSqrt23 * lginv_phi -
                           Psi * (lginv_phi + ginv_lphi);
      bterm[6] = -f.a13 * lapse_fac * dot(divlg, bmom_up);

      if (tweaks.term_index >= 0) bterm[tweaks.term_index] *= tweaks.scale;

      // lapse-weighted transport terms
      const double j1 = f.ap * f.a13 * psi * norm2_mat11(G, Ginv, lk);
      const double j2 =
          0.25 * f.ap * f.a53 * psi * norm2_ten03(Ginv, nlg);

      // exact remainder of the curvature variation (the trace part of lg is
      // constant on a homogeneous slice, so its Hessian drops out)
      const Mat3 lric = lie_frame_mat(dir, cur.ric_sharp, mzero3());
      const Ten4 nnlg = nabla_ten03(gm, nlg, Ten4{});
      const Mat3 lap_sharp = matmul(Ginv, laplacian_mat02(Ginv, nnlg));
      const Mat3 sharp_div = matmul(Ginv, nabla_oneform(gm, divlg, mzero3()));
      const Mat3 div_sharp =
          transpose(nabla_vector(gm, divlg_sharp, mzero3()));
      const Mat3 rem =
          lric + 0.5 * lap_sharp - 0.5 * sharp_div - 0.5 * div_sharp;
      const double j4 = 2.0 * f.a13 * ip_mat11(G, Ginv, lk, rem);

      const Vec3 lphi_sharp = matvec(lginv, Phi) + matvec(Ginv, lphi);
      Mat3 outer;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          outer[i][j] = lphi_sharp[i] * Phi[j] + phi_sharp[i] * lphi[j];
      const Mat3 jsec =
          f.a43 * psi * rem - f.ap * psi * lk - lapse_fac * outer;
      const double j3 = 2.0 * f.a13 * ip_mat11(G, Ginv, lk, jsec);

      const Ten3 jgrad = -2.0 * psi * grad_couple(nlg, lg, K, nK) +
                         (2.0 / 3.0) * f.ap * psi * nlg;
      const double j5 = 0.5 * f.a53 * ip_ten03(Ginv, nlg, jgrad);

      rhs = t_grad + t_mom + j1 + j2 + j3 + j4 + j5;
      for (double b : bterm) rhs += b;
    } else {
      const double lphi2 = norm2_oneform(Ginv, lphi);
      double bsf = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          bsf += f.a43 * dGinv[a][b] * lphi[a] * lphi[b];
      if (tweaks.term_index == 0) bsf *= tweaks.scale;
      rhs = (4.0 / 3.0) * f.ap * f.a13 * lphi2 + bsf +
            f.ap * f.a53 * psi * lphi2;
    }
    rhs *= w;

    const double lhs = (d1 * d1 * en[dir] - d2 * d2 * ep[dir] +
                        (d2 * d2 - d1 * d1) * em[dir]) /
                       (d1 * d2 * (d1 + d2));
    num += std::abs(lhs - rhs);
    den += std::abs(lhs) + std::abs(rhs);
  }
  if (den <= kDenFloor) return 0.0;
  return num / (den + kDenFloor);
}

std::vector<double> curvature_invariant(const RescaledState& s,
                                        const FlrwBackground& bg) {
  const BgAt f = bg_at(bg, s.t);
  std::vector<double> out(s.npoints());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double time_part = kSqrt23 + s.Psi[i];
    const double v = time_part * time_part -
                     f.a43 * norm2_oneform(s.Ginv[i], s.Phi[i]);
    out[i] = v * v;
  }
  return out;
}

double blowup_exponent(const Trajectory& traj, const FlrwBackground& bg,
                       double a_window) {
  std::vector<double> xs, ys;
  for (const RescaledState& s : traj.states) {
    const double a = flrw_eval(bg, s.t).a;
    if (a > a_window) continue;
    const std::vector<double> inv = curvature_invariant(s, bg);
    const double sup = *std::max_element(inv.begin(), inv.end());
    xs.push_back(a);
    ys.push_back(sup / (a * a * a * a));
  }
  if (xs.size() < 3)
    throw Error(ErrKind::InsufficientTail,
                "blowup fit needs at least three stored states with a <= " +
                    std::to_string(a_window));
  return log_log_slope(xs, ys);
}

namespace {

struct TailSample {
  double a = 0.0;
  Mat3 k{};
  double p = 0.0;
};

// One-step Richardson extrapolation in a^{4/3} from two samples.
TailSample richardson(const TailSample& far, const TailSample& near) {
  const double fa = std::pow(far.a, 4.0 / 3.0);
  const double na = std::pow(near.a, 4.0 / 3.0);
  const double wgt = na / (fa - na);
  TailSample lim;
  lim.k = near.k + wgt * (near.k - far.k);
  lim.p = near.p + wgt * (near.p - far.p);
  return lim;
}

}  // namespace

CrunchLimits crunch_limits(const Trajectory& traj, const FlrwBackground& bg) {
  std::vector<TailSample> tail;
  for (const RescaledState& s : traj.states) {
    if (!s.homogeneous)
      throw Error(ErrKind::ConfigError,
                  "collapse limits support homogeneous trajectories only");
    const BgAt f = bg_at(bg, s.t);
    if (f.a > 1e-2) continue;
    TailSample ts;
    ts.a = f.a;
    ts.k = s.Khat[0] - (f.ap / 3.0) * identity3();
    ts.p = (1.0 + f.a43 * s.psi[0]) * (kSqrt23 + s.Psi[0]);
    tail.push_back(ts);
  }
  if (tail.size() < 8 || !(tail.front().a >= 4.0 * tail.back().a))
    throw Error(ErrKind::InsufficientTail,
                "collapse limits need a stored tail reaching a <= 1e-2 and "
                "spanning a factor of four in a");

  // latest stored state with a >= target (a decreases along the tail)
  auto at_or_above = [&](double target) {
    std::size_t i = 0;
    while (i + 1 < tail.size() && tail[i + 1].a >= target) ++i;
    return i;
  };
  const TailSample& last = tail.back();
  const TailSample& mid = tail[at_or_above(2.0 * last.a)];
  const TailSample& far = tail[at_or_above(4.0 * last.a)];

  // two extrapolation steps (three nodes in a^{4/3}) so the quadratic
  // remainder of a single step is removed as well
  const TailSample fine = richardson(mid, last);
  const TailSample wide = richardson(far, mid);
  const double x0 = std::pow(far.a, 4.0 / 3.0);
  const double x2 = std::pow(last.a, 4.0 / 3.0);
  const double w2 = x2 / (x0 - x2);
  TailSample lim;
  lim.k = fine.k + w2 * (fine.k - wide.k);
  lim.p = fine.p + w2 * (fine.p - wide.p);

  CrunchLimits out;
  out.k_limit = lim.k;
  out.psi_limit = lim.p;
  out.k_trace = trace(lim.k);
  out.closure_residual =
      std::abs(lim.p * lim.p + trace(matmul(lim.k, lim.k)) - 1.0);
  out.extrapolation_error =
      std::max(max_abs(lim.k - fine.k), std::abs(lim.p - fine.p));

  // fitted tail decay exponents of the distance to the limit
  std::vector<double> xs_k, ys_k, xs_p, ys_p;
  for (const TailSample& ts : tail) {
    const double dk = max_abs(ts.k - lim.k);
    if (dk > 1e-13) {
      xs_k.push_back(ts.a);
      ys_k.push_back(dk);
    }
    const double dp = std::abs(ts.p - lim.p);
    if (dp > 1e-13) {
      xs_p.push_back(ts.a);
      ys_p.push_back(dp);
    }
  }
  if (xs_k.size() >= 3) out.rate_k = log_log_slope(xs_k, ys_k);
  if (xs_p.size() >= 3) out.rate_psi = log_log_slope(xs_p, ys_p);
  return out;
}

namespace {

// 1 - a^{4/3} without cancellation for a near 1 (exact 0 at a = 1).
double one_minus_a43(double a) {
  return -std::expm1((4.0 / 3.0) * std::log(a));
}

// Composite Simpson rule with n (even) intervals.
template <typename F>
double simpson(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// log-correction B(a) = integral_a^1 (1 - s)/(alpha s) dalpha with
// s = sqrt(1 - alpha^{4/3}); the integrand equals alpha^{1/3}/(s(1+s)).
// Both endpoint singularities are removed by substitution: alpha = y^3 near
// alpha = 0 and alpha = 1 - v^2 near alpha = 1.
double log_correction(double a, double upper_half) {
  auto dv_piece = [](double v) {
    if (v == 0.0) return std::sqrt(3.0);
    const double alpha = 1.0 - v * v;
    const double s = std::sqrt(one_minus_a43(alpha));
    return 2.0 * v * std::cbrt(alpha) / (s * (1.0 + s));
  };
  if (a >= 0.5) return simpson(dv_piece, 0.0, std::sqrt(1.0 - a), 400);
  auto dy_piece = [](double y) {
    const double s = std::sqrt(1.0 - y * y * y * y);
    return 3.0 * y * y * y / (s * (1.0 + s));
  };
  return simpson(dy_piece, std::cbrt(a), std::cbrt(0.5), 400) + upper_half;
}

}  // namespace

AffineBound geodesic_affine_bound(const FlrwBackground& bg,
                                  double growth_coeff) {
  if (!(growth_coeff >= 0.0))
    throw Error(ErrKind::ConfigError,
                "growth coefficient must be nonnegative, got " +
                    std::to_string(growth_coeff));
  (void)bg;  // the collapse profile is fully determined by the first integral

  AffineBound out;
  const double p = 1.0 / 3.0 + growth_coeff;
  out.tail_exponent = -p;
  if (p >= 1.0 - 1e-9) {
    // integrand tail (t_crunch - tau)^{-p} is no longer integrable
    out.marginal = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }

  const double upper_half = log_correction(0.5, 0.0);
  auto bval = [&](double a) { return log_correction(a, upper_half); };

  // value = integral_0^1 a^{-p} exp(p B(a)) / sqrt(1 - a^{4/3}) da,
  // the original time integral transported to scale-factor variables.
  // Piece a in [0, 1/2]: substitute a = u^sexp with sexp (1 - p) = 2 so the
  // a^{-p} da factor becomes exactly sexp * u du.
  const double sexp = 2.0 / (1.0 - p);
  auto piece_low = [&](double u) {
    if (u == 0.0) return 0.0;
    const double a = std::pow(u, sexp);
    return sexp * u * std::exp(p * bval(a)) / std::sqrt(one_minus_a43(a));
  };
  // Piece a in [1/2, 1]: substitute a = 1 - v^2 to absorb the inverse
  // square-root endpoint.
  auto piece_high = [&](double v) {
    if (v == 0.0) return std::sqrt(3.0);
    const double a = 1.0 - v * v;
    return 2.0 * v * std::pow(a, -p) * std::exp(p * bval(a)) /
           std::sqrt(one_minus_a43(a));
  };
  out.value = simpson(piece_low, 0.0, std::pow(0.5, 1.0 / sexp), 1600) +
              simpson(piece_high, 0.0, std::sqrt(0.5), 1600);

  // fitted tail exponent of the integrand against t_crunch - tau
  auto time_left = [&](double a) {
    // t_crunch - tau(a) = integral_0^a dalpha / sqrt(1 - alpha^{4/3})
    auto dy = [](double y) {
      return 3.0 * y * y / std::sqrt(1.0 - y * y * y * y);
    };
    return simpson(dy, 0.0, std::cbrt(a), 200);
  };
  std::vector<double> xs, ys;
  for (int k = 0; k < 10; ++k) {
    const double a = 1e-2 * std::pow(10.0, -0.2 * k);
    xs.push_back(time_left(a));
    ys.push_back(std::pow(a, -p) * std::exp(p * bval(a)));
  }
  out.tail_exponent = log_log_slope(xs, ys);
  return out;
}

MonotonicityReport energy_monotonicity_monitor(const Trajectory& traj,
                                               const FlrwBackground& bg,
                                               double lambda_star) {
  if (traj.states.size() < 3)
    throw Error(ErrKind::ConfigError,
                "monotonicity monitor needs at least three stored states");

  MonotonicityReport out;
  const std::size_t n = traj.states.size();
  std::vector<double> e(n), av(n), damp0(n), damp1(n), damp2(n), damp3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RescaledState& s = traj.states[i];
    e[i] = energies(s, bg, 1, lambda_star).total;
    const BgAt f = bg_at(bg, s.t);
    av[i] = f.a;

    // |a'|-weighted damping densities produced by the divergence identities
    const SliceDerivs d = compute_slice_derivs(s);
    const std::vector<Ten3> gm = connections(s, d);
    const std::size_t m = s.npoints();
    ScalarField q0(m, 0.0), q1(m, 0.0), q2(m, 0.0), q3(m, 0.0);
    for (int dir = 0; dir < 3; ++dir) {
      const auto lg = lie_z_mat(s, dir, s.G);
      const auto lphi = lie_z_vec(s, dir, s.Phi);
      const auto zpsi = lie_z_scalar(s, dir, s.psi);
      const auto zlg = z_of_mat_field(s, lg);
      std::array<ScalarField, 3> zzpsi;
      for (int b = 0; b < 3; ++b) zzpsi[b] = lie_z_scalar(s, b, zpsi);
      for (std::size_t j = 0; j < m; ++j) {
        const Ten3 nlg = nabla_mat02(gm[j], lg[j], zlg[j]);
        q0[j] += norm2_ten03(s.Ginv[j], nlg);
        q1[j] += norm2_oneform(s.Ginv[j], lphi[j]);
        const Vec3 grad{zzpsi[0][j], zzpsi[1][j], zzpsi[2][j]};
        q2[j] += norm2_oneform(s.Ginv[j], grad);
        q3[j] += zpsi[j] * zpsi[j];
      }
    }
    const double ap = std::abs(f.ap);
    damp0[i] = ap * f.a13 * slice_integral(s, q0);
    damp1[i] = ap * f.a13 * slice_integral(s, q1);
    damp2[i] = ap * f.a * f.a * f.a * slice_integral(s, q2);
    damp3[i] = ap * ap * ap * f.a53 * slice_integral(s, q3);
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double half = 0.5 * (traj.states[i + 1].t - traj.states[i].t);
    out.damping_integrals[0] += half * (damp0[i] + damp0[i + 1]);
    out.damping_integrals[1] += half * (damp1[i] + damp1[i + 1]);
    out.damping_integrals[2] += half * (damp2[i] + damp2[i + 1]);
    out.damping_integrals[3] += half * (damp3[i] + damp3[i + 1]);
  }

  if (e.front() <= 1e-28) return out;  // background run: nothing to fit
  out.defined = true;
  out.initial_sqrt = std::sqrt(e.front());
  out.sup_sqrt = std::sqrt(*std::max_element(e.begin(), e.end()));

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i)
    if (av[i] <= 0.5 && e[i] > 0.0) {
      xs.push_back(av[i]);
      ys.push_back(std::sqrt(e[i]));
    }
  if (xs.size() >= 3) out.exponent = -log_log_slope(xs, ys);
  return out;
}

}  // namespace crunch
