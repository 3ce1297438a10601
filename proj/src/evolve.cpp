#include "crunch/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "crunch/error.hpp"
#include "crunch/fft.hpp"
#include "crunch/frame.hpp"

namespace crunch {

namespace {

// Background factors that appear in the evolution equations.
struct BgFactors {
  double a = 0.0, ap = 0.0;
  double a13 = 0.0, a43 = 0.0, a53 = 0.0, inv_a = 0.0;
};

BgFactors factors(const FlrwBackground& bg, double t) {
  const FlrwSample s = flrw_eval(bg, t);
  BgFactors f;
  f.a = s.a;
  f.ap = s.a_prime;
  f.a13 = std::cbrt(s.a);
  f.a43 = s.a * f.a13;
  f.a53 = f.a43 * f.a13;
  f.inv_a = 1.0 / s.a;
  return f;
}

// Pointwise assembly of the evolution equations quoted in the header, given
// the solved lapse deviation psi and frame derivatives of all fields.
void assemble_point(const BgFactors& b, const Mat3& G, const Mat3& Ginv,
                    const Mat3& Khat, double Psi, const Vec3& Phi, double psi,
                    const Ten3& zG, const Ten4& zzG, const Vec3& zpsi,
                    const Mat3& zzpsi, const Vec3& zPsi, const Mat3& zPhi,
                    Mat3& dG, Mat3& dGinv, Mat3& dKhat, double& dPsi,
                    Vec3& dPhi) {
  const double lapse_fac = 1.0 + b.a43 * psi;
  const Ten3 gm = connection_mixed(Ginv, connection_low(G, zG));
  const Curvature cur = curvature_frame(G, Ginv, zG, zzG);

  dG = (-2.0 * b.inv_a * lapse_fac) * matmul(G, Khat) +
       ((2.0 / 3.0) * b.a13 * b.ap * psi) * G;
  // the matrix derivative of the inverse keeps G Ginv = Id to integrator
  // accuracy without re-inverting every stage
  dGinv = (-1.0) * matmul(Ginv, matmul(dG, Ginv));

  const Mat3 hess_sharp = matmul(Ginv, hessian_scalar(gm, zpsi, zzpsi));
  const Vec3 phi_sharp = matvec(Ginv, Phi);
  Mat3 phi_outer;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) phi_outer[i][j] = phi_sharp[i] * Phi[j];
  dKhat = (-b.a53) * hess_sharp +
          (b.a13 * lapse_fac) *
              (cur.ric_sharp - (2.0 / 9.0) * identity3()) +
          (psi * (b.a13 * b.ap * b.ap / 3.0 + (2.0 / 9.0) * b.a53)) *
              identity3() +
          (-b.a13 * b.ap * psi) * Khat + (-b.a13 * lapse_fac) * phi_outer;

  const double div_phi = div_oneform(Ginv, nabla_oneform(gm, Phi, zPhi));
  double gradpsi_dot_phi = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      gradpsi_dot_phi += Ginv[a][c] * zpsi[a] * Phi[c];
  dPsi = lapse_fac * b.a13 * div_phi - kSqrt23 * b.ap * b.a13 * psi -
         b.a13 * b.ap * psi * Psi - b.a53 * gradpsi_dot_phi;
  for (int c = 0; c < 3; ++c)
    dPhi[c] = b.inv_a * lapse_fac * zPsi[c] +
              (kSqrt23 + Psi) * b.a13 * zpsi[c];
}

// ---- per-row angular mode cap ------------------------------------------

// Zero all Fourier modes of a periodic line whose index exceeds cap.
void lowpass_line(std::vector<std::complex<double>>& buf, int cap) {
  const int n = static_cast<int>(buf.size());
  if (fft_size_ok(n)) {
    fft_radix2(buf.data(), n, 1, false);
    for (int m = 0; m < n; ++m)
      if (std::min(m, n - m) > cap) buf[m] = {0.0, 0.0};
    fft_radix2(buf.data(), n, 1, true);
    return;
  }
  // direct transform for the odd-sized grids used in a few tests
  static thread_local std::vector<std::complex<double>> modes;
  modes.assign(n, {0.0, 0.0});
  const double w = -2.0 * std::numbers::pi / n;
  for (int m = 0; m < n; ++m) {
    if (std::min(m, n - m) > cap) continue;
    for (int p = 0; p < n; ++p)
      modes[m] += buf[p] * std::polar(1.0, w * m * p);
    modes[m] /= n;
  }
  for (int p = 0; p < n; ++p) {
    std::complex<double> v{0.0, 0.0};
    for (int m = 0; m < n; ++m)
      if (modes[m] != std::complex<double>{0.0, 0.0})
        v += modes[m] * std::polar(1.0, -w * m * p);
    buf[p] = v;
  }
}

// Cap the angular Fourier content of one scalar component at the
// equal-physical-resolution mode count per eta row (the xi2 circles shrink
// like sin eta toward one axis, the xi1 circles like cos eta toward the
// other).  Rows whose cap already covers the full spectrum are untouched.
void filter_component(const HopfGrid& g, ScalarField& f) {
  std::vector<std::complex<double>> line;
  for (int i = 0; i < g.n_eta; ++i) {
    const double eta = g.eta(i);
    const int cap2 = std::max(
        2, static_cast<int>(std::ceil(g.n_xi2 * std::sin(eta))));
    if (2 * cap2 < g.n_xi2) {
      line.resize(g.n_xi2);
      for (int j = 0; j < g.n_xi1; ++j) {
        for (int k = 0; k < g.n_xi2; ++k) line[k] = f[g.idx(i, j, k)];
        lowpass_line(line, cap2);
        for (int k = 0; k < g.n_xi2; ++k) f[g.idx(i, j, k)] = line[k].real();
      }
    }
    const int cap1 = std::max(
        2, static_cast<int>(std::ceil(g.n_xi1 * std::cos(eta))));
    if (2 * cap1 < g.n_xi1) {
      line.resize(g.n_xi1);
      for (int k = 0; k < g.n_xi2; ++k) {
        for (int j = 0; j < g.n_xi1; ++j) line[j] = f[g.idx(i, j, k)];
        lowpass_line(line, cap1);
        for (int j = 0; j < g.n_xi1; ++j) f[g.idx(i, j, k)] = line[j].real();
      }
    }
  }
}

void filter_angular(RescaledState& s) {
  const HopfGrid& g = s.grid;
  ScalarField buf(g.size());
  auto run = [&](auto get, auto set) {
    for (std::size_t p = 0; p < buf.size(); ++p) buf[p] = get(p);
    filter_component(g, buf);
    for (std::size_t p = 0; p < buf.size(); ++p) set(p, buf[p]);
  };
  for (int r = 0; r < 3; ++r)
    for (int c = r; c < 3; ++c) {
      run([&](std::size_t p) { return s.G[p][r][c]; },
          [&](std::size_t p, double v) { s.G[p][r][c] = s.G[p][c][r] = v; });
      run([&](std::size_t p) { return s.Ginv[p][r][c]; },
          [&](std::size_t p, double v) {
            s.Ginv[p][r][c] = s.Ginv[p][c][r] = v;
          });
    }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      run([&](std::size_t p) { return s.Khat[p][r][c]; },
          [&](std::size_t p, double v) { s.Khat[p][r][c] = v; });
  run([&](std::size_t p) { return s.Psi[p]; },
      [&](std::size_t p, double v) { s.Psi[p] = v; });
  for (int c = 0; c < 3; ++c)
    run([&](std::size_t p) { return s.Phi[p][c]; },
        [&](std::size_t p, double v) { s.Phi[p][c] = v; });
}

// ---- RK4 plumbing -------------------------------------------------------

RescaledState add_scaled(const RescaledState& s, const StateDeriv& d,
                         double c, double t_new) {
  RescaledState r = s;
  r.t = t_new;
  for (std::size_t i = 0; i < s.npoints(); ++i) {
    r.G[i] = s.G[i] + c * d.dG[i];
    r.Ginv[i] = s.Ginv[i] + c * d.dGinv[i];
    r.Khat[i] = s.Khat[i] + c * d.dKhat[i];
    r.Psi[i] += c * d.dPsi[i];
    r.Phi[i] = r.Phi[i] + c * d.dPhi[i];
  }
  return r;
}

void project_state(RescaledState& s) {
  for (std::size_t i = 0; i < s.npoints(); ++i) {
    s.G[i] = sym_part(s.G[i]);
    s.Ginv[i] = sym_part(s.Ginv[i]);
    s.Khat[i] = trace_free(s.Khat[i]);
  }
}

}  // namespace

StateDeriv rhs_rescaled(const RescaledState& s, const FlrwBackground& bg,
                        const LapseOptions& lapse_opt, RhsInfo* info) {
  const BgFactors b = factors(bg, s.t);

  std::vector<double> psi;
  LapseStats stats;
  if (s.homogeneous) {
    psi.assign(1, solve_lapse_homogeneous(s, bg, lapse_opt.f_floor));
  } else {
    psi = solve_lapse_elliptic(s, bg, LapseForm::High, lapse_opt, &stats);
  }

  // run the shared finite-difference machinery with the fresh lapse in place
  RescaledState work = s;
  work.psi = psi;
  const SliceDerivs d = compute_slice_derivs(work);

  const std::size_t n = s.npoints();
  StateDeriv out;
  out.dG.resize(n);
  out.dGinv.resize(n);
  out.dKhat.resize(n);
  out.dPsi.resize(n);
  out.dPhi.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    assemble_point(b, s.G[i], s.Ginv[i], s.Khat[i], s.Psi[i], s.Phi[i],
                   psi[i], d.zG[i], d.zzG[i], d.zpsi[i], d.zzpsi[i],
                   d.zPsi[i], d.zPhi[i], out.dG[i], out.dGinv[i],
                   out.dKhat[i], out.dPsi[i], out.dPhi[i]);

  if (info) {
    info->psi_sup = 0.0;
    for (double v : psi) info->psi_sup = std::max(info->psi_sup, std::abs(v));
    info->psi = std::move(psi);
    info->lapse = stats;
  }
  return out;
}

RescaledState step_rk4(const RescaledState& s, double dt,
                       const FlrwBackground& bg,
                       const LapseOptions& lapse_opt, RhsInfo* info) {
  RhsInfo first, last;
  const StateDeriv k1 = rhs_rescaled(s, bg, lapse_opt, &first);
  RescaledState s2 = add_scaled(s, k1, dt / 2.0, s.t + dt / 2.0);
  if (!s.homogeneous) filter_angular(s2);
  const StateDeriv k2 = rhs_rescaled(s2, bg, lapse_opt);
  RescaledState s3 = add_scaled(s, k2, dt / 2.0, s.t + dt / 2.0);
  if (!s.homogeneous) filter_angular(s3);
  const StateDeriv k3 = rhs_rescaled(s3, bg, lapse_opt);
  RescaledState s4 = add_scaled(s, k3, dt, s.t + dt);
  if (!s.homogeneous) filter_angular(s4);
  const StateDeriv k4 = rhs_rescaled(s4, bg, lapse_opt, &last);

  RescaledState out = s;
  out.t = s.t + dt;
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < s.npoints(); ++i) {
    out.G[i] = s.G[i] + w * (k1.dG[i] + 2.0 * (k2.dG[i] + k3.dG[i]) +
                             k4.dG[i]);
    out.Ginv[i] = s.Ginv[i] + w * (k1.dGinv[i] +
                                   2.0 * (k2.dGinv[i] + k3.dGinv[i]) +
                                   k4.dGinv[i]);
    out.Khat[i] = s.Khat[i] + w * (k1.dKhat[i] +
                                   2.0 * (k2.dKhat[i] + k3.dKhat[i]) +
                                   k4.dKhat[i]);
    out.Psi[i] = s.Psi[i] + w * (k1.dPsi[i] + 2.0 * (k2.dPsi[i] +
                                                     k3.dPsi[i]) +
                                 k4.dPsi[i]);
    out.Phi[i] = s.Phi[i] + w * (k1.dPhi[i] + 2.0 * (k2.dPhi[i] +
                                                     k3.dPhi[i]) +
                                 k4.dPhi[i]);
  }
  if (!s.homogeneous) filter_angular(out);
  project_state(out);
  // advisory lapse carried on the state: the far-stage solve, one step old
  out.psi = std::move(last.psi);
  if (info) *info = std::move(first);
  return out;
}

// ---- initial data -------------------------------------------------------

namespace {

// lowest nonconstant harmonic used for spatial modulation
double harmonic(double eta, double xi1, double xi2) {
  const std::array<double, 4> y = embed(eta, xi1, xi2);
  return (y[0] * y[2] + y[1] * y[3]) / 9.0;
}

RescaledState build_data(const PerturbationSpec& spec,
                         const FlrwBackground& bg, double t0,
                         const HopfGrid* grid) {
  if (!grid && spec.spatial_amplitude != 0.0)
    throw Error(ErrKind::ConfigError,
                "spatial perturbation amplitude requires a grid");

  RescaledState s;
  s.t = t0;
  if (grid) {
    s.homogeneous = false;
    s.grid = *grid;
  }
  const std::size_t n = s.npoints();
  s.G.resize(n);
  s.Ginv.resize(n);
  s.Khat.resize(n);
  s.psi.assign(n, 0.0);
  s.Psi.assign(n, 0.0);
  s.Phi.assign(n, vzero3());

  const std::array<double, 3> dir = {1.0, -1.0, 0.0};
  for (std::size_t p = 0; p < n; ++p) {
    double mod = 0.0;
    if (grid && spec.spatial_amplitude != 0.0) {
      const int i = static_cast<int>(p) / (grid->n_xi1 * grid->n_xi2);
      const int rem = static_cast<int>(p) % (grid->n_xi1 * grid->n_xi2);
      const int j = rem / grid->n_xi2, k = rem % grid->n_xi2;
      mod = spec.spatial_amplitude *
            harmonic(grid->eta(i), grid->xi1(j), grid->xi2(k));
    }
    Mat3 G = mzero3(), Ginv = mzero3();
    for (int d = 0; d < 3; ++d) {
      const double e = spec.g_log_diag[d] + dir[d] * mod;
      G[d][d] = std::exp(e);
      Ginv[d][d] = std::exp(-e);
    }
    // seed as a symmetric (0,2) tensor so Khat is G-compatible by
    // construction, then raise an index
    Mat3 seed = mzero3();
    seed[0][0] = spec.kappa * G[0][0];
    seed[1][1] = -spec.kappa * G[1][1];
    seed[0][1] = seed[1][0] = spec.kappa_cross;
    s.G[p] = G;
    s.Ginv[p] = Ginv;
    s.Khat[p] = trace_free(matmul(Ginv, seed));
  }

  s.Psi = solve_hamiltonian_for_Psi(s, bg);
  if (spec.momentum_phi) {
    // alternate the pointwise momentum update with the Hamiltonian solve;
    // the coupling through |Phi|^2 is weak, so this contracts fast
    for (int pass = 0; pass < 8; ++pass) {
      const ConstraintResiduals res = constraint_residuals(s, bg);
      for (std::size_t p = 0; p < n; ++p) {
        const double denom = kSqrt23 + s.Psi[p];
        if (std::abs(denom) < 1e-6)
          throw Error(ErrKind::ConstraintInfeasible,
                      "momentum solve degenerates: sqrt(2/3) + Psi = " +
                          std::to_string(denom));
        for (int c = 0; c < 3; ++c)
          s.Phi[p][c] -= res.momentum[p][c] / denom;
      }
      s.Psi = solve_hamiltonian_for_Psi(s, bg);
    }
  }
  validate_state(s);
  return s;
}

}  // namespace

RescaledState make_initial_data(const PerturbationSpec& spec,
                                const FlrwBackground& bg, double t0) {
  return build_data(spec, bg, t0, nullptr);
}

RescaledState make_initial_data(const PerturbationSpec& spec,
                                const FlrwBackground& bg, double t0,
                                const HopfGrid& grid) {
  return build_data(spec, bg, t0, &grid);
}

// ---- driver -------------------------------------------------------------

Trajectory evolve(const EvolveConfig& cfg, const FlrwBackground& bg,
                  const RescaledState& initial) {
  if (cfg.a_stop < bg.a_min * (1.0 + 1e-9))
    throw Error(ErrKind::ConfigError,
                "a_stop = " + std::to_string(cfg.a_stop) +
                    " is below the background floor a_min = " +
                    std::to_string(bg.a_min));
  if (cfg.dt_scale <= 0.0 || cfg.cfl <= 0.0 || cfg.cfl > 1.0)
    throw Error(ErrKind::ConfigError,
                "step-size controls must satisfy dt_scale > 0, 0 < cfl <= 1");
  const bool homog = cfg.mode == EvolveMode::Homogeneous;
  if (homog != initial.homogeneous)
    throw Error(ErrKind::ConfigError,
                "evolution mode does not match the state representation");
  validate_state(initial);

  double h_min = 1.0;
  if (!homog)
    h_min = std::min(initial.grid.h_eta,
                     std::min(initial.grid.h_xi1, initial.grid.h_xi2));

  Trajectory traj;
  RescaledState s = initial;
  int step_i = 0;
  while (true) {
    const FlrwSample bgs = flrw_eval(bg, s.t);
    const bool at_stop = bgs.a <= cfg.a_stop;
    const bool out_of_steps = step_i >= cfg.max_steps;
    const double dt = (homog ? cfg.dt_scale : cfg.cfl * h_min) * bgs.a;

    StepRow row;
    row.t = s.t;
    row.a = bgs.a;
    row.dt = dt;
    const ConstraintResiduals res = constraint_residuals(s, bg);
    row.ham_sup = res.ham_sup;
    row.ham_l2 = res.ham_l2;
    row.mom_sup = res.mom_sup;
    row.mom_l2 = res.mom_l2;
    if (res.ham_sup > cfg.constraint_ceiling)
      throw Error(ErrKind::InvariantViolation,
                  "Hamiltonian residual " + std::to_string(res.ham_sup) +
                      " exceeds the ceiling " +
                      std::to_string(cfg.constraint_ceiling) + " at t = " +
                      std::to_string(s.t));
    double drift = 0.0;
    for (std::size_t p = 0; p < s.npoints(); ++p) {
      row.khat_sup = std::max(
          row.khat_sup,
          std::sqrt(std::max(
              0.0, norm2_mat11(s.G[p], s.Ginv[p], s.Khat[p]))));
      row.Psi_sup = std::max(row.Psi_sup, std::abs(s.Psi[p]));
      const double det = det3(s.G[p]);
      if (!(det > 0.0))
        throw Error(ErrKind::InvariantViolation,
                    "metric determinant " + std::to_string(det) +
                        " lost positivity at t = " + std::to_string(s.t));
      row.det_dev = std::max(row.det_dev, std::abs(det - 1.0));
      drift = std::max(
          drift, max_abs(matmul(s.G[p], s.Ginv[p]) - identity3()));
    }
    row.ginv_drift = drift;
    if (drift > cfg.ginv_drift_tol)
      for (std::size_t p = 0; p < s.npoints(); ++p)
        s.Ginv[p] = invert_metric(s.G[p]);

    if (at_stop || out_of_steps) {
      // closing row: one fresh lapse solve for the diagnostic columns
      if (homog) {
        s.psi.assign(1, solve_lapse_homogeneous(s, bg, cfg.lapse.f_floor));
      } else {
        LapseStats stats;
        s.psi = solve_lapse_elliptic(s, bg, LapseForm::High, cfg.lapse,
                                     &stats);
        row.lapse_iterations = stats.iterations;
        row.lapse_residual = stats.final_residual;
      }
      for (double v : s.psi) row.psi_sup = std::max(row.psi_sup, std::abs(v));
      const std::vector<double> f =
          lapse_coefficient(s, bg, LapseForm::High);
      row.f_min = *std::min_element(f.begin(), f.end());
      if (cfg.observer) cfg.observer(s, row);
      traj.rows.push_back(row);
      traj.states.push_back(s);
      traj.reached_a_stop = at_stop;
      traj.stop_reason = at_stop ? "a_stop" : "max_steps";
      break;
    }

    RhsInfo info;
    RescaledState next = step_rk4(s, dt, bg, cfg.lapse, &info);
    row.psi_sup = info.psi_sup;
    if (homog) {
      const std::vector<double> f =
          lapse_coefficient(s, bg, LapseForm::High);
      row.f_min = *std::min_element(f.begin(), f.end());
    } else {
      row.lapse_iterations = info.lapse.iterations;
      row.lapse_residual = info.lapse.final_residual;
      row.f_min = info.lapse.f_min;
    }
    s.psi = std::move(info.psi);  // exact lapse of s at its own time
    if (cfg.observer) cfg.observer(s, row);
    traj.rows.push_back(row);
    if (cfg.store_every > 0 && step_i % cfg.store_every == 0) {
      try {
        validate_state(s);
      } catch (const Error& e) {
        if (e.kind == ErrKind::SingularMetric)
          throw Error(ErrKind::InvariantViolation, e.what());
        throw;
      }
      traj.states.push_back(s);
    }
    s = std::move(next);
    ++step_i;
  }
  return traj;
}

}  // namespace crunch
