#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "crunch/flrw.hpp"
#include "crunch/hopf.hpp"
#include "crunch/lapse.hpp"
#include "crunch/state.hpp"

// Time evolution of the rescaled variables toward the crunch.  With ' = d/da
// background derivatives suppressed to a(t), a'(t) samples, the system is
//
//   d_t G     = -2 a^-1 (1 + a^{4/3} psi) G.Khat + (2/3) a^{1/3} a' psi G
//   d_t G^-1  =  2 a^-1 (1 + a^{4/3} psi) G^-1.Khat - (2/3) a^{1/3} a' psi G^-1
//   d_t Khat  = -a^{5/3} grad# grad psi
//               + a^{1/3} (1 + a^{4/3} psi) (Ric# - (2/9) Id)
//               + (1/3) a'^2 a^{1/3} psi Id + (2/9) a^{5/3} psi Id
//               - a^{1/3} a' psi Khat
//               - a^{1/3} (1 + a^{4/3} psi) Phi# (x) Phi
//   d_t Psi   = (1 + a^{4/3} psi) a^{1/3} div Phi - sqrt(2/3) a' a^{1/3} psi
//               - a^{1/3} a' psi Psi - a^{5/3} grad# psi . Phi
//   d_t Phi   = a^-1 (1 + a^{4/3} psi) grad Psi + sqrt(2/3) a^{1/3} grad psi
//               + a^{1/3} Psi grad psi
//
// where (G.Khat)_BC = G_BD Khat^D_C and psi is not evolved: it is recovered
// from the elliptic lapse equation at every right-hand-side evaluation
// (closed form for homogeneous states).  The trace of the Khat equation
// cancels exactly against the lapse equation on constraint-satisfying data,
// so tr Khat = 0 is enforced by projection once per step rather than per
// stage; G and G^-1 are likewise re-symmetrized.
//
// Stepping is classical RK4 with a fresh lapse solve per stage and step sizes
// proportional to a (the fields' own time scale), so step count grows only
// logarithmically in 1/a_stop.  On grids, frame derivatives carry chart
// factors ~ 1/(h_eta h_xi) in the rows nearest the coordinate axes, which
// would force dt ~ h^2; after each stage the angular Fourier content of every
// field is capped per eta-row at the equal-physical-resolution mode count
// (~ n_xi2 sin eta and ~ n_xi1 cos eta), restoring a dt ~ h stability bound
// without touching resolved scales.

namespace crunch {

// Time derivative of every evolved field, same layout as RescaledState.
struct StateDeriv {
  std::vector<Mat3> dG, dGinv, dKhat;
  std::vector<double> dPsi;
  std::vector<Vec3> dPhi;
};

// Byproducts of one right-hand-side evaluation worth surfacing to callers:
// the lapse deviation actually used and, for grids, the elliptic solve stats.
struct RhsInfo {
  std::vector<double> psi;
  double psi_sup = 0.0;
  LapseStats lapse;
};

StateDeriv rhs_rescaled(const RescaledState& state, const FlrwBackground& bg,
                        const LapseOptions& lapse_opt = {},
                        RhsInfo* info = nullptr);

// One RK4 step of size dt (negative dt steps backward).  The returned state
// is trace-projected, symmetrized and, on grids, angularly filtered; `info`
// receives the first-stage lapse data (the lapse of `state` itself).
RescaledState step_rk4(const RescaledState& state, double dt,
                       const FlrwBackground& bg,
                       const LapseOptions& lapse_opt = {},
                       RhsInfo* info = nullptr);

// Initial-data recipe: a diagonal log-scale deformation of the round metric,
// a traceless curvature seed, then Psi from the Hamiltonian constraint
// (pointwise, exact at the discrete level) and optionally Phi from the
// momentum constraint via the fixed point Phi = -(div Khat)/(sqrt(2/3)+Psi).
// All-zero amplitudes reproduce the background state exactly.
struct PerturbationSpec {
  double kappa = 0.0;        // Khat seed diag(kappa, -kappa, 0)
  double kappa_cross = 0.0;  // symmetric off-diagonal seed in the 12 slot
  std::array<double, 3> g_log_diag{0.0, 0.0, 0.0};  // G = diag(exp(...))
  // Grid only: modulates the diagonal exponents by the lowest nonconstant
  // S^3 harmonic, amplitude * (y0 y2 + y1 y3)/9 * (1, -1, 0) pattern.
  double spatial_amplitude = 0.0;
  bool momentum_phi = false;  // solve Phi from the momentum constraint
};

RescaledState make_initial_data(const PerturbationSpec& spec,
                                const FlrwBackground& bg, double t0);
RescaledState make_initial_data(const PerturbationSpec& spec,
                                const FlrwBackground& bg, double t0,
                                const HopfGrid& grid);

enum class EvolveMode { Homogeneous, Grid };

struct EvolveConfig {
  EvolveMode mode = EvolveMode::Homogeneous;
  double dt_scale = 1e-3;  // homogeneous: dt = dt_scale * a
  double cfl = 0.4;        // grid: dt = cfl * a * min chart spacing
  double a_stop = 1e-3;    // stop once a(t) falls to this value
  double constraint_ceiling = 1.0;   // sup |ham| above this -> error
  double ginv_drift_tol = 1e-10;     // re-invert G when ||G Ginv - Id|| exceeds
  int store_every = 0;     // full states every k steps (0 = final only)
  int max_steps = 50'000'000;
  LapseOptions lapse;
  // Called on every recorded row (e.g. to append energy functionals) without
  // making this module depend on their definitions.
  std::function<void(const RescaledState&, struct StepRow&)> observer;
};

// Per-step scalar diagnostics, recorded at the step's *starting* time, plus
// one closing row at the final time.
struct StepRow {
  double t = 0.0, a = 0.0, dt = 0.0;
  double ham_sup = 0.0, ham_l2 = 0.0, mom_sup = 0.0, mom_l2 = 0.0;
  double psi_sup = 0.0;       // sup |psi| of the lapse solve at this time
  double khat_sup = 0.0;      // sup |Khat|_G
  double Psi_sup = 0.0;
  double det_dev = 0.0;       // sup |det G - 1| (log-volume drift monitor)
  double ginv_drift = 0.0;    // sup ||G Ginv - Id|| before any re-inversion
  int lapse_iterations = 0;
  double lapse_residual = 0.0;
  double f_min = 0.0;         // lapse zeroth-order coefficient minimum
  // Slots filled by the observer hook; zero otherwise.
  double aux1 = 0.0, aux2 = 0.0, aux3 = 0.0;
};

struct Trajectory {
  std::vector<StepRow> rows;
  std::vector<RescaledState> states;  // store_every cadence plus final state
  bool reached_a_stop = false;
  std::string stop_reason;  // "a_stop" or "max_steps"
};

// Advances `initial` until a(t) <= a_stop (or max_steps), recording one row
// per step.  Throws InvariantViolation if positive-definiteness fails or the
// Hamiltonian residual exceeds the configured ceiling, ConfigError for
// mode/state mismatches or a_stop below the background floor.
Trajectory evolve(const EvolveConfig& cfg, const FlrwBackground& bg,
                  const RescaledState& initial);

}  // namespace crunch
