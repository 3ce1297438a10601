#pragma once

#include <string>
#include <vector>

#include "crunch/flrw.hpp"
#include "crunch/frame.hpp"
#include "crunch/hopf.hpp"
#include "crunch/tensor.hpp"

// Solution variables in the crunch-adapted rescaling.  Relative to a
// background scale factor a(t):
//   G   = a^{-2/3} g          spatial metric, frame components (0,2)
//   Khat = a * (trace-free part of k)   mixed components (1,1)
//   psi = a^{-4/3} (n - 1)    lapse deviation
//   Psi = n^{-1} a d_t phi - sqrt(2/3)   time-scalar deviation
//   Phi = spatial gradient of phi        (0,1)
// The background itself sits at (G, Khat, psi, Psi, Phi) = (delta, 0, 0, 0, 0).
// Fields live either on a HopfGrid (one entry per node) or, for spatially
// homogeneous states, as a single entry.

namespace crunch {

inline constexpr double kSqrt23 = 0.8164965809277260;  // sqrt(2/3)
inline constexpr double kVolRound3 = 532.9586376588254;  // 54 pi^2

struct RescaledState {
  double t = 0.0;
  bool homogeneous = true;
  HopfGrid grid;  // ignored when homogeneous
  std::vector<Mat3> G, Ginv, Khat;
  std::vector<double> psi, Psi;
  std::vector<Vec3> Phi;

  std::size_t npoints() const { return homogeneous ? 1 : grid.size(); }
};

struct PhysicalState {
  double t = 0.0;
  bool homogeneous = true;
  HopfGrid grid;
  std::vector<Mat3> g, ginv, k;  // k mixed (1,1), full trace included
  std::vector<double> lapse, dt_phi;
  std::vector<Vec3> grad_phi;

  std::size_t npoints() const { return homogeneous ? 1 : grid.size(); }
};

// Z-derivatives of every state field, all zero for homogeneous states.
// Index conventions follow frame.hpp: first index is the derivative label.
struct SliceDerivs {
  std::vector<Ten3> zG;    // [A][B][C] = Z_A G_BC
  std::vector<Ten4> zzG;   // [E][A][B][C] = Z_E Z_A G_BC
  std::vector<Ten3> zK;    // [A][B][C] = Z_A Khat^B_C
  std::vector<Vec3> zpsi;
  std::vector<Mat3> zzpsi;  // [A][B] = Z_A Z_B psi
  std::vector<Vec3> zPsi;
  std::vector<Mat3> zPhi;  // [A][B] = Z_A Phi_B
};

struct ConstraintResiduals {
  std::vector<double> hamiltonian;
  std::vector<Vec3> momentum;  // measured per point, (0,1) components
  double ham_sup = 0.0, ham_l2 = 0.0;  // L2 w.r.t. the G-volume
  double mom_sup = 0.0, mom_l2 = 0.0;  // pointwise |.|_G norms
};

// Homogeneous state at the background fixed point.
RescaledState make_flrw_state(double t);

// Physical-variable FLRW slice (g = a^{2/3} delta, k = -(H/3) Id, n = 1,
// d_t phi = sqrt(2/3)/a); useful as a reference in tests.
PhysicalState make_flrw_physical(const FlrwBackground& bg, double t);

// Exact algebraic maps between the variable sets.  Throw DegenerateScale when
// a(t) <= a_floor (default matches the background's integration floor).
RescaledState rescale(const PhysicalState& phys, const FlrwBackground& bg);
PhysicalState unrescale(const RescaledState& state, const FlrwBackground& bg);

// Structural invariants: G symmetric positive definite with smallest
// eigenvalue above eig_floor (SingularMetric otherwise), G*Ginv = Id to
// 1e-12 and tr Khat = 0 to 1e-12 per point (InvariantViolation otherwise),
// field sizes consistent (ConfigError).
void validate_state(const RescaledState& state, double eig_floor = 1e-12);

// Z-derivatives of all fields by finite differences (zeros if homogeneous).
SliceDerivs compute_slice_derivs(const RescaledState& state);

// Lie derivatives along Z_a of whole fields (FD part plus structure-constant
// corrections); scalars reduce to apply_Z.
std::vector<double> lie_z_scalar(const RescaledState& state, int a,
                                 const std::vector<double>& f);
std::vector<Vec3> lie_z_vec(const RescaledState& state, int a,
                            const std::vector<Vec3>& f);
std::vector<Mat3> lie_z_mat(const RescaledState& state, int a,
                            const std::vector<Mat3>& f);

// Residuals of the rescaled constraints:
//   hamiltonian: a^{4/3}(R[G] - 2/3) - |Khat|_G^2 - 2 sqrt(2/3) Psi - Psi^2
//                - a^{4/3} |Phi|_G^2
//   momentum:    div Khat + sqrt(2/3) Phi + Psi Phi
// Both vanish on exact solutions.
ConstraintResiduals constraint_residuals(const RescaledState& state,
                                         const FlrwBackground& bg);

// Solves the Hamiltonian constraint pointwise for Psi on the branch that
// vanishes with C := a^{4/3}(R - 2/3) - |Khat|_G^2 - a^{4/3}|Phi|_G^2,
// namely Psi = sqrt(2/3 + C) - sqrt(2/3).  The state's own Psi entries are
// ignored.  Throws ConstraintInfeasible where 2/3 + C < 0.
std::vector<double> solve_hamiltonian_for_Psi(const RescaledState& state,
                                              const FlrwBackground& bg);

// Deviation norm of the state from the background fixed point, truncated at
// derivative order M <= 2.  Built from Lie-Z strings measured in the round
// metric: full H^M norms of Khat, G - delta, Ginv - delta, Psi and
// a^{2/3} Phi, banded pure-derivative seminorms of G (orders 1..M+1) and of
// psi with a^{2L/3} weights, lower-order full norms of psi and Phi, plus the
// corresponding sup norms two orders down.  Zero exactly at the fixed point
// and monotone in M.
double high_norm_truncated(const RescaledState& state, int M, double a);

// Checkpoint: JSON header (schema tag, time, flags, grid shape) plus one flat
// array per node in the fixed component order
// G11,G12,G13,G22,G23,G33, Khat11..Khat33 (row major), psi, Psi, Phi1..Phi3.
void save_state(const RescaledState& state, const std::string& path);
RescaledState load_state(const std::string& path);

}  // namespace crunch
