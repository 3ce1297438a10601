#pragma once

#include <vector>

#include "crunch/flrw.hpp"
#include "crunch/state.hpp"

// Elliptic equation for the rescaled lapse deviation psi.  Two equivalent
// formulations are carried:
//   High: a^{8/3} Lap_G psi - a^{4/3} f    psi = 2 sqrt(2/3) Psi + |Khat|_G^2
//                                                + Psi^2
//   Low:  a^{4/3} Lap_G psi -         ftil psi = (R[G] - 2/3) - |Phi|_G^2
// with the scalar coefficients
//   f    = a'^2 + (2/3) a^{4/3} + |Khat|_G^2 + 2 sqrt(2/3) Psi + Psi^2
//   ftil = a'^2 + (2/3) a^{4/3} + a^{4/3}(R[G] - 2/3) - a^{4/3}|Phi|_G^2.
// They agree exactly on solutions of the Hamiltonian constraint; High needs
// no curvature evaluation and drives the evolution, Low serves as a
// cross-check and feeds the maximum-principle bound.  On the background both
// coefficients reduce to 1 - a^{4/3}/3, which stays inside [2/3, 1].
//
// The grid solve runs conjugate gradients on the flux-form discretization of
// -a^{8/3} div(sqrt(det) Gc^-1 grad .) + mass, which is symmetric positive
// definite in the metric cell volumes (f > 0 away from the floor).  The
// default preconditioner inverts the round-metric, averaged-coefficient
// operator exactly via Fourier transforms in the two periodic angles and
// tridiagonal solves across eta; it requires power-of-two angular sizes and
// otherwise falls back to the diagonal of the operator.

namespace crunch {

enum class LapseForm { High, Low };

struct LapseOptions {
  double tol = 1e-10;           // relative residual target
  int max_iter = 5000;          // conjugate-gradient budget
  double f_floor = 1e-8;        // DegenerateCoefficient below this
  bool use_fft_preconditioner = true;
};

struct LapseStats {
  int iterations = 0;
  double final_residual = 0.0;  // relative, at exit
  double f_min = 0.0, f_max = 0.0;
  bool preconditioned_fft = false;
};

// f (High) or ftil (Low) per node; works for homogeneous and grid states.
std::vector<double> lapse_coefficient(const RescaledState& state,
                                      const FlrwBackground& bg,
                                      LapseForm form);

// Right-hand side of the chosen formulation per node.
std::vector<double> lapse_rhs(const RescaledState& state,
                              const FlrwBackground& bg, LapseForm form);

// Homogeneous closed form psi = -rhs_high / (a^{4/3} f).  Throws ConfigError
// on grid states and DegenerateCoefficient when f <= f_floor.
double solve_lapse_homogeneous(const RescaledState& state,
                               const FlrwBackground& bg,
                               double f_floor = 1e-8);

// Discrete action of the chosen operator on a grid scalar (flux-form
// principal part divided by the cell volumes, so constants are annihilated
// up to the zeroth-order term).
std::vector<double> apply_lapse_operator(const RescaledState& state,
                                         const FlrwBackground& bg,
                                         LapseForm form,
                                         const std::vector<double>& u);

// Nodal cell volumes of the G-metric used by the elliptic assembly; the
// operator is self-adjoint w.r.t. these weights.
std::vector<double> lapse_cell_volumes(const RescaledState& state);

// Grid solve of the chosen formulation with its own right-hand side.
// Throws ConfigError on homogeneous states, DegenerateCoefficient when the
// coefficient touches the floor, NonConvergence when the iteration budget
// ends above tol.
std::vector<double> solve_lapse_elliptic(const RescaledState& state,
                                         const FlrwBackground& bg,
                                         LapseForm form,
                                         const LapseOptions& opt = {},
                                         LapseStats* stats = nullptr);

// Same solver with a caller-supplied right-hand side (manufactured
// solutions, linearity checks).
std::vector<double> solve_lapse_with_rhs(const RescaledState& state,
                                         const FlrwBackground& bg,
                                         LapseForm form,
                                         const std::vector<double>& rhs,
                                         const LapseOptions& opt = {},
                                         LapseStats* stats = nullptr);

// Sup-norm bound check sup|psi| <= (1/min f + margin) sup|rhs| for the
// first-order-scaled problem (pass the Low right-hand side with ftil, or
// rhs_high/a^{4/3} with f).  On the background the constant is 3/2.
struct MaxPrincipleReport {
  double sup_psi = 0.0;
  double sup_rhs = 0.0;
  double f_min = 0.0;
  double bound_constant = 0.0;  // 1/f_min + margin (infinite if f_min <= 0)
  double bound = 0.0;
  bool satisfied = false;
};

MaxPrincipleReport maximum_principle_check(const std::vector<double>& psi,
                                           const std::vector<double>& rhs,
                                           const std::vector<double>& f_tilde,
                                           double margin = 0.0);

}  // namespace crunch
