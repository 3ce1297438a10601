#pragma once

#include <array>
#include <vector>

#include "crunch/evolve.hpp"
#include "crunch/flrw.hpp"
#include "crunch/state.hpp"
#include "crunch/tensor.hpp"

// Read-only diagnostics computed from states and trajectories.
//
// The central object is the order-1 slice energy built from the three frame
// Lie derivatives of the rescaled fields,
//
//   E_metric = sum_A  || L_{Z_A} Khat ||^2_{L2_G}
//                    + (1/4) a^{4/3} || nabla L_{Z_A} G ||^2_{L2_G},
//   E_scalar = sum_A  || Z_A Psi ||^2_{L2_G} + a^{4/3} || L_{Z_A} Phi ||^2_{L2_G},
//   E_total  = lambda_star * E_metric + E_scalar,
//
// where L2_G integrates against the evolving volume form (sqrt(det G) times
// the round measure).  Each energy has an associated spacetime current whose
// divergence identity packages the integration-by-parts structure of the
// estimates; divergence_identity_residual audits that identity numerically on
// a centered triple of slices.  The remaining entry points extract the
// blowup/limit structure of collapsing runs: the pointwise spacetime
// curvature scalar and its growth exponent, the limits of a*k and a*d_t(phi)
// by extrapolation in a^{4/3}, an affine-length bound for observers reaching
// the collapse, and an envelope monitor for approximate energy monotonicity.

namespace crunch {

// Slice energies of order 0 or 1 plus the constraint residual norms of the
// same state.  Order 0 carries constraint norms only (all energies zero by
// convention).  divergence_residual is a slot for callers that also run the
// three-slice audit; energies() itself leaves it zero.
struct EnergyReport {
  int order = 0;
  double lambda_star = 0.0;
  double metric = 0.0;
  double scalar = 0.0;
  double total = 0.0;
  double ham_sup = 0.0, ham_l2 = 0.0;
  double mom_sup = 0.0, mom_l2 = 0.0;
  double divergence_residual = 0.0;
};

// Throws ConfigError unless order is 0 or 1 (higher orders are out of scope)
// or lambda_star <= 0.  Works for homogeneous and gridded states alike.
EnergyReport energies(const RescaledState& s, const FlrwBackground& bg,
                      int order, double lambda_star = 0.1);

// Least-squares slope of log(y) against log(x); the shared backbone of every
// fitted exponent below.  Throws ConfigError on size mismatch, fewer than two
// samples, or nonpositive entries.
double log_log_slope(const std::vector<double>& x,
                     const std::vector<double>& y);

// Which energy current the three-slice audit evaluates.
enum class CurrentKind { Metric, ScalarField };

// Test hook for the audit: scale one commuted error term by `scale`.  Indices
// 0..6 select the metric-current terms (the two quadratic remainders in
// L Khat, the two in nabla L G, and the gradient / lowered-divergence /
// raised-divergence couplings); index 0 is the single scalar-field term.  A
// negative index disables the hook.
struct CurrentTweaks {
  int term_index = -1;
  double scale = 1.0;
};

// Relative residual of the divergence identity for the |I| = 1 currents on a
// centered (non-uniformly spaced) triple of homogeneous slices: the time
// derivative of the slice integral of J^0 is compared against the slice
// integral of the exact divergence expression evaluated on the middle slice.
// Both sides vanish on the homogeneous background; the guarded residual is 0
// there.  Throws ConfigError for gridded states or non-increasing times.
double divergence_identity_residual(const RescaledState& prev,
                                    const RescaledState& mid,
                                    const RescaledState& next,
                                    const FlrwBackground& bg, CurrentKind which,
                                    const CurrentTweaks& tweaks = {});

// Rescaled spacetime curvature scalar a^4 * (quadratic Ricci invariant), per
// node:  ((sqrt(2/3) + Psi)^2 - a^{4/3} |Phi|^2_G)^2.  Equals 4/9 identically
// on the background and tends to psi_limit^4 at the collapse.
std::vector<double> curvature_invariant(const RescaledState& s,
                                        const FlrwBackground& bg);

// Fitted log-log growth exponent of the un-rescaled invariant (slice sup of
// a^{-4} * curvature_invariant) against a over the stored tail of a
// trajectory; -4 for a clean collapse.  Uses states with a <= a_window.
double blowup_exponent(const Trajectory& traj, const FlrwBackground& bg,
                       double a_window = 0.05);

// Limits at the collapse of a*k (trace part restored, mixed indices) and of
// a*d_t(phi) = (1 + a^{4/3} psi)(sqrt(2/3) + Psi), extracted from the stored
// tail (a <= 1e-2) by one-step Richardson extrapolation in a^{4/3}.
struct CrunchLimits {
  Mat3 k_limit{};               // limit of Khat - (a'/3) Id
  double psi_limit = 0.0;       // limit of n * (sqrt(2/3) + Psi)
  double k_trace = 0.0;         // trace of k_limit; +1 in this gauge
  double closure_residual = 0.0;  // |psi_limit^2 + tr(k_limit^2) - 1|
  double extrapolation_error = 0.0;  // spread between two Richardson windows
  double rate_k = 0.0;    // fitted decay exponent of ||a k - k_limit|| in a
  double rate_psi = 0.0;  // same for the scalar-field track; 4/3 expected
};

// Throws InsufficientTail when fewer than eight stored states reach
// a <= 1e-2 (or the tail spans less than a factor 4 in a), ConfigError for
// gridded trajectories.
CrunchLimits crunch_limits(const Trajectory& traj, const FlrwBackground& bg);

// Upper bound on the affine length of a future-directed causal observer
// reaching the collapse: the nested exponential integral
//
//   value = integral_0^{t_crunch} exp( (1/3 + growth_coeff)
//                                      integral_0^tau a(s)^{-1} ds ) dtau,
//
// evaluated by quadrature in scale-factor variables with the endpoint
// singularities removed by substitution.  The integrand grows like
// (t_crunch - tau)^(-1/3 - growth_coeff), so the bound is finite for
// growth_coeff < 2/3 and flagged marginal (value = infinity) at or beyond.
struct AffineBound {
  double value = 0.0;
  double tail_exponent = 0.0;  // fitted; -1/3 - growth_coeff expected
  bool marginal = false;
};

AffineBound geodesic_affine_bound(const FlrwBackground& bg,
                                  double growth_coeff);

// Envelope monitor for approximate energy monotonicity along a trajectory
// with stored states: the fitted exponent c in
// E^{1/2}(t) <= C E^{1/2}(0) a^{-c}, the sup of E^{1/2}, and the accumulated
// |a'|-weighted damping integrals that the divergence identities produce with
// a good sign (order: |a'| a^{1/3} ||nabla L G||^2, |a'| a^{1/3} ||L Phi||^2,
// |a'| a^3 ||nabla Z psi||^2, |a'|^3 a^{5/3} ||Z psi||^2; the last two vanish
// identically on homogeneous runs).
struct MonotonicityReport {
  bool defined = false;  // false when the initial energy vanishes
  double exponent = 0.0;
  double initial_sqrt = 0.0;
  double sup_sqrt = 0.0;
  std::array<double, 4> damping_integrals{};
};

MonotonicityReport energy_monotonicity_monitor(const Trajectory& traj,
                                               const FlrwBackground& bg,
                                               double lambda_star = 0.1);

}  // namespace crunch
