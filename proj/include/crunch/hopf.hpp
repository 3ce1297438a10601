#pragma once

#include <array>
#include <cstddef>
#include <vector>

// Hopf-style chart on the radius-3 sphere:
//   y = 3 (cos eta cos xi1, cos eta sin xi1, sin eta cos xi2, sin eta sin xi2)
// with eta in [0, pi/2] and 2pi-periodic xi1, xi2.  The round metric is
// 9 (d eta^2 + cos^2 eta d xi1^2 + sin^2 eta d xi2^2).  Grid nodes are offset
// in eta so the axis degeneracies at eta = 0, pi/2 are never sampled; values
// beyond the boundary rows follow from continuing straight through the axes:
//   f(-eta, xi1, xi2)      = f(eta, xi1, xi2 + pi)
//   f(pi/2 + eta, xi1, xi2) = f(pi/2 - eta, xi1 + pi, xi2)
// Frame components of tensors relative to Z_(A) are global scalars on S^3,
// so every field ghosts componentwise with the same two rules.

namespace crunch {

struct HopfGrid {
  int n_eta = 0, n_xi1 = 0, n_xi2 = 0;
  int fd_order = 2;  // centered stencils; 2, 4 or 6
  double h_eta = 0, h_xi1 = 0, h_xi2 = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n_eta) * n_xi1 * n_xi2;
  }
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_xi1 + j) * n_xi2 + k;
  }
  double eta(int i) const { return (i + 0.5) * h_eta; }
  double xi1(int j) const { return j * h_xi1; }
  double xi2(int k) const { return k * h_xi2; }
};

using ScalarField = std::vector<double>;

// Throws ConfigError unless n_xi1, n_xi2 are even (the axis continuations
// shift them by half a period), sizes suffice for the stencil depth, and
// fd_order is one of 2, 4, 6.
HopfGrid make_hopf_grid(int n_eta, int n_xi1, int n_xi2, int fd_order = 2);

// Chart map onto the embedded sphere; throws OutOfDomain for eta outside
// [0, pi/2].
std::array<double, 4> embed(double eta, double xi1, double xi2);

// Ambient components of the frame fields, linear in y:
//   Z_1 -> (1/3)(-y2,  y1, -y4,  y3)
//   Z_2 -> (1/3)(-y4, -y3,  y2,  y1)
//   Z_3 -> (1/3)(-y3,  y4,  y1, -y2)
std::array<double, 4> frame_vector(int a, const std::array<double, 4>& y);

// Chart coefficients of Z_a at a point: Z_a = c[0] d_eta + c[1] d_xi1
// + c[2] d_xi2.
std::array<double, 3> frame_chart_coefficients(int a, double eta, double xi1,
                                               double xi2);

// Field value with the axis continuation applied to out-of-range i and
// periodic wrapping in j, k.
double ghost_value(const HopfGrid& g, const ScalarField& f, int i, int j,
                   int k);

// Flat index of the real node holding the ghost value at (i, j, k); the
// resolution is a permutation, which makes transposes of ghosted stencil
// operators implementable as scatters.
std::size_t ghost_index(const HopfGrid& g, int i, int j, int k);

// Discrete Z_a derivative at every node, centered differences of the grid's
// fd_order.  Throws PoleRegularityViolation if the field visibly breaks the
// axis continuation (values at the first/last eta row differing across the
// axis far beyond the field's own eta variation).
ScalarField apply_Z(const HopfGrid& g, int a, const ScalarField& f);

// max axis mismatch divided by the field's largest eta-neighbor difference
double pole_regularity_ratio(const HopfGrid& g, const ScalarField& f);

// Integral over S^3 against the round volume form (27 cos eta sin eta
// d eta d xi1 d xi2).  Each eta row is weighted with the exact cell measure
// (27/2)(sin^2 eta_+ - sin^2 eta_-), so fields constant in eta integrate
// exactly (in particular, the integral of 1 is 54 pi^2 to machine
// precision); general smooth fields integrate at second order in h_eta.
double integrate_round(const HopfGrid& g, const ScalarField& f);

// Tensor-product Lagrange interpolation (6-point per axis) with ghost
// continuation; used for transfers between grid resolutions.
double sample_field(const HopfGrid& g, const ScalarField& f, double eta,
                    double xi1, double xi2);

}  // namespace crunch
