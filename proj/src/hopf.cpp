#include "crunch/hopf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crunch/error.hpp"

namespace crunch {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Antisymmetric-pair coefficients for centered first derivatives:
// D f = sum_m c[m-1] (f_{+m} - f_{-m}) / h.
const double* stencil_coefficients(int fd_order) {
  static const double c2[] = {0.5};
  static const double c4[] = {2.0 / 3.0, -1.0 / 12.0};
  static const double c6[] = {0.75, -0.15, 1.0 / 60.0};
  switch (fd_order) {
    case 2:
      return c2;
    case 4:
      return c4;
    case 6:
      return c6;
    default:
      return nullptr;
  }
}

int wrap(int j, int n) {
  j %= n;
  return j < 0 ? j + n : j;
}

void check_frame_index(int a) {
  if (a < 0 || a > 2)
    throw Error(ErrKind::OutOfDomain,
                "frame index must be 0, 1 or 2, got " + std::to_string(a));
}

}  // namespace

HopfGrid make_hopf_grid(int n_eta, int n_xi1, int n_xi2, int fd_order) {
  if (stencil_coefficients(fd_order) == nullptr)
    throw Error(ErrKind::ConfigError, "fd_order must be 2, 4 or 6, got " +
                                          std::to_string(fd_order));
  const int depth = fd_order / 2;
  if (n_eta < depth)
    throw Error(ErrKind::ConfigError,
                "n_eta = " + std::to_string(n_eta) +
                    " is smaller than the stencil depth " +
                    std::to_string(depth));
  if (n_xi1 < 2 * depth || n_xi2 < 2 * depth || n_xi1 % 2 || n_xi2 % 2)
    throw Error(ErrKind::ConfigError,
                "n_xi1 and n_xi2 must be even and at least twice the stencil "
                "depth, got " +
                    std::to_string(n_xi1) + ", " + std::to_string(n_xi2));
  HopfGrid g;
  g.n_eta = n_eta;
  g.n_xi1 = n_xi1;
  g.n_xi2 = n_xi2;
  g.fd_order = fd_order;
  g.h_eta = 0.5 * kPi / n_eta;
  g.h_xi1 = 2.0 * kPi / n_xi1;
  g.h_xi2 = 2.0 * kPi / n_xi2;
  return g;
}

std::array<double, 4> embed(double eta, double xi1, double xi2) {
  if (!(eta >= 0.0 && eta <= 0.5 * kPi))
    throw Error(ErrKind::OutOfDomain,
                "eta = " + std::to_string(eta) + " outside [0, pi/2]");
  const double ce = std::cos(eta), se = std::sin(eta);
  return {3.0 * ce * std::cos(xi1), 3.0 * ce * std::sin(xi1),
          3.0 * se * std::cos(xi2), 3.0 * se * std::sin(xi2)};
}

std::array<double, 4> frame_vector(int a, const std::array<double, 4>& y) {
  check_frame_index(a);
  constexpr double third = 1.0 / 3.0;
  switch (a) {
    case 0:
      return {-third * y[1], third * y[0], -third * y[3], third * y[2]};
    case 1:
      return {-third * y[3], -third * y[2], third * y[1], third * y[0]};
    default:
      return {-third * y[2], third * y[3], third * y[0], -third * y[1]};
  }
}

std::array<double, 3> frame_chart_coefficients(int a, double eta, double xi1,
                                               double xi2) {
  check_frame_index(a);
  constexpr double third = 1.0 / 3.0;
  if (a == 0) return {0.0, third, third};
  const double s = std::sin(xi1 + xi2), c = std::cos(xi1 + xi2);
  const double tn = std::tan(eta), ct = 1.0 / tn;
  if (a == 1) return {third * s, -third * tn * c, third * ct * c};
  return {third * c, third * tn * s, -third * ct * s};
}

std::size_t ghost_index(const HopfGrid& g, int i, int j, int k) {
  // Reflections at the axes can compose, so resolve iteratively; each pass
  // moves i strictly closer to [0, n_eta).
  while (i < 0 || i >= g.n_eta) {
    if (i < 0) {
      i = -1 - i;
      k += g.n_xi2 / 2;
    } else {
      i = 2 * g.n_eta - 1 - i;
      j += g.n_xi1 / 2;
    }
  }
  return g.idx(i, wrap(j, g.n_xi1), wrap(k, g.n_xi2));
}

double ghost_value(const HopfGrid& g, const ScalarField& f, int i, int j,
                   int k) {
  return f[ghost_index(g, i, j, k)];
}

double pole_regularity_ratio(const HopfGrid& g, const ScalarField& f) {
  // A field regular at the axes differs across them by no more than its own
  // eta variation (both are one step of the smooth continuation); a field
  // carrying the degenerate angle at the axis has an O(1) jump there.
  double mismatch = 0.0;
  const int s1 = g.n_xi1 / 2, s2 = g.n_xi2 / 2;
  for (int j = 0; j < g.n_xi1; ++j)
    for (int k = 0; k < g.n_xi2; ++k) {
      mismatch = std::max(
          mismatch, std::abs(f[g.idx(0, j, k)] -
                             f[g.idx(0, j, (k + s2) % g.n_xi2)]));
      mismatch = std::max(
          mismatch, std::abs(f[g.idx(g.n_eta - 1, j, k)] -
                             f[g.idx(g.n_eta - 1, (j + s1) % g.n_xi1, k)]));
    }
  double eta_step = 0.0;
  for (int i = 0; i + 1 < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k)
        eta_step = std::max(eta_step, std::abs(f[g.idx(i + 1, j, k)] -
                                               f[g.idx(i, j, k)]));
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  return mismatch / (eta_step + 1e-9 * scale + 1e-300);
}

ScalarField apply_Z(const HopfGrid& g, int a, const ScalarField& f) {
  check_frame_index(a);
  if (f.size() != g.size())
    throw Error(ErrKind::ConfigError, "field size does not match grid");
  if (pole_regularity_ratio(g, f) > 20.0)
    throw Error(ErrKind::PoleRegularityViolation,
                "field jumps across a chart axis far beyond its eta "
                "variation; it cannot descend from a smooth function on S^3");

  const double* c = stencil_coefficients(g.fd_order);
  const int depth = g.fd_order / 2;
  ScalarField out(g.size());
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) {
        const auto cf =
            frame_chart_coefficients(a, g.eta(i), g.xi1(j), g.xi2(k));
        double de = 0.0, d1 = 0.0, d2 = 0.0;
        for (int m = 1; m <= depth; ++m) {
          const double w = c[m - 1];
          if (cf[0] != 0.0)
            de += w * (ghost_value(g, f, i + m, j, k) -
                       ghost_value(g, f, i - m, j, k));
          d1 += w * (f[g.idx(i, wrap(j + m, g.n_xi1), k)] -
                     f[g.idx(i, wrap(j - m, g.n_xi1), k)]);
          d2 += w * (f[g.idx(i, j, wrap(k + m, g.n_xi2))] -
                     f[g.idx(i, j, wrap(k - m, g.n_xi2))]);
        }
        out[g.idx(i, j, k)] = cf[0] * de / g.h_eta + cf[1] * d1 / g.h_xi1 +
                              cf[2] * d2 / g.h_xi2;
      }
  return out;
}

double integrate_round(const HopfGrid& g, const ScalarField& f) {
  if (f.size() != g.size())
    throw Error(ErrKind::ConfigError, "field size does not match grid");
  double total = 0.0;
  for (int i = 0; i < g.n_eta; ++i) {
    const double s_lo = std::sin(i * g.h_eta);
    const double s_hi = std::sin((i + 1) * g.h_eta);
    const double w = 13.5 * (s_hi * s_hi - s_lo * s_lo);
    double row = 0.0;
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) row += f[g.idx(i, j, k)];
    total += w * row;
  }
  return total * g.h_xi1 * g.h_xi2;
}

namespace {

// Nodes are u = base, ..., base+5 in index units; returns barycentric-free
// Lagrange weights for the query point.
std::array<double, 6> lagrange_weights(double u, int base) {
  std::array<double, 6> w;
  for (int p = 0; p < 6; ++p) {
    double num = 1.0, den = 1.0;
    for (int q = 0; q < 6; ++q) {
      if (q == p) continue;
      num *= u - (base + q);
      den *= static_cast<double>(p - q);
    }
    w[p] = num / den;
  }
  return w;
}

}  // namespace

double sample_field(const HopfGrid& g, const ScalarField& f, double eta,
                    double xi1, double xi2) {
  if (f.size() != g.size())
    throw Error(ErrKind::ConfigError, "field size does not match grid");
  const double ue = eta / g.h_eta - 0.5;
  const double u1 = xi1 / g.h_xi1;
  const double u2 = xi2 / g.h_xi2;
  const int be = static_cast<int>(std::floor(ue)) - 2;
  const int b1 = static_cast<int>(std::floor(u1)) - 2;
  const int b2 = static_cast<int>(std::floor(u2)) - 2;
  const auto we = lagrange_weights(ue, be);
  const auto w1 = lagrange_weights(u1, b1);
  const auto w2 = lagrange_weights(u2, b2);
  double v = 0.0;
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q) {
      if (we[p] * w1[q] == 0.0) continue;
      double inner = 0.0;
      for (int r = 0; r < 6; ++r)
        inner += w2[r] * ghost_value(g, f, be + p, b1 + q, b2 + r);
      v += we[p] * w1[q] * inner;
    }
  return v;
}

}  // namespace crunch
