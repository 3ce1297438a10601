#include "crunch/lapse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "crunch/error.hpp"
#include "crunch/fft.hpp"
#include "crunch/frame.hpp"
#include "crunch/hopf.hpp"
#include "crunch/tensor.hpp"

namespace crunch {

namespace {

constexpr double kPi = 3.14159265358979323846;

int wrapi(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}


// R[G] per node (algebraic for homogeneous states, finite differences on
// grids).
std::vector<double> scalar_curvature_field(const RescaledState& s) {
  const std::size_t n = s.npoints();
  std::vector<double> r(n);
  if (s.homogeneous) {
    r[0] = curvature_frame(s.G[0], s.Ginv[0], Ten3{}, Ten4{}).scalar;
    return r;
  }
  const SliceDerivs d = compute_slice_derivs(s);
  for (std::size_t p = 0; p < n; ++p)
    r[p] = curvature_frame(s.G[p], s.Ginv[p], d.zG[p], d.zzG[p]).scalar;
  return r;
}

// Everything fixed during a solve: flux coefficients of the principal part
// in chart coordinates, zeroth-order (mass) coefficients, and the metric
// cell volumes the operator is symmetric against.
struct OperatorData {
  HopfGrid grid;
  std::vector<double> mass;  // coeff * sqrt(det G) * J * cell
  std::vector<double> vol;   // sqrt(det G) * J * cell
  // principal * sqrt(det G) * J * cell * (chart inverse of G); component
  // order 00, 01, 02, 11, 12, 22 with axes (eta, xi1, xi2)
  std::vector<std::array<double, 6>> kk;
  double coeff_mean = 0.0;   // volume-style mean of the mass coefficient
  double sdet_mean = 0.0;    // mean of sqrt(det G)
  double principal = 0.0;
};

OperatorData build_operator(const RescaledState& s, const FlrwSample& sm,
                            LapseForm form,
                            const std::vector<double>& coeff) {
  const HopfGrid& g = s.grid;
  OperatorData d;
  d.grid = g;
  const double a43 = std::pow(sm.a, 4.0 / 3.0);
  d.principal = (form == LapseForm::High) ? a43 * a43 : a43;
  const double cell = g.h_eta * g.h_xi1 * g.h_xi2;
  const std::size_t n = g.size();
  d.mass.resize(n);
  d.vol.resize(n);
  d.kk.resize(n);
  double csum = 0.0, ssum = 0.0;
  for (int i = 0; i < g.n_eta; ++i) {
    const double eta = g.eta(i);
    const double jac = 27.0 * std::sin(eta) * std::cos(eta);
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) {
        const std::size_t p = g.idx(i, j, k);
        const double sdet = std::sqrt(det3(s.G[p]));
        const double w = sdet * jac * cell;
        d.vol[p] = w;
        const double c0 =
            (form == LapseForm::High) ? a43 * coeff[p] : coeff[p];
        d.mass[p] = c0 * w;
        csum += c0 * sdet;
        ssum += sdet;
        // chart components of the inverse metric through the frame
        // coefficients Z_A = c_A^mu d_mu
        std::array<std::array<double, 3>, 3> c;
        for (int a = 0; a < 3; ++a)
          c[a] = frame_chart_coefficients(a, eta, g.xi1(j), g.xi2(k));
        auto gc = [&](int mu, int nu) {
          double v = 0.0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              v += s.Ginv[p][a][b] * c[a][mu] * c[b][nu];
          return v;
        };
        // The eta-eta component is stored without the surface weight
        // 27 sin eta cos eta; fluxes across rows evaluate that weight
        // exactly at the interface.  Averaging it from the nodes instead
        // would misweight the smooth factor by O(h) where the weight slopes
        // steeply, an O(1) pointwise error on the large near-axis terms.
        const double scale = d.principal * w;
        const double scale_eta = d.principal * sdet * cell;
        d.kk[p] = {scale_eta * gc(0, 0), scale * gc(0, 1), scale * gc(0, 2),
                   scale * gc(1, 1), scale * gc(1, 2), scale * gc(2, 2)};
      }
  }
  d.coeff_mean = csum / static_cast<double>(n);
  d.sdet_mean = ssum / static_cast<double>(n);
  return d;
}

// out = (stiffness + mass) u, symmetric w.r.t. the Euclidean inner product.
// Diagonal directions use compact interface fluxes (coefficients averaged
// onto faces, zero flux through the degenerate axes where the surface
// measure vanishes), off-diagonal directions use centered
// difference/transpose pairs, which keeps the assembly exactly symmetric.
void apply_weak(const OperatorData& d, const std::vector<double>& u,
                std::vector<double>& out, std::vector<double>& scratch) {
  const HopfGrid& g = d.grid;
  const std::size_t n = g.size();
  out.resize(n);
  scratch.resize(n);
  for (std::size_t p = 0; p < n; ++p) out[p] = d.mass[p] * u[p];

  const double ih2[3] = {1.0 / (g.h_eta * g.h_eta),
                         1.0 / (g.h_xi1 * g.h_xi1),
                         1.0 / (g.h_xi2 * g.h_xi2)};
  const int diag_comp[3] = {0, 3, 5};

  // eta interfaces between rows i and i+1 only; the axis interfaces at
  // eta = 0, pi/2 carry no area
  for (int i = 0; i + 1 < g.n_eta; ++i) {
    const double eta_face = (i + 1) * g.h_eta;
    const double jac_face = 27.0 * std::sin(eta_face) * std::cos(eta_face);
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) {
        const std::size_t p = g.idx(i, j, k), q = g.idx(i + 1, j, k);
        const double kf = jac_face * 0.5 *
                          (d.kk[p][diag_comp[0]] + d.kk[q][diag_comp[0]]) *
                          ih2[0];
        const double flux = kf * (u[p] - u[q]);
        out[p] += flux;
        out[q] -= flux;
      }
  }
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) {
        const std::size_t p = g.idx(i, j, k);
        const std::size_t q1 = g.idx(i, wrapi(j + 1, g.n_xi1), k);
        const double kf1 =
            0.5 * (d.kk[p][diag_comp[1]] + d.kk[q1][diag_comp[1]]) * ih2[1];
        const double flux1 = kf1 * (u[p] - u[q1]);
        out[p] += flux1;
        out[q1] -= flux1;
        const std::size_t q2 = g.idx(i, j, wrapi(k + 1, g.n_xi2));
        const double kf2 =
            0.5 * (d.kk[p][diag_comp[2]] + d.kk[q2][diag_comp[2]]) * ih2[2];
        const double flux2 = kf2 * (u[p] - u[q2]);
        out[p] += flux2;
        out[q2] -= flux2;
      }

  // cross terms: for each ordered pair (mu, nu), out += D_mu^T kk_{mu nu}
  // D_nu u with depth-1 centered differences
  const int cross_comp[3][3] = {{-1, 1, 2}, {1, -1, 4}, {2, 4, -1}};
  const double ih[3] = {0.5 / g.h_eta, 0.5 / g.h_xi1, 0.5 / g.h_xi2};
  auto gather = [&](int axis, const std::vector<double>& f) {
    for (int i = 0; i < g.n_eta; ++i)
      for (int j = 0; j < g.n_xi1; ++j)
        for (int k = 0; k < g.n_xi2; ++k) {
          const std::size_t p = g.idx(i, j, k);
          double diff = 0.0;
          switch (axis) {
            case 0:
              diff = ghost_value(g, f, i + 1, j, k) -
                     ghost_value(g, f, i - 1, j, k);
              break;
            case 1:
              diff = f[g.idx(i, wrapi(j + 1, g.n_xi1), k)] -
                     f[g.idx(i, wrapi(j - 1, g.n_xi1), k)];
              break;
            default:
              diff = f[g.idx(i, j, wrapi(k + 1, g.n_xi2))] -
                     f[g.idx(i, j, wrapi(k - 1, g.n_xi2))];
          }
          scratch[p] = diff * ih[axis];
        }
  };
  auto scatter = [&](int axis, const std::vector<double>& w) {
    for (int i = 0; i < g.n_eta; ++i)
      for (int j = 0; j < g.n_xi1; ++j)
        for (int k = 0; k < g.n_xi2; ++k) {
          const double c = w[g.idx(i, j, k)] * ih[axis];
          switch (axis) {
            case 0:
              out[ghost_index(g, i + 1, j, k)] += c;
              out[ghost_index(g, i - 1, j, k)] -= c;
              break;
            case 1:
              out[g.idx(i, wrapi(j + 1, g.n_xi1), k)] += c;
              out[g.idx(i, wrapi(j - 1, g.n_xi1), k)] -= c;
              break;
            default:
              out[g.idx(i, j, wrapi(k + 1, g.n_xi2))] += c;
              out[g.idx(i, j, wrapi(k - 1, g.n_xi2))] -= c;
          }
        }
  };
  std::vector<double> weighted(n);
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = 0; nu < 3; ++nu) {
      if (mu == nu) continue;
      bool any = false;
      const int comp = cross_comp[mu][nu];
      for (std::size_t p = 0; p < n && !any; ++p)
        any = d.kk[p][comp] != 0.0;
      if (!any) continue;
      gather(nu, u);
      for (std::size_t p = 0; p < n; ++p) weighted[p] = d.kk[p][comp] * scratch[p];
      scatter(mu, weighted);
    }
}

// Exact inverse of the round-metric, averaged-coefficient operator: Fourier
// modes in the periodic angles decouple into symmetric positive definite
// tridiagonal systems across eta (the compact flux stencil couples only
// neighboring rows and the axis fluxes vanish).
struct FftPreconditioner {
  HopfGrid grid;
  std::vector<double> piv;  // [mode][i] pivots of the LDL^T factorizations
  std::vector<double> low;  // [mode][i] subdiagonal multipliers
  mutable std::vector<std::complex<double>> buf;

  void build(const OperatorData& d) {
    const HopfGrid& g = d.grid;
    grid = g;
    const int n1 = g.n_xi1, n2 = g.n_xi2, ne = g.n_eta;
    const double cell = g.h_eta * g.h_xi1 * g.h_xi2;
    std::vector<double> k1(ne), k2(ne), m(ne), kf(ne + 1, 0.0);
    for (int i = 0; i < ne; ++i) {
      const double eta = g.eta(i);
      const double jac = 27.0 * std::sin(eta) * std::cos(eta);
      const double base = d.principal * d.sdet_mean * jac * cell / 9.0;
      k1[i] = base / (std::cos(eta) * std::cos(eta)) / (g.h_xi1 * g.h_xi1);
      k2[i] = base / (std::sin(eta) * std::sin(eta)) / (g.h_xi2 * g.h_xi2);
      m[i] = d.coeff_mean * jac * cell;
    }
    for (int i = 0; i + 1 < ne; ++i) {
      const double eta_face = (i + 1) * g.h_eta;
      kf[i + 1] = d.principal * d.sdet_mean * 27.0 * std::sin(eta_face) *
                  std::cos(eta_face) * cell / 9.0 / (g.h_eta * g.h_eta);
    }
    piv.assign(static_cast<std::size_t>(n1) * n2 * ne, 0.0);
    low.assign(piv.size(), 0.0);
    for (int m1 = 0; m1 < n1; ++m1) {
      const double s1 = 2.0 - 2.0 * std::cos(2.0 * kPi * m1 / n1);
      for (int m2 = 0; m2 < n2; ++m2) {
        const double s2 = 2.0 - 2.0 * std::cos(2.0 * kPi * m2 / n2);
        const std::size_t base = (static_cast<std::size_t>(m1) * n2 + m2) *
                                 static_cast<std::size_t>(ne);
        double prev = 0.0;
        for (int i = 0; i < ne; ++i) {
          const double diag =
              kf[i] + kf[i + 1] + s1 * k1[i] + s2 * k2[i] + m[i];
          double l = 0.0;
          if (i > 0) l = -kf[i] / prev;
          const double p = diag - l * l * prev;
          low[base + i] = l;
          piv[base + i] = p;
          prev = p;
        }
      }
    }
    buf.resize(g.size());
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    const HopfGrid& g = grid;
    const int n1 = g.n_xi1, n2 = g.n_xi2, ne = g.n_eta;
    const std::size_t plane = static_cast<std::size_t>(n1) * n2;
    for (std::size_t p = 0; p < r.size(); ++p) buf[p] = r[p];
    for (int i = 0; i < ne; ++i) {
      std::complex<double>* block = buf.data() + i * plane;
      for (int j = 0; j < n1; ++j) fft_radix2(block + j * n2, n2, 1, false);
      for (int k = 0; k < n2; ++k) fft_radix2(block + k, n1, n2, false);
    }
    for (int m1 = 0; m1 < n1; ++m1)
      for (int m2 = 0; m2 < n2; ++m2) {
        const std::size_t fac = (static_cast<std::size_t>(m1) * n2 + m2) *
                                static_cast<std::size_t>(ne);
        std::complex<double>* v = buf.data() + m1 * n2 + m2;
        for (int i = 1; i < ne; ++i)
          v[i * plane] -= low[fac + i] * v[(i - 1) * plane];
        for (int i = 0; i < ne; ++i) v[i * plane] /= piv[fac + i];
        for (int i = ne - 2; i >= 0; --i)
          v[i * plane] -= low[fac + i + 1] * v[(i + 1) * plane];
      }
    for (int i = 0; i < ne; ++i) {
      std::complex<double>* block = buf.data() + i * plane;
      for (int j = 0; j < n1; ++j) fft_radix2(block + j * n2, n2, 1, true);
      for (int k = 0; k < n2; ++k) fft_radix2(block + k, n1, n2, true);
    }
    z.resize(r.size());
    for (std::size_t p = 0; p < r.size(); ++p) z[p] = buf[p].real();
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> solve_core(const RescaledState& s,
                               const FlrwBackground& bg, LapseForm form,
                               const std::vector<double>& rhs,
                               const LapseOptions& opt, LapseStats* stats) {
  if (s.homogeneous)
    throw Error(ErrKind::ConfigError,
                "elliptic lapse solve needs a gridded state");
  if (rhs.size() != s.npoints())
    throw Error(ErrKind::ConfigError, "lapse rhs size does not match grid");
  const FlrwSample sm = flrw_eval(bg, s.t);
  const std::vector<double> coeff = lapse_coefficient(s, bg, form);
  double fmin = coeff[0], fmax = coeff[0];
  for (double v : coeff) {
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
  }
  if (stats) {
    stats->f_min = fmin;
    stats->f_max = fmax;
    stats->iterations = 0;
    stats->final_residual = 0.0;
    stats->preconditioned_fft = false;
  }
  if (fmin <= opt.f_floor)
    throw Error(ErrKind::DegenerateCoefficient,
                "lapse coefficient fell to " + std::to_string(fmin));

  const OperatorData data = build_operator(s, sm, form, coeff);
  const std::size_t n = s.npoints();
  std::vector<double> b(n);
  for (std::size_t p = 0; p < n; ++p) b[p] = -rhs[p] * data.vol[p];
  const double bnorm = std::sqrt(dot(b, b));
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0) return x;

  const bool fft_ok = opt.use_fft_preconditioner && fft_size_ok(s.grid.n_xi1) &&
                      fft_size_ok(s.grid.n_xi2);
  FftPreconditioner fftp;
  std::vector<double> jacobi;
  if (fft_ok) {
    fftp.build(data);
  } else {
    // diagonal of the assembled operator: adjacent interface coefficients
    // plus the mass term (cross terms have empty diagonals)
    jacobi = data.mass;
    const HopfGrid& g = s.grid;
    const double ih2[3] = {1.0 / (g.h_eta * g.h_eta),
                           1.0 / (g.h_xi1 * g.h_xi1),
                           1.0 / (g.h_xi2 * g.h_xi2)};
    for (int i = 0; i < g.n_eta; ++i)
      for (int j = 0; j < g.n_xi1; ++j)
        for (int k = 0; k < g.n_xi2; ++k) {
          const std::size_t p = g.idx(i, j, k);
          if (i + 1 < g.n_eta) {
            const std::size_t q = g.idx(i + 1, j, k);
            const double jac_face = 27.0 * std::sin((i + 1) * g.h_eta) *
                                    std::cos((i + 1) * g.h_eta);
            const double kf =
                jac_face * 0.5 * (data.kk[p][0] + data.kk[q][0]) * ih2[0];
            jacobi[p] += kf;
            jacobi[q] += kf;
          }
          const std::size_t q1 = g.idx(i, wrapi(j + 1, g.n_xi1), k);
          const double kf1 = 0.5 * (data.kk[p][3] + data.kk[q1][3]) * ih2[1];
          jacobi[p] += kf1;
          jacobi[q1] += kf1;
          const std::size_t q2 = g.idx(i, j, wrapi(k + 1, g.n_xi2));
          const double kf2 = 0.5 * (data.kk[p][5] + data.kk[q2][5]) * ih2[2];
          jacobi[p] += kf2;
          jacobi[q2] += kf2;
        }
  }
  if (stats) stats->preconditioned_fft = fft_ok;
  auto precondition = [&](const std::vector<double>& r,
                          std::vector<double>& z) {
    if (fft_ok) {
      fftp.apply(r, z);
    } else {
      z.resize(r.size());
      for (std::size_t p = 0; p < r.size(); ++p) z[p] = r[p] / jacobi[p];
    }
  };

  std::vector<double> r = b, z, p, ap, scratch;
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;
  int it = 0;
  while (it < opt.max_iter) {
    apply_weak(data, p, ap, scratch);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw Error(ErrKind::NonConvergence,
                  "lapse operator lost positive definiteness");
    const double alpha = rz / pap;
    for (std::size_t q = 0; q < n; ++q) {
      x[q] += alpha * p[q];
      r[q] -= alpha * ap[q];
    }
    ++it;
    rel = std::sqrt(dot(r, r)) / bnorm;
    if (rel <= opt.tol) break;
    precondition(r, z);
    const double rznew = dot(r, z);
    const double beta = rznew / rz;
    rz = rznew;
    for (std::size_t q = 0; q < n; ++q) p[q] = z[q] + beta * p[q];
  }
  if (stats) {
    stats->iterations = it;
    stats->final_residual = rel;
  }
  if (rel > opt.tol)
    throw Error(ErrKind::NonConvergence,
                "lapse solve stalled at relative residual " +
                    std::to_string(rel) + " after " + std::to_string(it) +
                    " iterations");
  return x;
}

}  // namespace

std::vector<double> lapse_coefficient(const RescaledState& s,
                                      const FlrwBackground& bg,
                                      LapseForm form) {
  const FlrwSample sm = flrw_eval(bg, s.t);
  const double a43 = std::pow(sm.a, 4.0 / 3.0);
  const double base = sm.a_prime * sm.a_prime + (2.0 / 3.0) * a43;
  const std::size_t n = s.npoints();
  std::vector<double> f(n);
  if (form == LapseForm::High) {
    for (std::size_t p = 0; p < n; ++p)
      f[p] = base + norm2_mat11(s.G[p], s.Ginv[p], s.Khat[p]) +
             2.0 * kSqrt23 * s.Psi[p] + s.Psi[p] * s.Psi[p];
  } else {
    const std::vector<double> r = scalar_curvature_field(s);
    for (std::size_t p = 0; p < n; ++p)
      f[p] = base + a43 * (r[p] - 2.0 / 3.0) -
             a43 * norm2_oneform(s.Ginv[p], s.Phi[p]);
  }
  return f;
}

std::vector<double> lapse_rhs(const RescaledState& s, const FlrwBackground& bg,
                              LapseForm form) {
  const std::size_t n = s.npoints();
  std::vector<double> rhs(n);
  if (form == LapseForm::High) {
    for (std::size_t p = 0; p < n; ++p)
      rhs[p] = 2.0 * kSqrt23 * s.Psi[p] +
               norm2_mat11(s.G[p], s.Ginv[p], s.Khat[p]) +
               s.Psi[p] * s.Psi[p];
  } else {
    const std::vector<double> r = scalar_curvature_field(s);
    for (std::size_t p = 0; p < n; ++p)
      rhs[p] = (r[p] - 2.0 / 3.0) - norm2_oneform(s.Ginv[p], s.Phi[p]);
  }
  (void)bg;
  return rhs;
}

double solve_lapse_homogeneous(const RescaledState& s,
                               const FlrwBackground& bg, double f_floor) {
  if (!s.homogeneous)
    throw Error(ErrKind::ConfigError,
                "homogeneous lapse solve needs a homogeneous state");
  const double f = lapse_coefficient(s, bg, LapseForm::High)[0];
  if (f <= f_floor)
    throw Error(ErrKind::DegenerateCoefficient,
                "lapse coefficient " + std::to_string(f) +
                    " at or below floor " + std::to_string(f_floor));
  const FlrwSample sm = flrw_eval(bg, s.t);
  const double a43 = std::pow(sm.a, 4.0 / 3.0);
  return -lapse_rhs(s, bg, LapseForm::High)[0] / (a43 * f);
}

std::vector<double> apply_lapse_operator(const RescaledState& s,
                                         const FlrwBackground& bg,
                                         LapseForm form,
                                         const std::vector<double>& u) {
  if (s.homogeneous)
    throw Error(ErrKind::ConfigError,
                "operator application needs a gridded state");
  if (u.size() != s.npoints())
    throw Error(ErrKind::ConfigError, "field size does not match grid");
  const FlrwSample sm = flrw_eval(bg, s.t);
  const std::vector<double> coeff = lapse_coefficient(s, bg, form);
  const OperatorData data = build_operator(s, sm, form, coeff);
  std::vector<double> out, scratch;
  apply_weak(data, u, out, scratch);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = -out[p] / data.vol[p];
  return out;
}

std::vector<double> lapse_cell_volumes(const RescaledState& s) {
  if (s.homogeneous)
    throw Error(ErrKind::ConfigError, "cell volumes need a gridded state");
  const HopfGrid& g = s.grid;
  const double cell = g.h_eta * g.h_xi1 * g.h_xi2;
  std::vector<double> vol(g.size());
  for (int i = 0; i < g.n_eta; ++i) {
    const double jac = 27.0 * std::sin(g.eta(i)) * std::cos(g.eta(i));
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k) {
        const std::size_t p = g.idx(i, j, k);
        vol[p] = std::sqrt(det3(s.G[p])) * jac * cell;
      }
  }
  return vol;
}

std::vector<double> solve_lapse_elliptic(const RescaledState& s,
                                         const FlrwBackground& bg,
                                         LapseForm form,
                                         const LapseOptions& opt,
                                         LapseStats* stats) {
  return solve_core(s, bg, form, lapse_rhs(s, bg, form), opt, stats);
}

std::vector<double> solve_lapse_with_rhs(const RescaledState& s,
                                         const FlrwBackground& bg,
                                         LapseForm form,
                                         const std::vector<double>& rhs,
                                         const LapseOptions& opt,
                                         LapseStats* stats) {
  return solve_core(s, bg, form, rhs, opt, stats);
}

MaxPrincipleReport maximum_principle_check(const std::vector<double>& psi,
                                           const std::vector<double>& rhs,
                                           const std::vector<double>& f_tilde,
                                           double margin) {
  if (psi.size() != rhs.size() || psi.size() != f_tilde.size())
    throw Error(ErrKind::ConfigError,
                "maximum principle inputs differ in size");
  MaxPrincipleReport rep;
  rep.f_min = f_tilde.empty() ? 0.0 : f_tilde[0];
  for (std::size_t p = 0; p < psi.size(); ++p) {
    rep.sup_psi = std::max(rep.sup_psi, std::abs(psi[p]));
    rep.sup_rhs = std::max(rep.sup_rhs, std::abs(rhs[p]));
    rep.f_min = std::min(rep.f_min, f_tilde[p]);
  }
  rep.bound_constant = rep.f_min > 0.0
                           ? 1.0 / rep.f_min + margin
                           : std::numeric_limits<double>::infinity();
  rep.bound = rep.sup_rhs == 0.0 && !std::isfinite(rep.bound_constant)
                  ? std::numeric_limits<double>::infinity()
                  : rep.bound_constant * rep.sup_rhs;
  rep.satisfied = rep.sup_psi <= rep.bound;
  return rep;
}

}  // namespace crunch
