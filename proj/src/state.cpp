#include "crunch/state.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <string>

#include "crunch/error.hpp"

namespace crunch {

namespace {

// component accessors shared by the FD plumbing and the checkpoint format
constexpr int kSymRow[6] = {0, 0, 0, 1, 1, 2};
constexpr int kSymCol[6] = {0, 1, 2, 1, 2, 2};

void require_sizes(const RescaledState& s) {
  const std::size_t n = s.npoints();
  if (s.G.size() != n || s.Ginv.size() != n || s.Khat.size() != n ||
      s.psi.size() != n || s.Psi.size() != n || s.Phi.size() != n)
    throw Error(ErrKind::ConfigError, "state field sizes are inconsistent");
  if (!s.homogeneous && s.grid.size() == 0)
    throw Error(ErrKind::ConfigError, "grid state carries an empty grid");
}

double sample_scale(const FlrwBackground& bg, double t) {
  FlrwSample s = flrw_eval(bg, t);
  // the final node lands on the floor up to roundoff, so compare with slack
  if (s.a <= bg.a_min * (1.0 + 1e-9))
    throw Error(ErrKind::DegenerateScale,
                "a(t) = " + std::to_string(s.a) +
                    " at or below the background floor " +
                    std::to_string(bg.a_min));
  return s.a;
}

// Round-volume L2 and sup of |xi|_round^2 for the high norm; the round norm
// of any frame tensor is the plain component sum of squares.
struct NormAccumulator {
  double l2sq = 0.0, supsq = 0.0;
};

template <typename Field, typename SqFn>
NormAccumulator accumulate_round(const RescaledState& s, const Field& f,
                                 SqFn&& sq) {
  NormAccumulator acc;
  if (s.homogeneous) {
    double v = sq(f[0]);
    acc.l2sq = v * kVolRound3;
    acc.supsq = v;
    return acc;
  }
  ScalarField squares(s.grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    squares[i] = sq(f[i]);
    acc.supsq = std::max(acc.supsq, squares[i]);
  }
  acc.l2sq = integrate_round(s.grid, squares);
  return acc;
}

double sq_scalar(double v) { return v * v; }
double sq_vec(const Vec3& v) { return dot(v, v); }
double sq_mat(const Mat3& m) { return ddot(m, m); }

}  // namespace

RescaledState make_flrw_state(double t) {
  RescaledState s;
  s.t = t;
  s.homogeneous = true;
  s.G = {identity3()};
  s.Ginv = {identity3()};
  s.Khat = {mzero3()};
  s.psi = {0.0};
  s.Psi = {0.0};
  s.Phi = {vzero3()};
  return s;
}

PhysicalState make_flrw_physical(const FlrwBackground& bg, double t) {
  FlrwSample f = flrw_eval(bg, t);
  PhysicalState p;
  p.t = t;
  p.homogeneous = true;
  const double a23 = std::pow(f.a, 2.0 / 3.0);
  p.g = {a23 * identity3()};
  p.ginv = {(1.0 / a23) * identity3()};
  p.k = {(-f.hubble / 3.0) * identity3()};
  p.lapse = {1.0};
  p.dt_phi = {kSqrt23 / f.a};
  p.grad_phi = {vzero3()};
  return p;
}

RescaledState rescale(const PhysicalState& phys, const FlrwBackground& bg) {
  const double a = sample_scale(bg, phys.t);
  const double a23 = std::pow(a, 2.0 / 3.0);
  const double a43 = a23 * a23;
  const std::size_t n = phys.npoints();
  RescaledState s;
  s.t = phys.t;
  s.homogeneous = phys.homogeneous;
  s.grid = phys.grid;
  s.G.resize(n);
  s.Ginv.resize(n);
  s.Khat.resize(n);
  s.psi.resize(n);
  s.Psi.resize(n);
  s.Phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.G[i] = (1.0 / a23) * phys.g[i];
    s.Ginv[i] = a23 * phys.ginv[i];
    s.Khat[i] = a * trace_free(phys.k[i]);
    s.psi[i] = (phys.lapse[i] - 1.0) / a43;
    s.Psi[i] = a * phys.dt_phi[i] / phys.lapse[i] - kSqrt23;
    s.Phi[i] = phys.grad_phi[i];
  }
  return s;
}

PhysicalState unrescale(const RescaledState& state, const FlrwBackground& bg) {
  require_sizes(state);
  const double a = sample_scale(bg, state.t);
  FlrwSample f = flrw_eval(bg, state.t);
  const double a23 = std::pow(a, 2.0 / 3.0);
  const double a43 = a23 * a23;
  const std::size_t n = state.npoints();
  PhysicalState p;
  p.t = state.t;
  p.homogeneous = state.homogeneous;
  p.grid = state.grid;
  p.g.resize(n);
  p.ginv.resize(n);
  p.k.resize(n);
  p.lapse.resize(n);
  p.dt_phi.resize(n);
  p.grad_phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.g[i] = a23 * state.G[i];
    p.ginv[i] = (1.0 / a23) * state.Ginv[i];
    // CMC gauge: tr k = -H, all trace carried by the background part
    p.k[i] = (1.0 / a) * state.Khat[i] + (-f.hubble / 3.0) * identity3();
    p.lapse[i] = 1.0 + a43 * state.psi[i];
    p.dt_phi[i] = p.lapse[i] * (kSqrt23 + state.Psi[i]) / a;
    p.grad_phi[i] = state.Phi[i];
  }
  return p;
}

void validate_state(const RescaledState& state, double eig_floor) {
  require_sizes(state);
  for (std::size_t i = 0; i < state.npoints(); ++i) {
    Vec3 eig = sym_eigenvalues(sym_part(state.G[i]));
    if (!(eig[0] > eig_floor))
      throw Error(ErrKind::SingularMetric,
                  "metric loses positivity: smallest eigenvalue " +
                      std::to_string(eig[0]) + " at point " +
                      std::to_string(i));
    Mat3 prod = matmul(state.G[i], state.Ginv[i]);
    prod[0][0] -= 1.0;
    prod[1][1] -= 1.0;
    prod[2][2] -= 1.0;
    if (max_abs(prod) > 1e-12)
      throw Error(ErrKind::InvariantViolation,
                  "G * Ginv deviates from the identity by " +
                      std::to_string(max_abs(prod)) + " at point " +
                      std::to_string(i));
    if (std::abs(trace(state.Khat[i])) > 1e-12)
      throw Error(ErrKind::InvariantViolation,
                  "Khat carries a trace of " +
                      std::to_string(trace(state.Khat[i])) + " at point " +
                      std::to_string(i));
  }
}

namespace {

// gather one scalar component across the grid, differentiate, scatter
template <typename Get, typename Put>
void fd_component(const HopfGrid& grid, std::size_t n, Get&& get, Put&& put) {
  ScalarField comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = get(i);
  for (int a = 0; a < 3; ++a) {
    ScalarField d = apply_Z(grid, a, comp);
    for (std::size_t i = 0; i < n; ++i) put(a, i, d[i]);
  }
}

// single-direction variant for Lie derivatives along one frame field
template <typename Get, typename Put>
void fd_component_one(const HopfGrid& grid, std::size_t n, int a, Get&& get,
                      Put&& put) {
  ScalarField comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = get(i);
  ScalarField d = apply_Z(grid, a, comp);
  for (std::size_t i = 0; i < n; ++i) put(i, d[i]);
}

}  // namespace

SliceDerivs compute_slice_derivs(const RescaledState& s) {
  require_sizes(s);
  const std::size_t n = s.npoints();
  SliceDerivs d;
  d.zG.assign(n, tzero3());
  d.zzG.assign(n, t4zero());
  d.zK.assign(n, tzero3());
  d.zpsi.assign(n, vzero3());
  d.zzpsi.assign(n, mzero3());
  d.zPsi.assign(n, vzero3());
  d.zPhi.assign(n, mzero3());
  if (s.homogeneous) return d;

  const HopfGrid& g = s.grid;
  for (int c = 0; c < 6; ++c) {
    const int r1 = kSymRow[c], r2 = kSymCol[c];
    fd_component(
        g, n, [&](std::size_t i) { return s.G[i][r1][r2]; },
        [&](int a, std::size_t i, double v) {
          d.zG[i][a][r1][r2] = v;
          d.zG[i][a][r2][r1] = v;
        });
  }
  // second derivatives from the already-differentiated first derivatives
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 6; ++c) {
      const int r1 = kSymRow[c], r2 = kSymCol[c];
      fd_component(
          g, n, [&](std::size_t i) { return d.zG[i][a][r1][r2]; },
          [&](int e, std::size_t i, double v) {
            d.zzG[i][e][a][r1][r2] = v;
            d.zzG[i][e][a][r2][r1] = v;
          });
    }
  for (int r1 = 0; r1 < 3; ++r1)
    for (int r2 = 0; r2 < 3; ++r2)
      fd_component(
          g, n, [&](std::size_t i) { return s.Khat[i][r1][r2]; },
          [&](int a, std::size_t i, double v) { d.zK[i][a][r1][r2] = v; });
  fd_component(
      g, n, [&](std::size_t i) { return s.psi[i]; },
      [&](int a, std::size_t i, double v) { d.zpsi[i][a] = v; });
  for (int b = 0; b < 3; ++b)
    fd_component(
        g, n, [&](std::size_t i) { return d.zpsi[i][b]; },
        [&](int a, std::size_t i, double v) { d.zzpsi[i][a][b] = v; });
  fd_component(
      g, n, [&](std::size_t i) { return s.Psi[i]; },
      [&](int a, std::size_t i, double v) { d.zPsi[i][a] = v; });
  for (int b = 0; b < 3; ++b)
    fd_component(
        g, n, [&](std::size_t i) { return s.Phi[i][b]; },
        [&](int a, std::size_t i, double v) { d.zPhi[i][a][b] = v; });
  return d;
}

std::vector<double> lie_z_scalar(const RescaledState& s, int a,
                                 const std::vector<double>& f) {
  if (s.homogeneous) return std::vector<double>(1, 0.0);
  return apply_Z(s.grid, a, f);
}

std::vector<Vec3> lie_z_vec(const RescaledState& s, int a,
                            const std::vector<Vec3>& f) {
  const std::size_t n = s.npoints();
  std::vector<Vec3> zf(n, vzero3());
  if (!s.homogeneous)
    for (int b = 0; b < 3; ++b)
      fd_component_one(
          s.grid, n, a, [&](std::size_t i) { return f[i][b]; },
          [&](std::size_t i, double v) { zf[i][b] = v; });
  std::vector<Vec3> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lie_frame_vec(a, f[i], zf[i]);
  return out;
}

std::vector<Mat3> lie_z_mat(const RescaledState& s, int a,
                            const std::vector<Mat3>& f) {
  const std::size_t n = s.npoints();
  std::vector<Mat3> zf(n, mzero3());
  if (!s.homogeneous)
    for (int r1 = 0; r1 < 3; ++r1)
      for (int r2 = 0; r2 < 3; ++r2)
        fd_component_one(
            s.grid, n, a, [&](std::size_t i) { return f[i][r1][r2]; },
            [&](std::size_t i, double v) { zf[i][r1][r2] = v; });
  std::vector<Mat3> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lie_frame_mat(a, f[i], zf[i]);
  return out;
}

ConstraintResiduals constraint_residuals(const RescaledState& s,
                                         const FlrwBackground& bg) {
  require_sizes(s);
  const double a = sample_scale(bg, s.t);
  const double a43 = std::pow(a, 4.0 / 3.0);
  SliceDerivs d = compute_slice_derivs(s);
  const std::size_t n = s.npoints();

  ConstraintResiduals res;
  res.hamiltonian.resize(n);
  res.momentum.resize(n);
  ScalarField ham_sq(s.homogeneous ? 1 : n), mom_sq(s.homogeneous ? 1 : n);
  for (std::size_t i = 0; i < n; ++i) {
    Curvature cur = curvature_frame(s.G[i], s.Ginv[i], d.zG[i], d.zzG[i]);
    const double k2 = norm2_mat11(s.G[i], s.Ginv[i], s.Khat[i]);
    const double phi2 = norm2_oneform(s.Ginv[i], s.Phi[i]);
    res.hamiltonian[i] = a43 * (cur.scalar - 2.0 / 3.0) - k2 -
                         2.0 * kSqrt23 * s.Psi[i] - s.Psi[i] * s.Psi[i] -
                         a43 * phi2;
    Ten3 gm = connection_mixed(s.Ginv[i], connection_low(s.G[i], d.zG[i]));
    Vec3 divk = div_mat11(nabla_mat11(gm, s.Khat[i], d.zK[i]));
    for (int b = 0; b < 3; ++b)
      res.momentum[i][b] =
          divk[b] + (kSqrt23 + s.Psi[i]) * s.Phi[i][b];
    const double weight = std::sqrt(det3(s.G[i]));
    ham_sq[i] = res.hamiltonian[i] * res.hamiltonian[i] * weight;
    mom_sq[i] = norm2_oneform(s.Ginv[i], res.momentum[i]) * weight;
    res.ham_sup = std::max(res.ham_sup, std::abs(res.hamiltonian[i]));
    res.mom_sup = std::max(res.mom_sup, std::sqrt(norm2_oneform(
                                            s.Ginv[i], res.momentum[i])));
  }
  if (s.homogeneous) {
    res.ham_l2 = std::sqrt(ham_sq[0] * kVolRound3);
    res.mom_l2 = std::sqrt(mom_sq[0] * kVolRound3);
  } else {
    res.ham_l2 = std::sqrt(integrate_round(s.grid, ham_sq));
    res.mom_l2 = std::sqrt(integrate_round(s.grid, mom_sq));
  }
  return res;
}

std::vector<double> solve_hamiltonian_for_Psi(const RescaledState& s,
                                              const FlrwBackground& bg) {
  require_sizes(s);
  const double a = sample_scale(bg, s.t);
  const double a43 = std::pow(a, 4.0 / 3.0);
  SliceDerivs d = compute_slice_derivs(s);
  const std::size_t n = s.npoints();
  std::vector<double> psi_sf(n);
  for (std::size_t i = 0; i < n; ++i) {
    Curvature cur = curvature_frame(s.G[i], s.Ginv[i], d.zG[i], d.zzG[i]);
    const double c = a43 * (cur.scalar - 2.0 / 3.0) -
                     norm2_mat11(s.G[i], s.Ginv[i], s.Khat[i]) -
                     a43 * norm2_oneform(s.Ginv[i], s.Phi[i]);
    const double disc = 2.0 / 3.0 + c;
    if (disc < 0.0)
      throw Error(ErrKind::ConstraintInfeasible,
                  "Hamiltonian discriminant 2/3 + C = " +
                      std::to_string(disc) + " < 0 at point " +
                      std::to_string(i));
    // the branch through Psi = 0 at C = 0, written to avoid cancellation
    psi_sf[i] = c / (std::sqrt(disc) + kSqrt23);
  }
  return psi_sf;
}

double high_norm_truncated(const RescaledState& s, int M, double a) {
  require_sizes(s);
  if (M < 0 || M > 2)
    throw Error(ErrKind::ConfigError,
                "high norm truncation order must be 0, 1 or 2, got " +
                    std::to_string(M));
  const double a23 = std::pow(a, 2.0 / 3.0);
  const std::size_t n = s.npoints();

  // Lie-string ladders per field: level l holds all 3^l ordered strings.
  auto ladder_mat = [&](std::vector<Mat3> base, int depth) {
    std::vector<std::vector<std::vector<Mat3>>> lv(depth + 1);
    lv[0].push_back(std::move(base));
    for (int l = 0; l < depth; ++l)
      for (const auto& f : lv[l])
        for (int za = 0; za < 3; ++za) lv[l + 1].push_back(lie_z_mat(s, za, f));
    return lv;
  };
  auto ladder_vec = [&](std::vector<Vec3> base, int depth) {
    std::vector<std::vector<std::vector<Vec3>>> lv(depth + 1);
    lv[0].push_back(std::move(base));
    for (int l = 0; l < depth; ++l)
      for (const auto& f : lv[l])
        for (int za = 0; za < 3; ++za) lv[l + 1].push_back(lie_z_vec(s, za, f));
    return lv;
  };
  auto ladder_scalar = [&](std::vector<double> base, int depth) {
    std::vector<std::vector<std::vector<double>>> lv(depth + 1);
    lv[0].push_back(std::move(base));
    for (int l = 0; l < depth; ++l)
      for (const auto& f : lv[l])
        for (int za = 0; za < 3; ++za)
          lv[l + 1].push_back(lie_z_scalar(s, za, f));
    return lv;
  };

  // per-level accumulated squares (L2 and sup) for one ladder
  auto levels_mat = [&](const std::vector<std::vector<std::vector<Mat3>>>& lv) {
    std::vector<NormAccumulator> out(lv.size());
    for (std::size_t l = 0; l < lv.size(); ++l)
      for (const auto& f : lv[l]) {
        NormAccumulator acc = accumulate_round(s, f, sq_mat);
        out[l].l2sq += acc.l2sq;
        out[l].supsq += acc.supsq;
      }
    return out;
  };
  auto levels_vec = [&](const std::vector<std::vector<std::vector<Vec3>>>& lv) {
    std::vector<NormAccumulator> out(lv.size());
    for (std::size_t l = 0; l < lv.size(); ++l)
      for (const auto& f : lv[l]) {
        NormAccumulator acc = accumulate_round(s, f, sq_vec);
        out[l].l2sq += acc.l2sq;
        out[l].supsq += acc.supsq;
      }
    return out;
  };
  auto levels_scalar =
      [&](const std::vector<std::vector<std::vector<double>>>& lv) {
        std::vector<NormAccumulator> out(lv.size());
        for (std::size_t l = 0; l < lv.size(); ++l)
          for (const auto& f : lv[l]) {
            NormAccumulator acc = accumulate_round(s, f, sq_scalar);
            out[l].l2sq += acc.l2sq;
            out[l].supsq += acc.supsq;
          }
        return out;
      };

  auto h_full = [](const std::vector<NormAccumulator>& lev, int up) {
    double v = 0.0;
    for (int l = 0; l <= up && l < static_cast<int>(lev.size()); ++l)
      v += lev[l].l2sq;
    return std::sqrt(v);
  };
  auto h_band = [](const std::vector<NormAccumulator>& lev, int up) {
    double v = 0.0;
    for (int l = 1; l <= up && l < static_cast<int>(lev.size()); ++l)
      v += lev[l].l2sq;
    return std::sqrt(v);
  };
  auto c_full = [](const std::vector<NormAccumulator>& lev, int up) {
    double v = 0.0;
    for (int l = 0; l <= up && l < static_cast<int>(lev.size()); ++l)
      v += lev[l].supsq;
    return std::sqrt(v);
  };

  std::vector<Mat3> dG(n), dGinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    dG[i] = s.G[i] - identity3();
    dGinv[i] = s.Ginv[i] - identity3();
  }
  auto lev_K = levels_mat(ladder_mat(s.Khat, M));
  auto lev_G = levels_mat(ladder_mat(s.G, M + 1));
  auto lev_dG = levels_mat(ladder_mat(dG, M));
  auto lev_dGinv = levels_mat(ladder_mat(dGinv, M));
  auto lev_psi = levels_scalar(ladder_scalar(s.psi, M));
  auto lev_Psi = levels_scalar(ladder_scalar(s.Psi, M));
  auto lev_Phi = levels_vec(ladder_vec(s.Phi, M));

  const int base_psi = std::max(0, M - 2);
  const int base_phi = std::max(0, M - 1);
  const int base_c = std::max(0, M - 2);

  double h = 0.0;
  h += h_full(lev_K, M);
  h += a23 * h_band(lev_G, M + 1);
  h += h_full(lev_dG, M);
  h += h_full(lev_dGinv, M);
  h += h_full(lev_psi, base_psi);
  for (int L = 1; base_psi + L <= M && L <= 4; ++L)
    h += std::pow(a23, L) * h_band(lev_psi, base_psi + L);
  h += h_full(lev_Psi, M);
  h += a23 * h_full(lev_Phi, M);
  h += h_full(lev_Phi, base_phi);
  h += c_full(lev_K, base_c);
  h += c_full(lev_dG, base_c);
  h += c_full(lev_dGinv, base_c);
  h += c_full(lev_psi, std::max(0, M - 4));
  h += c_full(lev_Psi, base_c);
  h += c_full(lev_Phi, std::max(0, M - 3));
  return h;
}

void save_state(const RescaledState& s, const std::string& path) {
  require_sizes(s);
  nlohmann::json j;
  j["schema"] = "state-checkpoint-v1";
  j["time"] = s.t;
  j["homogeneous"] = s.homogeneous;
  if (!s.homogeneous)
    j["grid"] = {{"n_eta", s.grid.n_eta},
                 {"n_xi1", s.grid.n_xi1},
                 {"n_xi2", s.grid.n_xi2},
                 {"fd_order", s.grid.fd_order}};
  std::vector<double> data;
  data.reserve(s.npoints() * 20);
  for (std::size_t i = 0; i < s.npoints(); ++i) {
    for (int c = 0; c < 6; ++c)
      data.push_back(s.G[i][kSymRow[c]][kSymCol[c]]);
    for (int r1 = 0; r1 < 3; ++r1)
      for (int r2 = 0; r2 < 3; ++r2) data.push_back(s.Khat[i][r1][r2]);
    data.push_back(s.psi[i]);
    data.push_back(s.Psi[i]);
    for (int b = 0; b < 3; ++b) data.push_back(s.Phi[i][b]);
  }
  j["layout"] = {"G11", "G12",  "G13",  "G22",  "G23",  "G33",  "K11",
                 "K12", "K13",  "K21",  "K22",  "K23",  "K31",  "K32",
                 "K33", "psi",  "Psi",  "Phi1", "Phi2", "Phi3"};
  j["data"] = std::move(data);
  std::ofstream out(path);
  if (!out)
    throw Error(ErrKind::ConfigError, "cannot open " + path + " for writing");
  out << j.dump() << "\n";
}

RescaledState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrKind::ConfigError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrKind::ConfigError,
                std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("schema", "") != "state-checkpoint-v1")
    throw Error(ErrKind::ConfigError,
                "unrecognized checkpoint schema in " + path);
  RescaledState s;
  s.t = j.at("time").get<double>();
  s.homogeneous = j.at("homogeneous").get<bool>();
  if (!s.homogeneous) {
    const auto& g = j.at("grid");
    s.grid = make_hopf_grid(g.at("n_eta").get<int>(), g.at("n_xi1").get<int>(),
                            g.at("n_xi2").get<int>(),
                            g.at("fd_order").get<int>());
  }
  const auto& data = j.at("data");
  const std::size_t n = s.homogeneous ? 1 : s.grid.size();
  if (data.size() != n * 20)
    throw Error(ErrKind::ConfigError,
                "checkpoint data length " + std::to_string(data.size()) +
                    " does not match " + std::to_string(n) + " points");
  s.G.resize(n);
  s.Ginv.resize(n);
  s.Khat.resize(n);
  s.psi.resize(n);
  s.Psi.resize(n);
  s.Phi.resize(n);
  std::size_t pos = 0;
  auto next = [&] { return data[pos++].get<double>(); };
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 6; ++c) {
      double v = next();
      s.G[i][kSymRow[c]][kSymCol[c]] = v;
      s.G[i][kSymCol[c]][kSymRow[c]] = v;
    }
    for (int r1 = 0; r1 < 3; ++r1)
      for (int r2 = 0; r2 < 3; ++r2) s.Khat[i][r1][r2] = next();
    s.psi[i] = next();
    s.Psi[i] = next();
    for (int b = 0; b < 3; ++b) s.Phi[i][b] = next();
    s.Ginv[i] = invert_metric(s.G[i]);
  }
  return s;
}

}  // namespace crunch
