#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "crunch/error.hpp"
#include "crunch/frame.hpp"
#include "crunch/hopf.hpp"
#include "crunch/state.hpp"

using namespace crunch;

namespace {

const FlrwBackground& background() {
  static FlrwBackground bg = solve_scale_factor();
  return bg;
}

Mat3 random_spd(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  Mat3 a;
  for (auto& r : a)
    for (auto& v : r) v = u(rng);
  Mat3 g = matmul(a, transpose(a));
  for (int i = 0; i < 3; ++i) g[i][i] += 0.7;
  return g;
}

// G-compatible trace-free Khat: G * Khat symmetric, tr Khat = 0
Mat3 random_khat(std::mt19937& rng, const Mat3& g) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Mat3 slow;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) slow[i][j] = slow[j][i] = u(rng);
  Mat3 k = matmul(invert_metric(g), slow);
  return trace_free(k);
}

RescaledState random_homogeneous(std::mt19937& rng) {
  RescaledState s = make_flrw_state(0.4);
  s.G = {random_spd(rng)};
  s.Ginv = {invert_metric(s.G[0])};
  s.Khat = {random_khat(rng, s.G[0])};
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  s.psi = {u(rng)};
  s.Psi = {u(rng)};
  s.Phi = {{u(rng), u(rng), u(rng)}};
  return s;
}

RescaledState random_grid_state(std::mt19937& rng, int n = 4) {
  RescaledState s;
  s.t = 0.3;
  s.homogeneous = false;
  s.grid = make_hopf_grid(n, 2 * n, 2 * n, 2);
  const std::size_t np = s.grid.size();
  s.G.resize(np);
  s.Ginv.resize(np);
  s.Khat.resize(np);
  s.psi.resize(np);
  s.Psi.resize(np);
  s.Phi.resize(np);
  // smooth spatial modulation through the ambient coordinates keeps the
  // fields regular at the chart axes
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  const double amp = u(rng);
  for (int i = 0; i < s.grid.n_eta; ++i)
    for (int j = 0; j < s.grid.n_xi1; ++j)
      for (int k = 0; k < s.grid.n_xi2; ++k) {
        const std::size_t m = s.grid.idx(i, j, k);
        auto y = embed(s.grid.eta(i), s.grid.xi1(j), s.grid.xi2(k));
        const double bump = amp * y[0] * y[2] / 9.0;
        s.G[m] = identity3();
        s.G[m][0][0] += bump;
        s.G[m][1][1] -= 0.5 * bump;
        s.G[m][0][1] = s.G[m][1][0] = 0.3 * bump;
        s.Ginv[m] = invert_metric(s.G[m]);
        Mat3 k0 = mzero3();
        k0[0][0] = bump;
        k0[1][1] = -bump;
        s.Khat[m] = trace_free(k0);
        s.psi[m] = 0.1 * bump;
        s.Psi[m] = -0.2 * bump;
        s.Phi[m] = {0.2 * bump, 0.0, -0.1 * bump};
      }
  return s;
}

}  // namespace

TEST_CASE("background slice rescales to the fixed point") {
  const auto& bg = background();
  for (double t : {0.0, 0.5, 1.2}) {
    PhysicalState p = make_flrw_physical(bg, t);
    RescaledState s = rescale(p, bg);
    CHECK(max_abs(s.G[0] - identity3()) < 1e-14);
    CHECK(max_abs(s.Khat[0]) < 1e-14);
    CHECK(std::abs(s.psi[0]) < 1e-14);
    CHECK(std::abs(s.Psi[0]) < 1e-13);
    CHECK(std::abs(s.Phi[0][0]) + std::abs(s.Phi[0][1]) +
              std::abs(s.Phi[0][2]) ==
          0.0);
  }
}

TEST_CASE("rescale and unrescale invert each other") {
  const auto& bg = background();
  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    RescaledState s = random_homogeneous(rng);
    RescaledState back = rescale(unrescale(s, bg), bg);
    CHECK(max_abs(back.G[0] - s.G[0]) < 1e-13);
    CHECK(max_abs(back.Ginv[0] - s.Ginv[0]) < 1e-13);
    CHECK(max_abs(back.Khat[0] - s.Khat[0]) < 1e-13);
    CHECK(back.psi[0] == doctest::Approx(s.psi[0]).epsilon(1e-13));
    CHECK(back.Psi[0] == doctest::Approx(s.Psi[0]).epsilon(1e-13));
  }
  // grid states round-trip too
  RescaledState sg = random_grid_state(rng);
  RescaledState backg = rescale(unrescale(sg, bg), bg);
  double worst = 0.0;
  for (std::size_t i = 0; i < sg.npoints(); ++i)
    worst = std::max(worst, max_abs(backg.G[i] - sg.G[i]));
  CHECK(worst < 1e-13);

  // unrescaled CMC gauge: tr k = -H
  PhysicalState p = unrescale(sg, bg);
  FlrwSample f = flrw_eval(bg, sg.t);
  for (std::size_t i = 0; i < p.npoints(); ++i)
    CHECK(trace(p.k[i]) == doctest::Approx(-f.hubble).epsilon(1e-12));
}

TEST_CASE("at t = 0 the maps specialize to a = 1") {
  const auto& bg = background();
  std::mt19937 rng(5);
  RescaledState s = random_homogeneous(rng);
  s.t = 0.0;
  PhysicalState p = unrescale(s, bg);
  CHECK(max_abs(p.g[0] - s.G[0]) < 1e-14);
  CHECK(p.lapse[0] - 1.0 == doctest::Approx(s.psi[0]).epsilon(1e-14));
}

TEST_CASE("rescaling refuses a collapsed background scale") {
  const auto& bg = background();
  PhysicalState p = make_flrw_physical(bg, 0.1);
  p.t = bg.t_end();  // a has hit the integration floor there
  try {
    rescale(p, bg);
    FAIL("expected DegenerateScale");
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::DegenerateScale);
  }
}

TEST_CASE("pointwise norms against hand values") {
  std::mt19937 rng(7);
  Mat3 g = random_spd(rng);
  Mat3 ginv = invert_metric(g);
  // |Id|_G = sqrt(3) for any metric (mixed-valence contraction)
  CHECK(std::sqrt(norm2_mat11(g, ginv, identity3())) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-13));
  // |delta|_delta = sqrt(3) for the (0,2) round metric against itself
  CHECK(std::sqrt(norm2_mat02(identity3(), identity3())) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-13));
  // first frame vector in G = diag(4,1,1): |v|_G = sqrt(G_11) = 2
  Mat3 g4 = identity3();
  g4[0][0] = 4.0;
  Vec3 v = {1.0, 0.0, 0.0};
  double n2 = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) n2 += g4[a][b] * v[a] * v[b];
  CHECK(std::sqrt(n2) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("norm comparison constants follow the eigenvalue bounds") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Mat3 g = random_spd(rng);
    Mat3 ginv = invert_metric(g);
    Vec3 eig = sym_eigenvalues(g);
    const double big = std::max(eig[2], 1.0 / eig[0]);
    Vec3 w = {u(rng), u(rng), u(rng)};
    Mat3 h;
    for (auto& r : h)
      for (auto& x : r) x = u(rng);
    h = sym_part(h);
    // one-form: |w|_G^2 within [1/lmax, 1/lmin] of the round square
    double wg = norm2_oneform(ginv, w), wr = dot(w, w);
    CHECK(wg <= big * wr * (1 + 1e-12));
    CHECK(wg >= wr / big * (1 - 1e-12));
    // (0,2): two inverse contractions
    double hg = norm2_mat02(ginv, h), hr = ddot(h, h);
    CHECK(hg <= big * big * hr * (1 + 1e-12));
    CHECK(hg >= hr / (big * big) * (1 - 1e-12));
  }
}

TEST_CASE("state validation flags broken invariants") {
  std::mt19937 rng(11);
  RescaledState s = random_homogeneous(rng);
  validate_state(s);

  RescaledState bad = s;
  bad.Ginv[0][0][1] += 1e-6;
  try {
    validate_state(bad);
    FAIL("expected InvariantViolation");
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::InvariantViolation);
  }

  bad = s;
  bad.Khat[0][2][2] += 1e-6;
  try {
    validate_state(bad);
    FAIL("expected InvariantViolation");
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::InvariantViolation);
  }

  bad = s;
  bad.G[0] = mzero3();
  bad.G[0][0][0] = 1.0;
  bad.G[0][1][1] = -0.5;
  bad.G[0][2][2] = 1.0;
  CHECK_THROWS_AS(validate_state(bad), Error);
}

TEST_CASE("constraints vanish on the background and behave on data") {
  const auto& bg = background();
  RescaledState flrw = make_flrw_state(0.7);
  ConstraintResiduals r = constraint_residuals(flrw, bg);
  CHECK(std::abs(r.hamiltonian[0]) < 1e-13);
  CHECK(r.mom_sup < 1e-15);

  // diagonal homogeneous data: momentum closes identically through the
  // structure constants, hamiltonian closes after the Psi solve
  RescaledState s = make_flrw_state(0.4);
  s.G = {{{{1.21, 0, 0}, {0, 0.88, 0}, {0, 0, 0.95}}}};
  s.Ginv = {invert_metric(s.G[0])};
  s.Khat = {{{{0.11, 0, 0}, {0, -0.07, 0}, {0, 0, -0.04}}}};
  s.psi = {0.0};
  s.Psi = {0.0};
  s.Phi = {vzero3()};
  s.Psi[0] = solve_hamiltonian_for_Psi(s, bg)[0];
  ConstraintResiduals rd = constraint_residuals(s, bg);
  CHECK(std::abs(rd.hamiltonian[0]) < 1e-12);
  CHECK(rd.mom_sup < 1e-14);

  // momentum need not vanish once Khat is not aligned with G
  RescaledState sm = s;
  std::mt19937 krng(13);
  sm.Khat = {random_khat(krng, sm.G[0])};
  sm.Psi[0] = solve_hamiltonian_for_Psi(sm, bg)[0];
  ConstraintResiduals rm = constraint_residuals(sm, bg);
  CHECK(std::abs(rm.hamiltonian[0]) < 1e-12);
  CHECK(rm.mom_sup > 1e-4);
}

TEST_CASE("hamiltonian solve picks the branch through the origin") {
  const auto& bg = background();
  // conformally rescaled round metric: R = (2/3)/c, so c = 2/3 at t = 0
  // makes C = 1/3 and the root lands at 1 - sqrt(2/3)
  RescaledState s = make_flrw_state(0.0);
  s.G = {(2.0 / 3.0) * identity3()};
  s.Ginv = {invert_metric(s.G[0])};
  std::vector<double> psi_sf = solve_hamiltonian_for_Psi(s, bg);
  CHECK(psi_sf[0] == doctest::Approx(1.0 - kSqrt23).epsilon(1e-14));

  // C = 0 gives exactly 0
  RescaledState f = make_flrw_state(0.0);
  CHECK(solve_hamiltonian_for_Psi(f, bg)[0] == 0.0);

  // large Khat drives the discriminant negative
  RescaledState inf = make_flrw_state(0.0);
  inf.Khat = {{{{1.2, 0, 0}, {0, -1.2, 0}, {0, 0, 0}}}};
  try {
    solve_hamiltonian_for_Psi(inf, bg);
    FAIL("expected ConstraintInfeasible");
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::ConstraintInfeasible);
  }
}

TEST_CASE("grid constraint path reduces to the homogeneous one") {
  const auto& bg = background();
  RescaledState s = make_flrw_state(0.5);
  s.homogeneous = false;
  s.grid = make_hopf_grid(6, 8, 8, 2);
  const std::size_t n = s.grid.size();
  s.G.assign(n, identity3());
  s.Ginv.assign(n, identity3());
  s.Khat.assign(n, mzero3());
  s.psi.assign(n, 0.0);
  s.Psi.assign(n, 0.0);
  s.Phi.assign(n, vzero3());
  ConstraintResiduals r = constraint_residuals(s, bg);
  CHECK(r.ham_sup < 1e-12);
  CHECK(r.mom_sup < 1e-13);
  std::vector<double> psi_sf = solve_hamiltonian_for_Psi(s, bg);
  for (double v : psi_sf) CHECK(v == 0.0);
}

TEST_CASE("truncated high norm: zero at the fixed point, monotone in order") {
  RescaledState flrw = make_flrw_state(0.2);
  for (int M = 0; M <= 2; ++M)
    CHECK(high_norm_truncated(flrw, M, 0.8) == 0.0);

  std::mt19937 rng(15);
  RescaledState s = random_homogeneous(rng);
  double h0 = high_norm_truncated(s, 0, 0.8);
  double h1 = high_norm_truncated(s, 1, 0.8);
  double h2 = high_norm_truncated(s, 2, 0.8);
  CHECK(h0 > 0.0);
  CHECK(h1 >= h0);
  CHECK(h2 >= h1);

  CHECK_THROWS_AS(high_norm_truncated(s, 3, 0.8), Error);
}

TEST_CASE("truncated high norm: metric-only state matches hand assembly") {
  // G = delta + h homogeneous, everything else at the fixed point; at M = 0
  // the norm is a^{2/3} ||G||_{band 1} + ||G - delta||_{H^0}
  // + ||Ginv - delta||_{H^0} + the three sup contributions
  const double a = 0.6;
  const double a23 = std::pow(a, 2.0 / 3.0);
  Mat3 h = mzero3();
  h[0][0] = 0.02;
  h[1][1] = -0.01;
  h[0][1] = h[1][0] = 0.005;
  RescaledState s = make_flrw_state(0.0);
  s.G = {identity3() + h};
  s.Ginv = {invert_metric(s.G[0])};

  // hand path: structure-constant expansion of the three Lie derivatives
  double band1_sq = 0.0;
  for (int za = 0; za < 3; ++za) {
    Mat3 lie = mzero3();
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          lie[b][c] += -(2.0 / 3.0) * (eps3(za, b, d) * s.G[0][d][c] +
                                       eps3(za, c, d) * s.G[0][b][d]);
    band1_sq += ddot(lie, lie) * kVolRound3;
  }
  Mat3 dginv = s.Ginv[0] - identity3();
  double expected = a23 * std::sqrt(band1_sq) +
                    std::sqrt(ddot(h, h) * kVolRound3) +
                    std::sqrt(ddot(dginv, dginv) * kVolRound3) +
                    std::sqrt(ddot(h, h)) + std::sqrt(ddot(dginv, dginv));
  CHECK(high_norm_truncated(s, 0, a) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("truncated high norm scales linearly at leading order") {
  const double eps = 1e-6;
  auto build = [&](double scale) {
    RescaledState s = make_flrw_state(0.0);
    Mat3 h = mzero3();
    h[0][0] = scale;
    h[1][2] = h[2][1] = 0.5 * scale;
    s.G = {identity3() + h};
    s.Ginv = {invert_metric(s.G[0])};
    Mat3 k = mzero3();
    k[0][0] = scale;
    k[1][1] = -scale;
    s.Khat = {k};
    s.psi = {0.3 * scale};
    s.Psi = {-0.2 * scale};
    s.Phi = {{scale, 0.0, 0.0}};
    return s;
  };
  double h1 = high_norm_truncated(build(eps), 2, 0.8);
  double h2 = high_norm_truncated(build(0.5 * eps), 2, 0.8);
  CHECK(h1 / h2 == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("checkpoints survive the round trip") {
  std::mt19937 rng(17);
  RescaledState s = random_homogeneous(rng);
  s.t = 0.625;
  save_state(s, "/tmp/state_h.json");
  RescaledState r = load_state("/tmp/state_h.json");
  CHECK(r.t == s.t);
  CHECK(r.homogeneous);
  CHECK(max_abs(r.G[0] - s.G[0]) == 0.0);
  CHECK(max_abs(r.Khat[0] - s.Khat[0]) == 0.0);
  CHECK(r.psi[0] == s.psi[0]);
  CHECK(r.Phi[0][2] == s.Phi[0][2]);
  // Ginv is rebuilt on load, so it matches to inversion accuracy
  CHECK(max_abs(r.Ginv[0] - s.Ginv[0]) < 1e-14);

  RescaledState sg = random_grid_state(rng);
  save_state(sg, "/tmp/state_g.json");
  RescaledState rg = load_state("/tmp/state_g.json");
  CHECK(rg.grid.n_eta == sg.grid.n_eta);
  CHECK(rg.grid.fd_order == sg.grid.fd_order);
  double worst = 0.0;
  for (std::size_t i = 0; i < sg.npoints(); ++i)
    worst = std::max(worst, max_abs(rg.G[i] - sg.G[i]));
  CHECK(worst == 0.0);

  // malformed input is a config error
  {
    std::FILE* f = std::fopen("/tmp/state_bad.json", "w");
    std::fputs("{\"schema\": \"state-checkpoint-v1\", \"data\": oops", f);
    std::fclose(f);
  }
  try {
    load_state("/tmp/state_bad.json");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::ConfigError);
  }
}
