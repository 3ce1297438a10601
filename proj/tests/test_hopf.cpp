#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include "crunch/error.hpp"
#include "crunch/frame.hpp"
#include "crunch/hopf.hpp"

using namespace crunch;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kVolRound = 54.0 * kPi * kPi;

using Point4 = std::array<double, 4>;

double dot4(const Point4& u, const Point4& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3];
}

// ambient test functions, smooth on all of R^4 so every grid sample descends
// from a smooth function on the sphere
double poly_a(const Point4& y) {
  return (y[0] * y[2] + y[1] * y[3]) / 9.0 + (y[0] + y[3]) / 3.0;
}
double poly_b(const Point4& y) { return y[0] * y[1] / 9.0 + y[2] / 3.0; }

ScalarField sample_ambient(const HopfGrid& g,
                           const std::function<double(const Point4&)>& fn) {
  ScalarField f(g.size());
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k)
        f[g.idx(i, j, k)] = fn(embed(g.eta(i), g.xi1(j), g.xi2(k)));
  return f;
}

// exact Z_a derivative of an ambient polynomial: directional derivative along
// the linear frame field, evaluated termwise
double exact_Z_poly_a(int a, const Point4& y) {
  Point4 v = frame_vector(a, y);
  return (v[0] * y[2] + y[0] * v[2] + v[1] * y[3] + y[1] * v[3]) / 9.0 +
         (v[0] + v[3]) / 3.0;
}

double max_abs_diff(const HopfGrid& g, const ScalarField& f,
                    const std::function<double(const Point4&)>& ref) {
  double m = 0.0;
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k)
        m = std::max(m, std::abs(f[g.idx(i, j, k)] -
                                 ref(embed(g.eta(i), g.xi1(j), g.xi2(k)))));
  return m;
}

// bracket defect of the discrete operators on a smooth field
double bracket_error(const HopfGrid& g, const ScalarField& f) {
  ScalarField d12 = apply_Z(g, 0, apply_Z(g, 1, f));
  ScalarField d21 = apply_Z(g, 1, apply_Z(g, 0, f));
  ScalarField d3 = apply_Z(g, 2, f);
  double m = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n)
    m = std::max(m, std::abs(d12[n] - d21[n] - (2.0 / 3.0) * d3[n]));
  return m;
}

}  // namespace

TEST_CASE("embedding hits the chart poles and stays on the radius-3 sphere") {
  Point4 p0 = embed(0.0, 0.0, 2.5);
  CHECK(p0[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(std::abs(p0[1]) < 1e-14);
  CHECK(std::abs(p0[2]) < 1e-14);
  CHECK(std::abs(p0[3]) < 1e-14);
  Point4 p1 = embed(0.5 * kPi, 1.3, 0.0);
  CHECK(p1[2] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(std::abs(p1[0]) < 1e-15);
  CHECK(std::abs(p1[3]) < 1e-15);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ue(0.0, 0.5 * kPi), ux(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 50; ++trial) {
    Point4 y = embed(ue(rng), ux(rng), ux(rng));
    CHECK(dot4(y, y) == doctest::Approx(9.0).epsilon(1e-14));
  }

  CHECK_THROWS_AS(embed(-0.1, 0, 0), Error);
  CHECK_THROWS_AS(embed(0.5 * kPi + 0.01, 0, 0), Error);
}

TEST_CASE("frame vectors are tangent, orthonormal, and close the algebra") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ue(0.0, 0.5 * kPi), ux(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 20; ++trial) {
    Point4 y = embed(ue(rng), ux(rng), ux(rng));
    for (int a = 0; a < 3; ++a) {
      Point4 va = frame_vector(a, y);
      CHECK(std::abs(dot4(va, y)) < 1e-13);
      for (int b = 0; b < 3; ++b) {
        // the round metric is the induced one, so ambient dot products give
        // round inner products directly
        double ip = dot4(va, frame_vector(b, y));
        CHECK(ip == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
      }
    }
    // frame fields are linear in y, so their brackets are exact matrix
    // commutators; check [Z_a, Z_b] = (2/3) eps_abc Z_c componentwise
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        Point4 za = frame_vector(a, y), zb = frame_vector(b, y);
        // derivative of the linear field Z_b along Z_a is Z_b evaluated at za
        Point4 dzb = frame_vector(b, za), dza = frame_vector(a, zb);
        for (int m = 0; m < 4; ++m) {
          double lhs = dzb[m] - dza[m];
          double rhs = 0.0;
          for (int c = 0; c < 3; ++c)
            rhs += (2.0 / 3.0) * eps3(a, b, c) * frame_vector(c, y)[m];
          CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13).scale(1.0));
        }
      }
  }
}

TEST_CASE("chart coefficients push forward to the ambient frame vectors") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> ue(0.05, 0.5 * kPi - 0.05),
      ux(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 20; ++trial) {
    double eta = ue(rng), xi1 = ux(rng), xi2 = ux(rng);
    double ce = std::cos(eta), se = std::sin(eta);
    double c1 = std::cos(xi1), s1 = std::sin(xi1);
    double c2 = std::cos(xi2), s2 = std::sin(xi2);
    Point4 d_eta = {-3 * se * c1, -3 * se * s1, 3 * ce * c2, 3 * ce * s2};
    Point4 d_xi1 = {-3 * ce * s1, 3 * ce * c1, 0, 0};
    Point4 d_xi2 = {0, 0, -3 * se * s2, 3 * se * c2};
    Point4 y = embed(eta, xi1, xi2);
    for (int a = 0; a < 3; ++a) {
      auto cf = frame_chart_coefficients(a, eta, xi1, xi2);
      Point4 v = frame_vector(a, y);
      for (int m = 0; m < 4; ++m) {
        double push = cf[0] * d_eta[m] + cf[1] * d_xi1[m] + cf[2] * d_xi2[m];
        CHECK(push == doctest::Approx(v[m]).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("frame expansion reconstructs the round inverse metric in chart") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ue(0.05, 0.5 * kPi - 0.05),
      ux(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 20; ++trial) {
    double eta = ue(rng), xi1 = ux(rng), xi2 = ux(rng);
    double inv[3] = {1.0 / 9.0, 1.0 / (9.0 * std::cos(eta) * std::cos(eta)),
                     1.0 / (9.0 * std::sin(eta) * std::sin(eta))};
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = 0; nu < 3; ++nu) {
        double sum = 0.0;
        for (int a = 0; a < 3; ++a) {
          auto cf = frame_chart_coefficients(a, eta, xi1, xi2);
          sum += cf[mu] * cf[nu];
        }
        double want = mu == nu ? inv[mu] : 0.0;
        CHECK(sum == doctest::Approx(want).epsilon(1e-12).scale(1.0));
      }
  }
}

TEST_CASE("grid construction validates sizes, parity, and stencil support") {
  HopfGrid g = make_hopf_grid(8, 12, 10, 4);
  CHECK(g.size() == 8u * 12u * 10u);
  CHECK(g.h_eta == doctest::Approx(0.5 * kPi / 8).epsilon(1e-15));
  CHECK(g.eta(0) == doctest::Approx(0.5 * g.h_eta).epsilon(1e-15));
  CHECK(g.eta(7) == doctest::Approx(0.5 * kPi - 0.5 * g.h_eta).epsilon(1e-15));
  CHECK(g.xi1(6) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(g.idx(1, 2, 3) == (1u * 12 + 2) * 10 + 3);

  CHECK_THROWS_AS(make_hopf_grid(8, 9, 10, 2), Error);   // odd xi1
  CHECK_THROWS_AS(make_hopf_grid(8, 12, 10, 3), Error);  // unsupported order
  CHECK_THROWS_AS(make_hopf_grid(0, 12, 10, 2), Error);  // no eta rows
  CHECK_THROWS_AS(make_hopf_grid(8, 2, 10, 4), Error);   // too small for depth
}

TEST_CASE("ghost continuation matches the smooth extension through the axes") {
  // the identification behind the ghost rules, first at the chart level
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> ue(0.01, 0.5 * kPi - 0.01),
      ux(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 10; ++trial) {
    double eta = ue(rng), xi1 = ux(rng), xi2 = ux(rng);
    // y(-eta, xi1, xi2) formula equals y(eta, xi1, xi2 + pi)
    Point4 lhs = {3 * std::cos(-eta) * std::cos(xi1),
                  3 * std::cos(-eta) * std::sin(xi1),
                  3 * std::sin(-eta) * std::cos(xi2),
                  3 * std::sin(-eta) * std::sin(xi2)};
    Point4 rhs = embed(eta, xi1, xi2 + kPi);
    for (int m = 0; m < 4; ++m)
      CHECK(lhs[m] == doctest::Approx(rhs[m]).epsilon(1e-13).scale(1.0));
    // y(pi/2 + eta, xi1, xi2) equals y(pi/2 - eta, xi1 + pi, xi2)
    double over = 0.5 * kPi + eta;
    Point4 lhs2 = {3 * std::cos(over) * std::cos(xi1),
                   3 * std::cos(over) * std::sin(xi1),
                   3 * std::sin(over) * std::cos(xi2),
                   3 * std::sin(over) * std::sin(xi2)};
    Point4 rhs2 = embed(0.5 * kPi - eta, xi1 + kPi, xi2);
    for (int m = 0; m < 4; ++m)
      CHECK(lhs2[m] == doctest::Approx(rhs2[m]).epsilon(1e-13).scale(1.0));
  }

  // then at the grid level: ghost values of an ambient sample equal the
  // ambient function at the continued coordinates
  HopfGrid g = make_hopf_grid(6, 8, 8, 2);
  ScalarField f = sample_ambient(g, poly_a);
  for (int j = 0; j < g.n_xi1; ++j)
    for (int k = 0; k < g.n_xi2; ++k)
      for (int m = 1; m <= 2; ++m) {
        double below = ghost_value(g, f, -m, j, k);
        Point4 yb = embed(g.eta(m - 1), g.xi1(j), g.xi2(k) + kPi);
        CHECK(below == doctest::Approx(poly_a(yb)).epsilon(1e-13).scale(1.0));
        // row n-1+m reflects to row 2n-1-(n-1+m) = n-m with xi1 shifted
        double above = ghost_value(g, f, g.n_eta - 1 + m, j, k);
        Point4 ya = embed(g.eta(g.n_eta - m), g.xi1(j) + kPi, g.xi2(k));
        CHECK(above == doctest::Approx(poly_a(ya)).epsilon(1e-13).scale(1.0));
      }
}

TEST_CASE("directional derivatives converge at the stencil order") {
  for (int order : {2, 4}) {
    double err[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
      int n = 16 << lvl;
      HopfGrid g = make_hopf_grid(n, n, n, order);
      ScalarField c(g.size(), 4.2);
      ScalarField dc = apply_Z(g, 1, c);
      for (double v : dc) CHECK(v == 0.0);

      ScalarField f = sample_ambient(g, poly_a);
      double worst = 0.0;
      for (int a = 0; a < 3; ++a) {
        ScalarField df = apply_Z(g, a, f);
        worst = std::max(
            worst, max_abs_diff(g, df, [a](const Point4& y) {
              return exact_Z_poly_a(a, y);
            }));
      }
      err[lvl] = worst;
    }
    double fitted = std::log2(err[0] / err[1]);
    CHECK(fitted == doctest::Approx(order).epsilon(0.15));
  }
}

TEST_CASE("discrete frame fields close the bracket at the stencil order") {
  for (int order : {2, 4}) {
    HopfGrid g16 = make_hopf_grid(16, 16, 16, order);
    HopfGrid g32 = make_hopf_grid(32, 32, 32, order);
    double e16 = bracket_error(g16, sample_ambient(g16, poly_a));
    double e32 = bracket_error(g32, sample_ambient(g32, poly_a));
    double fitted = std::log2(e16 / e32);
    CHECK(fitted == doctest::Approx(order).epsilon(0.15));
    CHECK(e32 < (order == 2 ? 2e-2 : 1e-3));
  }
}

TEST_CASE("fields carrying the degenerate angle at an axis are rejected") {
  HopfGrid g = make_hopf_grid(16, 16, 16, 2);
  ScalarField bad(g.size());
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_xi1; ++j)
      for (int k = 0; k < g.n_xi2; ++k)
        bad[g.idx(i, j, k)] = std::cos(g.xi2(k));
  CHECK_THROWS_AS(apply_Z(g, 0, bad), Error);
  try {
    apply_Z(g, 0, bad);
  } catch (const Error& e) {
    CHECK(e.kind == ErrKind::PoleRegularityViolation);
  }
  // smooth samples pass the same gate
  CHECK(pole_regularity_ratio(g, sample_ambient(g, poly_b)) < 20.0);
}

TEST_CASE("round volume quadrature: exact row measure, second-order fields") {
  HopfGrid g = make_hopf_grid(16, 16, 16, 2);
  ScalarField one(g.size(), 1.0);
  CHECK(integrate_round(g, one) ==
        doctest::Approx(kVolRound).epsilon(1e-13));

  // odd coordinate functions integrate to zero
  ScalarField y0 = sample_ambient(g, [](const Point4& y) { return y[0]; });
  CHECK(std::abs(integrate_round(g, y0)) < 1e-12 * kVolRound);

  // sum of squared coordinates is the constant 9
  ScalarField r2 = sample_ambient(g, [](const Point4& y) { return dot4(y, y); });
  CHECK(integrate_round(g, r2) ==
        doctest::Approx(9.0 * kVolRound).epsilon(1e-13));

  // squared coordinates are even under the eta reflection that maps the node
  // set to itself, so their row errors cancel exactly as well
  ScalarField q = sample_ambient(g, [](const Point4& y) {
    return y[0] * y[0];
  });
  CHECK(integrate_round(g, q) == doctest::Approx(2.25 * kVolRound).epsilon(1e-12));

  // a reflection-asymmetric smooth field shows the second-order eta rate
  auto bump = [](const Point4& y) { return std::exp(y[2] / 3.0); };
  double v[3];
  for (int lvl = 0; lvl < 3; ++lvl) {
    HopfGrid gr = make_hopf_grid(16 << lvl, 8, 8, 2);
    v[lvl] = integrate_round(gr, sample_ambient(gr, bump));
  }
  double fitted = std::log2((v[0] - v[1]) / (v[1] - v[2]));
  CHECK(fitted == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("interpolation reproduces smooth fields between grids") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ue(0.0, 0.5 * kPi), ux(0.0, 2.0 * kPi);
  double err[2];
  for (int lvl = 0; lvl < 2; ++lvl) {
    int n = 16 << lvl;
    HopfGrid g = make_hopf_grid(n, n, n, 2);
    ScalarField f = sample_ambient(g, poly_a);
    std::mt19937 draw(29);  // same query points on both levels
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
      double eta = ue(draw), xi1 = ux(draw), xi2 = ux(draw);
      double got = sample_field(g, f, eta, xi1, xi2);
      worst = std::max(std::abs(got - poly_a(embed(eta, xi1, xi2))), worst);
    }
    err[lvl] = worst;
  }
  CHECK(err[0] < 1e-4);
  CHECK(err[0] / err[1] > 20.0);  // degree-5 stencil: roughly 6th order
}

TEST_CASE("grid curvature pipeline agrees with the conformal formula") {
  // G = e^{2 phi} * round with smooth ambient phi; scalar curvature of a
  // conformal 3-metric: R = e^{-2 phi} (2/3 - 4 Lap phi - 2 |grad phi|^2),
  // Laplacian and gradient taken in the round metric (frame Laplacian of a
  // scalar is the plain sum of repeated frame derivatives there)
  double rel[2];
  for (int lvl = 0; lvl < 2; ++lvl) {
    int n = 16 << lvl;
    HopfGrid g = make_hopf_grid(n, n, n, 2);
    ScalarField phi = sample_ambient(g, [](const Point4& y) {
      return 0.2 * (y[0] * y[2] + y[1] * y[3]) / 9.0 + 0.1 * y[3] / 3.0;
    });
    std::array<ScalarField, 3> zphi, zzphi;
    for (int a = 0; a < 3; ++a) zphi[a] = apply_Z(g, a, phi);
    for (int a = 0; a < 3; ++a) zzphi[a] = apply_Z(g, a, zphi[a]);

    // component fields of G and their Z-derivatives
    std::array<std::array<ScalarField, 3>, 3> gc;
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        gc[b][c].resize(g.size());
        for (std::size_t m = 0; m < g.size(); ++m)
          gc[b][c][m] = (b == c) ? std::exp(2.0 * phi[m]) : 0.0;
      }
    std::array<std::array<std::array<ScalarField, 3>, 3>, 3> zg;
    std::array<std::array<std::array<std::array<ScalarField, 3>, 3>, 3>, 3> zzg;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) zg[a][b][c] = apply_Z(g, a, gc[b][c]);
    for (int e = 0; e < 3; ++e)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            zzg[e][a][b][c] = apply_Z(g, e, zg[a][b][c]);

    double worst = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
      Mat3 G;
      Ten3 ZG;
      Ten4 ZZG;
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          G[b][c] = gc[b][c][m];
          for (int a = 0; a < 3; ++a) {
            ZG[a][b][c] = zg[a][b][c][m];
            for (int e = 0; e < 3; ++e) ZZG[e][a][b][c] = zzg[e][a][b][c][m];
          }
        }
      Curvature cur = curvature_frame(G, invert_metric(G), ZG, ZZG);
      double lap = zzphi[0][m] + zzphi[1][m] + zzphi[2][m];
      double grad2 = zphi[0][m] * zphi[0][m] + zphi[1][m] * zphi[1][m] +
                     zphi[2][m] * zphi[2][m];
      double want =
          std::exp(-2.0 * phi[m]) * (2.0 / 3.0 - 4.0 * lap - 2.0 * grad2);
      worst = std::max(worst, std::abs(cur.scalar - want));
    }
    rel[lvl] = worst;
  }
  CHECK(rel[0] < 5e-2);
  CHECK(std::log2(rel[0] / rel[1]) == doctest::Approx(2.0).epsilon(0.3));
}
