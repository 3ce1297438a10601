#include "crunch/frame.hpp"

#include <cmath>

#include "crunch/error.hpp"

namespace crunch {

Mat3 invert_metric(const Mat3& g) {
  double scale = max_abs(g);
  double det = det3(g);
  if (!(std::fabs(det) > 1e-12 * scale * scale * scale))
    throw Error(ErrKind::SingularMetric,
                "metric is not invertible within tolerance");
  return inverse3(g, det);
}

Ten3 connection_low(const Mat3& g, const Ten3& zg) {
  Ten3 gl;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      for (int b = 0; b < 3; ++b) {
        double v = 0.5 * (zg[a][b][c] + zg[b][a][c] - zg[c][a][b]);
        for (int d = 0; d < 3; ++d)
          v += (1.0 / 3.0) * (eps3(a, b, d) * g[c][d] - eps3(b, c, d) * g[a][d] -
                              eps3(a, c, d) * g[b][d]);
        gl[a][c][b] = v;
      }
  return gl;
}

Ten3 connection_mixed(const Mat3& ginv, const Ten3& gamma_low) {
  Ten3 gm = tzero3();
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          gm[a][d][b] += ginv[c][d] * gamma_low[a][c][b];
  return gm;
}

Curvature curvature_frame(const Mat3& g, const Mat3& ginv, const Ten3& zg,
                          const Ten4& zzg) {
  Ten3 gl = connection_low(g, zg);
  Ten3 gm = connection_mixed(ginv, gl);

  // Z_E of the lowered connection: the formula is linear in (ZG, G), so its
  // derivative only needs (ZZG, ZG).
  Ten4 zgl;
  for (int e = 0; e < 3; ++e)
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c)
        for (int b = 0; b < 3; ++b) {
          double v = 0.5 * (zzg[e][a][b][c] + zzg[e][b][a][c] -
                            zzg[e][c][a][b]);
          for (int d = 0; d < 3; ++d)
            v += (1.0 / 3.0) *
                 (eps3(a, b, d) * zg[e][c][d] - eps3(b, c, d) * zg[e][a][d] -
                  eps3(a, c, d) * zg[e][b][d]);
          zgl[e][a][c][b] = v;
        }

  // Z_E (G^-1) = -G^-1 (Z_E G) G^-1
  Ten3 zginv;
  for (int e = 0; e < 3; ++e) {
    Mat3 t = matmul(ginv, matmul(zg[e], ginv));
    zginv[e] = -1.0 * t;
  }

  Ten4 zgm = t4zero();
  for (int e = 0; e < 3; ++e)
    for (int a = 0; a < 3; ++a)
      for (int d = 0; d < 3; ++d)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            zgm[e][a][d][b] += zginv[e][c][d] * gl[a][c][b] +
                               ginv[c][d] * zgl[e][a][c][b];

  Curvature out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double v = 0.0;
          for (int e = 0; e < 3; ++e) {
            v += (zgm[b][a][e][c] - zgm[a][b][e][c]) * g[e][d];
            v += gm[a][e][c] * gl[b][d][e] - gm[b][e][c] * gl[a][d][e];
            v += (2.0 / 3.0) * eps3(a, b, e) * gl[e][d][c];
          }
          out.riem[a][b][c][d] = v;
        }

  out.ric = mzero3();
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      for (int b = 0; b < 3; ++b)
        for (int d = 0; d < 3; ++d)
          out.ric[a][c] += ginv[b][d] * out.riem[a][b][c][d];
  out.ric_sharp = matmul(ginv, out.ric);
  out.scalar = ddot(ginv, out.ric);
  return out;
}

namespace {
// subtract (2/3) eps_{A X D} xi[X -> D] for one slot of any valence
template <typename Get, typename Add>
void lie_slot(int a, Get get, Add add) {
  for (int x = 0; x < 3; ++x)
    for (int d = 0; d < 3; ++d) {
      double e = eps3(a, x, d);
      if (e != 0.0) add(x, -(2.0 / 3.0) * e * get(d));
    }
}
}  // namespace

Vec3 lie_frame_vec(int a, const Vec3& xi, const Vec3& zxi) {
  Vec3 out = zxi;
  lie_slot(
      a, [&](int d) { return xi[d]; }, [&](int x, double v) { out[x] += v; });
  return out;
}

Mat3 lie_frame_mat(int a, const Mat3& xi, const Mat3& zxi) {
  Mat3 out = zxi;
  for (int j = 0; j < 3; ++j)
    lie_slot(
        a, [&](int d) { return xi[d][j]; },
        [&](int x, double v) { out[x][j] += v; });
  for (int i = 0; i < 3; ++i)
    lie_slot(
        a, [&](int d) { return xi[i][d]; },
        [&](int x, double v) { out[i][x] += v; });
  return out;
}

Ten3 lie_frame_ten3(int a, const Ten3& xi, const Ten3& zxi) {
  Ten3 out = zxi;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      lie_slot(
          a, [&](int d) { return xi[d][j][k]; },
          [&](int x, double v) { out[x][j][k] += v; });
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      lie_slot(
          a, [&](int d) { return xi[i][d][k]; },
          [&](int x, double v) { out[i][x][k] += v; });
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      lie_slot(
          a, [&](int d) { return xi[i][j][d]; },
          [&](int x, double v) { out[i][j][x] += v; });
  return out;
}

Mat3 nabla_oneform(const Ten3& gm, const Vec3& w, const Mat3& zw) {
  Mat3 out = zw;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 3; ++d) out[a][b] -= gm[a][d][b] * w[d];
  return out;
}

Mat3 nabla_vector(const Ten3& gm, const Vec3& v, const Mat3& zv) {
  Mat3 out = zv;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 3; ++d) out[a][b] += gm[a][b][d] * v[d];
  return out;
}

Ten3 nabla_mat11(const Ten3& gm, const Mat3& k, const Ten3& zk) {
  Ten3 out = zk;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int d = 0; d < 3; ++d)
          out[a][i][j] += gm[a][i][d] * k[d][j] - gm[a][d][j] * k[i][d];
  return out;
}

Ten3 nabla_mat02(const Ten3& gm, const Mat3& h, const Ten3& zh) {
  Ten3 out = zh;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          out[a][b][c] -= gm[a][d][b] * h[d][c] + gm[a][d][c] * h[b][d];
  return out;
}

Ten4 nabla_ten03(const Ten3& gm, const Ten3& t, const Ten4& zt) {
  Ten4 out = zt;
  for (int e = 0; e < 3; ++e)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            out[e][a][b][c] -= gm[e][d][a] * t[d][b][c] +
                               gm[e][d][b] * t[a][d][c] +
                               gm[e][d][c] * t[a][b][d];
  return out;
}

Mat3 hessian_scalar(const Ten3& gm, const Vec3& zf, const Mat3& zzf) {
  Mat3 out = zzf;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 3; ++d) out[a][b] -= gm[a][d][b] * zf[d];
  return out;
}

Vec3 div_mat11(const Ten3& nk) {
  Vec3 out = vzero3();
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 3; ++a) out[j] += nk[a][a][j];
  return out;
}

Vec3 div_sharp_mat11(const Mat3& ginv, const Ten3& nk) {
  Vec3 out = vzero3();
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out[i] += ginv[a][b] * nk[a][i][b];
  return out;
}

double div_oneform(const Mat3& ginv, const Mat3& nw) { return ddot(ginv, nw); }

double div_vector(const Mat3& nv) { return trace(nv); }

Vec3 div_mat02(const Mat3& ginv, const Ten3& nh) {
  Vec3 out = vzero3();
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out[j] += ginv[a][b] * nh[a][b][j];
  return out;
}

Mat3 laplacian_mat02(const Mat3& ginv, const Ten4& nnh) {
  Mat3 out = mzero3();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out[i][j] += ginv[a][b] * nnh[a][b][i][j];
  return out;
}

double norm2_oneform(const Mat3& ginv, const Vec3& w) {
  return dot(w, matvec(ginv, w));
}

double norm2_mat11(const Mat3& g, const Mat3& ginv, const Mat3& k) {
  return ip_mat11(g, ginv, k, k);
}

double norm2_mat02(const Mat3& ginv, const Mat3& h) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          s += ginv[a][c] * ginv[b][d] * h[a][b] * h[c][d];
  return s;
}

double ip_mat11(const Mat3& g, const Mat3& ginv, const Mat3& s,
                const Mat3& t) {
  double v = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          v += g[a][c] * ginv[b][d] * s[a][b] * t[c][d];
  return v;
}

double ip_ten03(const Mat3& ginv, const Ten3& s, const Ten3& t) {
  double v = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d) {
      if (ginv[a][d] == 0.0) continue;
      for (int b = 0; b < 3; ++b)
        for (int e = 0; e < 3; ++e)
          for (int c = 0; c < 3; ++c)
            for (int f = 0; f < 3; ++f)
              v += ginv[a][d] * ginv[b][e] * ginv[c][f] * s[a][b][c] *
                   t[d][e][f];
    }
  return v;
}

Mat3 ric_sharp_first_variation(const Mat3& g, const Mat3& ginv,
                               const Mat3& ric, double scalar, const Mat3& h,
                               const Ten4& nnh) {
  (void)g;
  Mat3 out = mzero3();
  double trh = ddot(ginv, h);
  double ric_h = 0.0;  // (G^-1)^{ab}(G^-1)^{cd} Ric_ac h_bd
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          ric_h += ginv[a][b] * ginv[c][d] * ric[a][c] * h[b][d];

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            v += -0.5 * ginv[i][a] * ginv[c][d] * nnh[c][d][a][j];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            v += -0.5 * ginv[a][b] * ginv[i][c] * nnh[c][j][a][b];
            v += 0.5 * ginv[i][c] * ginv[a][b] * nnh[c][a][b][j];
            v += 0.5 * ginv[i][c] * ginv[a][b] * nnh[j][a][c][b];
            v += -ginv[i][c] * ginv[a][b] * ric[c][j] * h[a][b];
            v += 1.5 * ginv[i][c] * ginv[a][b] * ric[c][a] * h[b][j];
            v += 0.5 * ginv[i][c] * ginv[a][b] * ric[a][j] * h[c][b];
          }
      v += -(i == j ? 1.0 : 0.0) * ric_h;
      v += 0.5 * (i == j ? 1.0 : 0.0) * scalar * trh;
      for (int a = 0; a < 3; ++a) v += -0.5 * ginv[i][a] * scalar * h[a][j];
      out[i][j] = v;
    }
  return out;
}

Ten3 delta_gamma(const Mat3& ginv, const Ten3& nm) {
  Ten3 out = tzero3();
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      for (int b = 0; b < 3; ++b)
        for (int d = 0; d < 3; ++d)
          out[a][c][b] += 0.5 * ginv[c][d] *
                          (nm[a][b][d] + nm[b][a][d] - nm[d][a][b]);
  return out;
}

}  // namespace crunch
