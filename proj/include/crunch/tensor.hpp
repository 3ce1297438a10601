#pragma once

#include <array>
#include <cmath>

// Fixed-size frame-component containers.  All tensor operations in this
// project act on components relative to the global orthonormal frame
// Z_(1..3), so everything is 3-dimensional and index conventions are spelled
// out at the call sites: Mat3 M[i][j] holds a (1,1) tensor M^i_j, a (0,2)
// tensor M_ij, or a (2,0) tensor M^ij depending on context; Ten3 T[a][b][c]
// usually holds a covariant derivative (first slot = direction).

namespace crunch {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;
using Ten3 = std::array<Mat3, 3>;
using Ten4 = std::array<Ten3, 3>;

inline constexpr Vec3 vzero3() { return {0.0, 0.0, 0.0}; }
inline constexpr Mat3 mzero3() { return {vzero3(), vzero3(), vzero3()}; }
inline constexpr Ten3 tzero3() { return {mzero3(), mzero3(), mzero3()}; }
inline constexpr Ten4 t4zero() { return {tzero3(), tzero3(), tzero3()}; }

inline constexpr Mat3 identity3() {
  Mat3 m = mzero3();
  m[0][0] = m[1][1] = m[2][2] = 1.0;
  return m;
}

// Levi-Civita symbol eps_{abc}.
inline constexpr double eps3(int a, int b, int c) {
  return static_cast<double>((a - b) * (b - c) * (c - a)) / 2.0;
}

inline Vec3 operator+(const Vec3& x, const Vec3& y) {
  return {x[0] + y[0], x[1] + y[1], x[2] + y[2]};
}
inline Vec3 operator-(const Vec3& x, const Vec3& y) {
  return {x[0] - y[0], x[1] - y[1], x[2] - y[2]};
}
inline Vec3 operator*(double s, const Vec3& x) {
  return {s * x[0], s * x[1], s * x[2]};
}

inline Mat3 operator+(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (int i = 0; i < 3; ++i) r[i] = x[i] + y[i];
  return r;
}
inline Mat3 operator-(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (int i = 0; i < 3; ++i) r[i] = x[i] - y[i];
  return r;
}
inline Mat3 operator*(double s, const Mat3& x) {
  Mat3 r;
  for (int i = 0; i < 3; ++i) r[i] = s * x[i];
  return r;
}

inline Ten3 operator+(const Ten3& x, const Ten3& y) {
  Ten3 r;
  for (int i = 0; i < 3; ++i) r[i] = x[i] + y[i];
  return r;
}
inline Ten3 operator-(const Ten3& x, const Ten3& y) {
  Ten3 r;
  for (int i = 0; i < 3; ++i) r[i] = x[i] - y[i];
  return r;
}
inline Ten3 operator*(double s, const Ten3& x) {
  Ten3 r;
  for (int i = 0; i < 3; ++i) r[i] = s * x[i];
  return r;
}

// (A·B)^i_j = A^i_a B^a_j -- plain matrix product in component form.
inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 r = mzero3();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline Vec3 matvec(const Mat3& a, const Vec3& v) {
  Vec3 r = vzero3();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r[i] += a[i][k] * v[k];
  return r;
}

inline Mat3 transpose(const Mat3& a) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  return r;
}

inline Mat3 sym_part(const Mat3& a) { return 0.5 * (a + transpose(a)); }

inline double trace(const Mat3& a) { return a[0][0] + a[1][1] + a[2][2]; }

inline Mat3 trace_free(const Mat3& a) {
  const double t = trace(a) / 3.0;
  Mat3 r = a;
  for (int i = 0; i < 3; ++i) r[i][i] -= t;
  return r;
}

inline double dot(const Vec3& x, const Vec3& y) {
  return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
}

// Frobenius double contraction sum_ij A_ij B_ij (index placement agnostic).
inline double ddot(const Mat3& a, const Mat3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a[i][j] * b[i][j];
  return s;
}

inline double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Adjugate-based inverse; caller guards against singular input.
inline Mat3 inverse3(const Mat3& m, double det) {
  Mat3 r;
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return r;
}

// Eigenvalues of a symmetric 3x3 by cyclic Jacobi rotations; used for
// positive-definiteness guards and norm-comparison constants.
inline Vec3 sym_eigenvalues(Mat3 a) {
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        Mat3 b = a;
        for (int k = 0; k < 3; ++k) {
          b[p][k] = c * a[p][k] - s * a[q][k];
          b[q][k] = s * a[p][k] + c * a[q][k];
        }
        a = b;
        for (int k = 0; k < 3; ++k) {
          b[k][p] = c * a[k][p] - s * a[k][q];
          b[k][q] = s * a[k][p] + c * a[k][q];
        }
        a = b;
      }
  }
  Vec3 ev = {a[0][0], a[1][1], a[2][2]};
  if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
  if (ev[1] > ev[2]) std::swap(ev[1], ev[2]);
  if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
  return ev;  // ascending
}

inline double max_abs(const Mat3& a) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::fabs(a[i][j]));
  return m;
}

inline double max_abs(const Vec3& v) {
  return std::max(std::fabs(v[0]), std::max(std::fabs(v[1]), std::fabs(v[2])));
}

}  // namespace crunch
