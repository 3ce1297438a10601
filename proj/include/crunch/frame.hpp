#pragma once

#include "crunch/tensor.hpp"

// Pointwise tensor calculus in the global orthonormal frame Z_(1..3) on S^3
// with bracket relations [Z_A, Z_B] = (2/3) eps_ABC Z_C.  Spatial derivative
// information enters only through the supplied frame derivatives (ZG, ZZG,
// Zxi, ...); the homogeneous path passes zeros there, a grid passes finite
// differences.  Index conventions:
//   connection_low[A][C][B]   = Gamma_{ACB}
//   connection_mixed[A][D][B] = Gamma_A{}^D{}_B = (G^-1)^{CD} Gamma_{ACB}
//   nabla_*[A][...]           = covariant derivative along Z_A
//   ZZG[E][A][B][C]           = Z_E Z_A G_{BC}

namespace crunch {

// Inverse of a symmetric positive metric; throws SingularMetric if the
// determinant is below 1e-12 relative to the metric's scale cubed.
Mat3 invert_metric(const Mat3& g);

Ten3 connection_low(const Mat3& g, const Ten3& zg);
Ten3 connection_mixed(const Mat3& ginv, const Ten3& gamma_low);

struct Curvature {
  Ten4 riem;       // Riem_{ABCD}, all indices down
  Mat3 ric;        // Ric_{AC}
  Mat3 ric_sharp;  // (G^-1 Ric)^A_C
  double scalar = 0.0;
};

Curvature curvature_frame(const Mat3& g, const Mat3& ginv, const Ten3& zg,
                          const Ten4& zzg);

// Frame components of the Lie derivative along Z_A: the Z_A-derivative of
// the components plus one structure-constant correction per index slot.
// The same rule applies to upper and lower slots.
Vec3 lie_frame_vec(int a, const Vec3& xi, const Vec3& zxi);
Mat3 lie_frame_mat(int a, const Mat3& xi, const Mat3& zxi);
Ten3 lie_frame_ten3(int a, const Ten3& xi, const Ten3& zxi);

// Covariant derivatives; the first output slot is the derivative direction.
Mat3 nabla_oneform(const Ten3& gm, const Vec3& w, const Mat3& zw);
Mat3 nabla_vector(const Ten3& gm, const Vec3& v, const Mat3& zv);
Ten3 nabla_mat11(const Ten3& gm, const Mat3& k, const Ten3& zk);
Ten3 nabla_mat02(const Ten3& gm, const Mat3& h, const Ten3& zh);
Ten4 nabla_ten03(const Ten3& gm, const Ten3& t, const Ten4& zt);
Mat3 hessian_scalar(const Ten3& gm, const Vec3& zf, const Mat3& zzf);

// Contractions.
Vec3 div_mat11(const Ten3& nk);                        // (div K)_j
Vec3 div_sharp_mat11(const Mat3& ginv, const Ten3& nk);  // (div# K)^i
double div_oneform(const Mat3& ginv, const Mat3& nw);
double div_vector(const Mat3& nv);
Vec3 div_mat02(const Mat3& ginv, const Ten3& nh);
Mat3 laplacian_mat02(const Mat3& ginv, const Ten4& nnh);

// Metric norms and inner products.
double norm2_oneform(const Mat3& ginv, const Vec3& w);
double norm2_mat11(const Mat3& g, const Mat3& ginv, const Mat3& k);
double norm2_mat02(const Mat3& ginv, const Mat3& h);
double ip_mat11(const Mat3& g, const Mat3& ginv, const Mat3& s, const Mat3& t);
double ip_ten03(const Mat3& ginv, const Ten3& s, const Ten3& t);
inline double norm2_ten03(const Mat3& ginv, const Ten3& t) {
  return ip_ten03(ginv, t, t);
}

// First variation of G -> Ric#(G) in the direction h (symmetric (0,2)),
// given nnh[C][A][B][D] = nabla_C nabla_A h_{BD} at the base metric.
Mat3 ric_sharp_first_variation(const Mat3& g, const Mat3& ginv,
                               const Mat3& ric, double scalar, const Mat3& h,
                               const Ten4& nnh);

// Connection response to a metric velocity:
// delta_gamma[A][C][B] = (1/2)(G^-1)^{CD}(nabla_A m_{BD} + nabla_B m_{AD}
//                         - nabla_D m_{AB}) for m = time derivative of G,
// with nm[A][B][C] = nabla_A m_{BC}.
Ten3 delta_gamma(const Mat3& ginv, const Ten3& nm);

}  // namespace crunch
