#pragma once

// Spinor algebra of three-dimensional Euclidean space: Sigma = C^2 with
// Clifford multiplication c(e_j) = i*sigma_j and the quaternionic
// structure J(z1, z2) = (-conj z2, conj z1).
//
// Conventions fixed here and used everywhere downstream:
//   * herm_inner(a, b) = a1*conj(b1) + a2*conj(b2), antilinear in b;
//   * c(v)^2 = -|v|^2;
//   * the flat Dirac operator sum_j c(e_j) d_j acts on e^{i<kappa,x>} u as
//     the Hermitian symbol -sigma.kappa.

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace dirac3 {

using cplx = std::complex<double>;
using Spinor = Eigen::Vector2cd;
using Vector3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2cd;

inline constexpr cplx kI{0.0, 1.0};

/// Pauli matrix sigma_{j+1}, j in {0, 1, 2}.
inline const Mat2& pauli(int j) {
  static const std::array<Mat2, 3> sigma = [] {
    std::array<Mat2, 3> s;
    s[0] << 0.0, 1.0, 1.0, 0.0;
    s[1] << 0.0, -kI, kI, 0.0;
    s[2] << 1.0, 0.0, 0.0, -1.0;
    return s;
  }();
  return sigma.at(static_cast<std::size_t>(j));
}

/// sigma . v
inline Mat2 sigma_dot(const Vector3& v) {
  return v[0] * pauli(0) + v[1] * pauli(1) + v[2] * pauli(2);
}

/// Matrix of Clifford multiplication by v: i * sigma.v.
inline Mat2 clifford_matrix(const Vector3& v) { return kI * sigma_dot(v); }

inline Spinor clifford_mul(const Vector3& v, const Spinor& s) {
  return clifford_matrix(v) * s;
}

/// Quaternionic structure. Antilinear, J^2 = -1, commutes with c(v) for real v.
inline Spinor apply_J(const Spinor& s) {
  return Spinor(-std::conj(s[1]), std::conj(s[0]));
}

/// Pointwise Hermitian product, antilinear in the second slot.
inline cplx herm_inner(const Spinor& a, const Spinor& b) {
  return a[0] * std::conj(b[0]) + a[1] * std::conj(b[1]);
}

inline double norm2(const Spinor& s) { return s.squaredNorm(); }

/// Mode symbol of the flat Dirac operator, -sigma.kappa.
/// Hermitian, traceless, eigenvalues +-|kappa|.
inline Mat2 dirac_symbol(const Vector3& kappa) { return -sigma_dot(kappa); }

}  // namespace dirac3
