#pragma once

// Reference computations that share no code path with the library beyond
// its data types: direct sums instead of FFTs, brute-force lattice
// enumeration instead of integer bucketing, Bessel functions from <cmath>.

#include "dirac3/dirac3.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace testsupport {

using dirac3::cplx;
using dirac3::Mat2;
using dirac3::Spinor;
using dirac3::Vector3;

inline const cplx kI{0.0, 1.0};

inline Mat2 sigma(int j) {
  Mat2 s;
  if (j == 0) s << 0, 1, 1, 0;
  if (j == 1) s << 0, -kI, kI, 0;
  if (j == 2) s << 1, 0, 0, -1;
  return s;
}

/// c(v) = i (v1 s1 + v2 s2 + v3 s3), written out entrywise.
inline Mat2 clifford(const Vector3& v) {
  Mat2 m;
  m << kI * v[2], kI * v[0] + v[1], kI * v[0] - v[1], -kI * v[2];
  return m;
}

inline Spinor quaternionic_j(const Spinor& s) { return {-std::conj(s[1]), std::conj(s[0])}; }

inline cplx inner(const Spinor& a, const Spinor& b) { return a[0] * std::conj(b[0]) + a[1] * std::conj(b[1]); }

struct Line {
  double lambda;
  int mult_c;
};

/// Flat spectrum by enumerating kappa in Z^3 + delta/2 and diagonalizing each
/// 2x2 symbol numerically; values closer than 1e-9 are merged.
inline std::vector<Line> lattice_spectrum(const dirac3::SpinStructure& spin, double lambda_max) {
  std::vector<double> values;
  const int r = static_cast<int>(lambda_max) + 2;
  for (int a = -r; a <= r; ++a) {
    for (int b = -r; b <= r; ++b) {
      for (int c = -r; c <= r; ++c) {
        const Vector3 k(a + 0.5 * spin[0], b + 0.5 * spin[1], c + 0.5 * spin[2]);
        Eigen::SelfAdjointEigenSolver<Mat2> es(-(k[0] * sigma(0) + k[1] * sigma(1) + k[2] * sigma(2)));
        for (int i = 0; i < 2; ++i) {
          if (std::abs(es.eigenvalues()[i]) <= lambda_max + 1e-9) values.push_back(es.eigenvalues()[i]);
        }
      }
    }
  }
  std::sort(values.begin(), values.end());
  std::vector<Line> out;
  for (double v : values) {
    if (!out.empty() && std::abs(v - out.back().lambda) < 1e-9) {
      ++out.back().mult_c;
    } else {
      out.push_back({v, 1});
    }
  }
  return out;
}

/// phi(x) by direct summation over modes.
inline Spinor value(const dirac3::SpinorField& phi, const Vector3& x) {
  Spinor s = Spinor::Zero();
  const auto& m = *phi.modes();
  for (std::size_t i = 0; i < m.size(); ++i) s += std::exp(kI * m.kappa(i).dot(x)) * phi.coefficient(i);
  return s;
}

/// (D phi)(x) = sum c(e_j) d_j phi, summed directly.
inline Spinor dirac_value(const dirac3::SpinorField& phi, const Vector3& x) {
  Spinor s = Spinor::Zero();
  const auto& m = *phi.modes();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vector3 k = m.kappa(i);
    s += std::exp(kI * k.dot(x)) * (kI * (clifford(k) * phi.coefficient(i)));
  }
  return s;
}

inline double factor_value(const dirac3::ConformalFactor& f, const Vector3& x) {
  cplx v = 0.0;
  for (const auto& [m, c] : f.terms()) v += c * std::exp(kI * Vector3(m[0], m[1], m[2]).dot(x));
  return v.real();
}

inline Vector3 factor_gradient(const dirac3::ConformalFactor& f, const Vector3& x) {
  Vector3 g = Vector3::Zero();
  for (const auto& [m, c] : f.terms()) {
    const Vector3 mv(m[0], m[1], m[2]);
    g += (kI * c * std::exp(kI * mv.dot(x))).real() * mv;
  }
  return g;
}

/// Uniform-grid points of [0, 2pi)^3.
template <class Fn>
void for_grid(int g, Fn&& fn) {
  const double h = 2.0 * std::numbers::pi / g;
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      for (int c = 0; c < g; ++c) fn(Vector3(a * h, b * h, c * h));
    }
  }
}

/// Normalized integral of <phi, psi>(x) by the trapezoid rule (exact for
/// band-limited integrands when g exceeds the bandwidth of the product).
inline cplx quadrature_inner(const dirac3::SpinorField& phi, const dirac3::SpinorField& psi, int g) {
  cplx sum = 0.0;
  for_grid(g, [&](const Vector3& x) { sum += inner(value(phi, x), value(psi, x)); });
  return sum / static_cast<double>(g * g * g);
}

/// -lambda int f <phi_j, phi_i> by quadrature, entry (i, j).
inline Eigen::MatrixXcd quadrature_cluster_matrix(double lambda, const std::vector<dirac3::SpinorField>& basis,
                                                  const dirac3::ConformalFactor& f, int g) {
  const auto p = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(p, p);
  std::vector<Spinor> v(basis.size());
  for_grid(g, [&](const Vector3& x) {
    const double fx = factor_value(f, x);
    for (std::size_t i = 0; i < basis.size(); ++i) v[i] = value(basis[i], x);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        out(i, j) += fx * inner(v[static_cast<std::size_t>(j)], v[static_cast<std::size_t>(i)]);
      }
    }
  });
  return -lambda * out / static_cast<double>(g * g * g);
}

/// Fourier coefficient of e^{t f} at m by a direct trapezoid sum.
inline cplx exp_coefficient(const dirac3::ConformalFactor& f, double t, const dirac3::IntVec3& m, int g) {
  cplx sum = 0.0;
  const Vector3 mv(m[0], m[1], m[2]);
  for_grid(g, [&](const Vector3& x) { sum += std::exp(t * factor_value(f, x)) * std::exp(-kI * mv.dot(x)); });
  return sum / static_cast<double>(g * g * g);
}

/// e^{2tf} D^t phi at x, from D(e^{tf} phi) = e^{tf}(D phi + t c(grad f) phi).
inline Spinor substituted_value(const dirac3::ConformalFactor& f, double t, const dirac3::SpinorField& phi,
                                const Vector3& x) {
  return std::exp(t * factor_value(f, x)) *
         (dirac_value(phi, x) + t * (clifford(factor_gradient(f, x)) * value(phi, x)));
}

}  // namespace testsupport
