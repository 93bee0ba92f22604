#pragma once

// Hand-rolled generators for the property tests. Every test seeds its own
// mt19937_64 so failures replay exactly.

#include "dirac3/dirac3.hpp"

#include <Eigen/QR>

#include <random>

namespace testsupport {

using dirac3::cplx;

inline cplx normal_c(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

inline dirac3::Spinor spinor(std::mt19937_64& rng) { return {normal_c(rng), normal_c(rng)}; }

inline dirac3::Vector3 vector3(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng), n(rng)};
}

inline dirac3::Vector3 point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  return {u(rng), u(rng), u(rng)};
}

inline dirac3::SpinStructure spin(std::mt19937_64& rng) {
  return dirac3::SpinStructure::all()[std::uniform_int_distribution<std::size_t>(0, 7)(rng)];
}

inline dirac3::SpinStructure nontrivial_spin(std::mt19937_64& rng) {
  return dirac3::SpinStructure::all()[std::uniform_int_distribution<std::size_t>(1, 7)(rng)];
}

inline dirac3::SpinorField field(const dirac3::ModeSetPtr& modes, std::mt19937_64& rng) {
  Eigen::VectorXcd c(static_cast<Eigen::Index>(modes->dim()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal_c(rng);
  return {modes, c};
}

/// Field supported on a few random modes.
inline dirac3::SpinorField sparse_field(const dirac3::ModeSetPtr& modes, int count, std::mt19937_64& rng) {
  dirac3::SpinorField out = dirac3::SpinorField::zero(modes);
  std::uniform_int_distribution<std::size_t> pick(0, modes->size() - 1);
  for (int k = 0; k < count; ++k) {
    out += dirac3::SpinorField::single_mode(modes, modes->lattice_point(pick(rng)), spinor(rng));
  }
  return out;
}

inline dirac3::ConformalFactor factor(std::mt19937_64& rng, int degree, double amplitude) {
  return dirac3::random_factor(rng(), degree, amplitude);
}

inline Eigen::MatrixXcd unitary(Eigen::Index p, std::mt19937_64& rng) {
  Eigen::MatrixXcd z(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal_c(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(p, p);
}

inline Eigen::MatrixXcd hermitian(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::MatrixXcd z(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) z(i, j) = normal_c(rng);
  }
  return 0.5 * (z + z.adjoint());
}

inline Eigen::MatrixXcd positive_definite(Eigen::Index n, std::mt19937_64& rng) {
  const Eigen::MatrixXcd h = hermitian(n, rng);
  return h * h.adjoint() + static_cast<double>(n) * Eigen::MatrixXcd::Identity(n, n);
}

}  // namespace testsupport
