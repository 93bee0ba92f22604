#pragma once

// First-order perturbation of Dirac eigenvalues under g^t = e^{2tf} g.
//
// For a normalized eigenspinor phi of eigenvalue lambda the rate is
//   lambda' = -lambda * int f |phi|^2 dmu.
// For a degenerate eigenspace with orthonormal basis phi_1..phi_p the rates
// are the eigenvalues of the Hermitian matrix
//   P_ij = -lambda * int f <phi_j, phi_i> dmu,
// whose diagonal is the single-vector formula.

#include "dirac3/conformal.hpp"
#include "dirac3/eigensolver.hpp"
#include "dirac3/errors.hpp"
#include "dirac3/spinor.hpp"
#include "dirac3/torus.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dirac3 {

/// Orthonormal basis of one eigenspace of the flat operator.
class EigenCluster {
 public:
  EigenCluster(double lambda, std::vector<SpinorField> basis, double ortho_tol = 1e-10)
      : lambda_(lambda), basis_(std::move(basis)) {
    if (basis_.empty()) return;
    for (const auto& phi : basis_) basis_.front().require_same_modes(phi);
    const Eigen::MatrixXcd v = matrix();
    const Eigen::MatrixXcd gram = v.adjoint() * v;
    const auto p = static_cast<Eigen::Index>(basis_.size());
    if ((gram - Eigen::MatrixXcd::Identity(p, p)).cwiseAbs().maxCoeff() > ortho_tol) {
      throw PreconditionError("cluster basis is not orthonormal");
    }
    j_closed_ = true;
    for (const auto& phi : basis_) {
      const Eigen::VectorXcd jphi = apply_J_coeffs(*phi.modes(), phi.coeffs());
      const Eigen::VectorXcd rest = jphi - v * (v.adjoint() * jphi);
      if (rest.norm() > 1e-8) {
        j_closed_ = false;
        break;
      }
    }
  }

  double lambda() const { return lambda_; }
  const std::vector<SpinorField>& basis() const { return basis_; }
  std::size_t dim_c() const { return basis_.size(); }
  /// Quaternionic dimension; meaningful when j_closed().
  std::size_t dim_h() const { return basis_.size() / 2; }
  bool j_closed() const { return j_closed_; }
  const ModeSetPtr& modes() const { return basis_.front().modes(); }

  /// Basis vectors as columns.
  Eigen::MatrixXcd matrix() const {
    const auto n = basis_.front().coeffs().size();
    Eigen::MatrixXcd v(n, static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      v.col(static_cast<Eigen::Index>(i)) = basis_[i].coeffs();
    }
    return v;
  }

 private:
  double lambda_;
  std::vector<SpinorField> basis_;
  bool j_closed_ = false;
};

/// Cluster `index` of a flat (t = 0) spectrum with eigenvectors.
inline EigenCluster extract_cluster(const SpectrumResult& s, std::size_t index) {
  if (s.meta.t != 0.0 || s.weight) {
    throw PreconditionError("clusters are extracted from the undeformed spectrum only");
  }
  if (!s.has_vectors()) throw PreconditionError("spectrum was computed without eigenvectors");
  if (index >= s.clusters.size()) throw ValidationError("cluster index out of range");
  const Cluster& c = s.clusters[index];
  std::vector<SpinorField> basis;
  for (std::size_t k = 0; k < c.size; ++k) basis.push_back(s.field(c.begin + k));
  return EigenCluster(c.lambda, std::move(basis));
}

/// Cluster whose eigenvalue is nearest to `lambda`.
inline EigenCluster cluster_near(const SpectrumResult& s, double lambda) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.clusters.size(); ++c) {
    if (std::abs(s.clusters[c].lambda - lambda) < std::abs(s.clusters[best].lambda - lambda)) best = c;
  }
  return extract_cluster(s, best);
}

/// Columns F v_j of the Galerkin multiplication by f (exact on the truncation:
/// contributions leaving the mode set are orthogonal to every basis vector).
inline Eigen::MatrixXcd multiply_by_factor(const ConformalFactor& f, const ModeSet& modes,
                                           const Eigen::MatrixXcd& v) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(v.rows(), v.cols());
  for (const auto& [m, c] : f.terms()) {
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const IntVec3 k = modes.lattice_point(i);
      const auto j = modes.find({k[0] + m[0], k[1] + m[1], k[2] + m[2]});
      if (!j) continue;
      const auto src = 2 * static_cast<Eigen::Index>(i);
      const auto dst = 2 * static_cast<Eigen::Index>(*j);
      out.middleRows(dst, 2) += c * v.middleRows(src, 2);
    }
  }
  return out;
}

/// G_ij = int f <phi_j, phi_i> dmu by finite convolution sums.
inline Eigen::MatrixXcd weighted_gram(const ConformalFactor& f, const std::vector<SpinorField>& basis) {
  if (basis.empty()) return {};
  const auto n = basis.front().coeffs().size();
  Eigen::MatrixXcd v(n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    basis.front().require_same_modes(basis[i]);
    v.col(static_cast<Eigen::Index>(i)) = basis[i].coeffs();
  }
  return v.adjoint() * multiply_by_factor(f, *basis.front().modes(), v);
}

inline constexpr double kNormTolerance = 1e-8;

/// lambda' = -lambda int f |phi|^2 dmu for a unit-norm eigenspinor.
inline double rate_single(double lambda, const SpinorField& phi, const ConformalFactor& f) {
  const double nrm = phi.coeffs().squaredNorm();
  if (std::abs(nrm - 1.0) > kNormTolerance) {
    throw PreconditionError("eigenspinor is not normalized in the flat L2 norm");
  }
  return -lambda * weighted_gram(f, {phi})(0, 0).real();
}

struct PerturbationReport {
  double lambda = 0.0;
  std::string f_ref;
  Eigen::MatrixXcd P;
  std::vector<double> rates;              // ascending eigenvalues of P
  std::vector<double> quaternionic_rates; // one per Kramers pair when J-closed
  std::optional<double> min_gap;          // smallest gap between consecutive quaternionic rates
  bool j_closed = false;
  bool pairing_ok = true;                 // rates came in equal pairs (J-closed case)

  /// max - min of the quaternionic rates.
  double spread() const {
    if (quaternionic_rates.empty()) return 0.0;
    return quaternionic_rates.back() - quaternionic_rates.front();
  }
};

/// Pairs sorted rates of a J-closed cluster; false if some pair disagrees.
inline bool pair_rates(const std::vector<double>& rates, std::vector<double>& paired) {
  double scale = 1.0;
  for (double r : rates) scale = std::max(scale, std::abs(r));
  paired.clear();
  bool ok = rates.size() % 2 == 0;
  for (std::size_t i = 0; i + 1 < rates.size(); i += 2) {
    if (std::abs(rates[i + 1] - rates[i]) > 1e-8 * scale) ok = false;
    paired.push_back(0.5 * (rates[i] + rates[i + 1]));
  }
  return ok;
}

/// Smallest gap between distinct values (values closer than tol are one value);
/// nullopt when fewer than two distinct values exist.
inline std::optional<double> distinct_gap(const std::vector<double>& sorted, double tol) {
  std::optional<double> gap;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double d = sorted[i] - sorted[i - 1];
    if (d > tol) gap = gap ? std::min(*gap, d) : d;
  }
  return gap;
}

inline PerturbationReport perturbation_matrix(const EigenCluster& cluster, const ConformalFactor& f,
                                              std::string f_ref = {}) {
  if (cluster.dim_c() == 0) throw PreconditionError("perturbation of an empty cluster");
  PerturbationReport r;
  r.lambda = cluster.lambda();
  r.f_ref = std::move(f_ref);
  r.P = -cluster.lambda() * weighted_gram(f, cluster.basis());
  r.j_closed = cluster.j_closed();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (r.P + r.P.adjoint()), Eigen::EigenvaluesOnly);
  r.rates.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  if (r.j_closed) {
    r.pairing_ok = pair_rates(r.rates, r.quaternionic_rates);
  } else {
    r.quaternionic_rates = r.rates;
  }
  for (std::size_t i = 1; i < r.quaternionic_rates.size(); ++i) {
    const double d = r.quaternionic_rates[i] - r.quaternionic_rates[i - 1];
    r.min_gap = r.min_gap ? std::min(*r.min_gap, d) : d;
  }
  return r;
}

/// New basis phi'_i = sum_j U_ij phi_j. The cluster matrix becomes
/// conj(U) P conj(U)^*, so its eigenvalues are unchanged.
inline EigenCluster unitary_rotate(const EigenCluster& cluster, const Eigen::MatrixXcd& u) {
  const auto p = static_cast<Eigen::Index>(cluster.dim_c());
  if (u.rows() != p || u.cols() != p) throw PreconditionError("rotation has the wrong size");
  if ((u.adjoint() * u - Eigen::MatrixXcd::Identity(p, p)).cwiseAbs().maxCoeff() > 1e-12) {
    throw PreconditionError("rotation matrix is not unitary");
  }
  const Eigen::MatrixXcd v = cluster.matrix() * u.transpose();
  std::vector<SpinorField> basis;
  for (Eigen::Index i = 0; i < p; ++i) basis.emplace_back(cluster.modes(), v.col(i));
  return EigenCluster(cluster.lambda(), std::move(basis));
}

/// alpha = (phi1 + i^p J^q phi2)/sqrt 2, beta = (phi1 - i^p J^q phi2)/sqrt 2.
/// Requires unit norms and (phi1, phi2) = (phi1, J phi2) = 0.
inline std::pair<SpinorField, SpinorField> alpha_beta(const SpinorField& phi1, const SpinorField& phi2,
                                                      int p, int q) {
  if ((p != 0 && p != 1) || (q != 0 && q != 1)) throw ValidationError("p and q must be 0 or 1");
  phi1.require_same_modes(phi2);
  const SpinorField jphi2 = apply_J_field(phi2);
  if (std::abs(l2_inner(phi1, phi1) - 1.0) > kNormTolerance ||
      std::abs(l2_inner(phi2, phi2) - 1.0) > kNormTolerance ||
      std::abs(l2_inner(phi1, phi2)) > kNormTolerance || std::abs(l2_inner(phi1, jphi2)) > kNormTolerance) {
    throw PreconditionError("alpha/beta need a quaternionically orthonormal pair");
  }
  SpinorField chi = q == 1 ? jphi2 : phi2;
  if (p == 1) chi *= kI;
  const double s = 1.0 / std::sqrt(2.0);
  return {s * (phi1 + chi), s * (phi1 - chi)};
}

struct PointwiseGram {
  int grid = 0;
  std::vector<cplx> h1;  // <phi1, phi2>(x)
  std::vector<cplx> h2;  // <phi1, J phi2>(x)
  double sup_h1 = 0.0;
  double sup_h2 = 0.0;
};

inline PointwiseGram pointwise_gram(const SpinorField& phi1, const SpinorField& phi2, int g) {
  phi1.require_same_modes(phi2);
  if (g < 2 * (2 * phi1.modes()->order() + 1)) throw ValidationError("grid too small for pointwise products");
  const SpinorGrid a = evaluate_on_grid(phi1, g);
  const SpinorGrid b = evaluate_on_grid(phi2, g);
  PointwiseGram out;
  out.grid = g;
  out.h1.resize(a.upper.values.size());
  out.h2.resize(a.upper.values.size());
  for (std::size_t i = 0; i < out.h1.size(); ++i) {
    const Spinor u = a.at(i);
    const Spinor w = b.at(i);
    out.h1[i] = herm_inner(u, w);
    out.h2[i] = herm_inner(u, apply_J(w));
    out.sup_h1 = std::max(out.sup_h1, std::abs(out.h1[i]));
    out.sup_h2 = std::max(out.sup_h2, std::abs(out.h2[i]));
  }
  return out;
}

/// Position of an eigenspace of the flat truncated operator in the ascending
/// spectrum. Throws if lambda is not an eigenvalue of multiplicity `count`.
inline std::size_t spectrum_offset(const ModeSet& modes, double lambda, std::size_t count) {
  const auto ev = flat_eigenvalues(modes);
  const double tol = kTauDegenerate * std::max(1.0, std::abs(lambda));
  const auto lo = std::lower_bound(ev.begin(), ev.end(), lambda - tol);
  const auto hi = std::upper_bound(ev.begin(), ev.end(), lambda + tol);
  if (static_cast<std::size_t>(hi - lo) != count) {
    throw PreconditionError("cluster is not a complete eigenspace of the flat operator");
  }
  return static_cast<std::size_t>(lo - ev.begin());
}

struct FdRow {
  double t = 0.0;
  double max_mismatch = 0.0;  // max_i |lambda_i(t) - lambda - t rate_i|, both sorted
  double gap = 0.0;           // distance from the cluster window to its neighbours
  std::vector<double> observed;
};

struct FdReport {
  double lambda = 0.0;
  std::vector<double> rates;
  std::vector<FdRow> rows;
  std::vector<double> pairwise_orders;  // log(m_k/m_{k+1}) / log(t_k/t_{k+1})
  double fitted_order = std::numeric_limits<double>::quiet_NaN();  // LSQ slope of log m vs log t
};

/// Compares deformed solves at each t with the first-order prediction.
inline FdReport fd_check(const EigenCluster& cluster, const ConformalFactor& f, const std::vector<double>& ts) {
  if (ts.empty()) throw ValidationError("fd_check needs at least one t");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0) || (i > 0 && !(ts[i] < ts[i - 1]))) {
      throw ValidationError("fd_check t values must be positive and strictly decreasing");
    }
    if (!in_accepted_range(f, ts[i])) throw ValidationError("fd_check t outside the accepted range");
  }
  const PerturbationReport rep = perturbation_matrix(cluster, f);
  const ModeSetPtr& modes = cluster.modes();
  const std::size_t p = cluster.dim_c();
  const std::size_t offset = spectrum_offset(*modes, cluster.lambda(), p);

  FdReport out;
  out.lambda = cluster.lambda();
  out.rates = rep.rates;
  for (double t : ts) {
    const SpectrumResult s = deformed_spectrum(f, t, modes, SolveOptions::values_only());
    FdRow row;
    row.t = t;
    for (std::size_t i = 0; i < p; ++i) {
      row.observed.push_back(s.eigenvalues[offset + i]);
      row.max_mismatch =
          std::max(row.max_mismatch, std::abs(s.eigenvalues[offset + i] - (cluster.lambda() + t * rep.rates[i])));
    }
    row.gap = std::numeric_limits<double>::infinity();
    if (offset > 0) row.gap = std::min(row.gap, s.eigenvalues[offset] - s.eigenvalues[offset - 1]);
    if (offset + p < s.eigenvalues.size()) {
      row.gap = std::min(row.gap, s.eigenvalues[offset + p] - s.eigenvalues[offset + p - 1]);
    }
    if (row.gap < row.max_mismatch) {
      throw PreconditionError("cluster is not isolated at t = " + std::to_string(t));
    }
    out.rows.push_back(std::move(row));
  }

  for (std::size_t i = 0; i + 1 < out.rows.size(); ++i) {
    const auto& a = out.rows[i];
    const auto& b = out.rows[i + 1];
    out.pairwise_orders.push_back(std::log(a.max_mismatch / b.max_mismatch) / std::log(a.t / b.t));
  }
  if (out.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(out.rows.size());
    for (const auto& r : out.rows) {
      const double x = std::log(r.t);
      const double y = std::log(r.max_mismatch);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    out.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

}  // namespace dirac3
