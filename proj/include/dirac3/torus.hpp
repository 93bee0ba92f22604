#pragma once

// Flat Dirac operator on T^3 = R^3 / 2pi Z^3 in a truncated Fourier basis.
//
// A spin structure delta in {0,1}^3 shifts the mode lattice to Z^3 + delta/2.
// A spinor field is phi(x) = sum_kappa e^{i<kappa,x>} u_kappa; coefficients
// are stored interleaved, u_kappa at rows (2i, 2i+1) for mode index i, so the
// flat operator is block diagonal with 2x2 blocks -sigma.kappa.
//
// The measure is normalized to volume 1, dmu = (2pi)^-3 dx, so Parseval reads
// (phi, psi) = sum_kappa <u_kappa, w_kappa>.

#include "dirac3/detail/grid_fft.hpp"
#include "dirac3/errors.hpp"
#include "dirac3/spinor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dirac3 {

using IntVec3 = std::array<int, 3>;

struct TorusGeometry {
  static constexpr int dimension = 3;
  static constexpr double volume = 1.0;
};

class SpinStructure {
 public:
  SpinStructure() = default;

  explicit SpinStructure(const IntVec3& delta) : delta_(delta) {
    for (int d : delta_) {
      if (d != 0 && d != 1) {
        throw ValidationError("spin structure components must be 0 or 1");
      }
    }
  }

  /// Parses "a,b,c".
  static SpinStructure parse(std::string_view text) {
    IntVec3 d{};
    std::string s(text);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    for (int& v : d) {
      if (!(in >> v)) throw ValidationError("spin structure must look like 'a,b,c'");
    }
    std::string rest;
    if (in >> rest) throw ValidationError("spin structure must have three components");
    return SpinStructure(d);
  }

  static std::array<SpinStructure, 8> all() {
    std::array<SpinStructure, 8> out;
    for (int b = 0; b < 8; ++b) {
      out[static_cast<std::size_t>(b)] =
          SpinStructure(IntVec3{(b >> 2) & 1, (b >> 1) & 1, b & 1});
    }
    return out;
  }

  const IntVec3& delta() const { return delta_; }
  int operator[](int j) const { return delta_[static_cast<std::size_t>(j)]; }
  bool is_trivial() const { return delta_ == IntVec3{0, 0, 0}; }

  /// delta / 2
  Vector3 shift() const { return Vector3(delta_[0], delta_[1], delta_[2]) * 0.5; }

  std::string to_string() const {
    return std::to_string(delta_[0]) + "," + std::to_string(delta_[1]) + "," +
           std::to_string(delta_[2]);
  }

  friend bool operator==(const SpinStructure&, const SpinStructure&) = default;

 private:
  IntVec3 delta_{0, 0, 0};
};

/// Truncated mode lattice. Along axis j, k_j runs over [-N, N] when
/// delta_j = 0 and over [-N, N-1] when delta_j = 1, which keeps the set
/// closed under kappa -> -kappa.
class ModeSet {
 public:
  ModeSet(int order, SpinStructure spin) : order_(order), spin_(spin) {
    if (order < 1) throw ValidationError("truncation order N must be >= 1");
    std::size_t n = 1;
    for (int j = 0; j < 3; ++j) n *= static_cast<std::size_t>(extent(j));
    size_ = n;
  }

  int order() const { return order_; }
  const SpinStructure& spin() const { return spin_; }
  std::size_t size() const { return size_; }
  /// Complex dimension of the coefficient space.
  std::size_t dim() const { return 2 * size_; }

  int lower(int /*axis*/) const { return -order_; }
  int upper(int axis) const { return spin_[axis] == 1 ? order_ - 1 : order_; }
  int extent(int axis) const { return upper(axis) - lower(axis) + 1; }

  /// Radius below which every lattice mode is present.
  double trusted_radius() const { return order_ - 0.5; }

  IntVec3 lattice_point(std::size_t i) const {
    const auto e1 = static_cast<std::size_t>(extent(1));
    const auto e2 = static_cast<std::size_t>(extent(2));
    const auto c = static_cast<int>(i % e2);
    const auto b = static_cast<int>((i / e2) % e1);
    const auto a = static_cast<int>(i / (e1 * e2));
    return {a + lower(0), b + lower(1), c + lower(2)};
  }

  /// kappa = k + delta/2
  Vector3 kappa(std::size_t i) const {
    const IntVec3 k = lattice_point(i);
    return Vector3(k[0], k[1], k[2]) + spin_.shift();
  }

  std::optional<std::size_t> find(const IntVec3& k) const {
    std::size_t idx = 0;
    for (int j = 0; j < 3; ++j) {
      if (k[j] < lower(j) || k[j] > upper(j)) return std::nullopt;
      idx = idx * static_cast<std::size_t>(extent(j)) +
            static_cast<std::size_t>(k[j] - lower(j));
    }
    return idx;
  }

  /// Index of -kappa(i).
  std::size_t negated(std::size_t i) const {
    const IntVec3 k = lattice_point(i);
    const IntVec3 neg{-k[0] - spin_[0], -k[1] - spin_[1], -k[2] - spin_[2]};
    return *find(neg);
  }

  friend bool operator==(const ModeSet& a, const ModeSet& b) {
    return a.order_ == b.order_ && a.spin_ == b.spin_;
  }

 private:
  int order_;
  SpinStructure spin_;
  std::size_t size_ = 0;
};

using ModeSetPtr = std::shared_ptr<const ModeSet>;

inline ModeSetPtr build_mode_set(int order, SpinStructure spin) {
  return std::make_shared<const ModeSet>(order, spin);
}

/// Spinor field as Fourier coefficients over a ModeSet.
class SpinorField {
 public:
  SpinorField(ModeSetPtr modes, Eigen::VectorXcd coeffs)
      : modes_(std::move(modes)), coeffs_(std::move(coeffs)) {
    if (!modes_) throw ValidationError("spinor field needs a mode set");
    if (static_cast<std::size_t>(coeffs_.size()) != modes_->dim()) {
      throw ValidationError("coefficient count does not match mode count");
    }
  }

  static SpinorField zero(ModeSetPtr modes) {
    const auto n = static_cast<Eigen::Index>(modes->dim());
    return {std::move(modes), Eigen::VectorXcd::Zero(n)};
  }

  static SpinorField single_mode(ModeSetPtr modes, const IntVec3& k, const Spinor& u) {
    const auto idx = modes->find(k);
    if (!idx) throw ValidationError("mode not in the truncation");
    SpinorField f = zero(std::move(modes));
    f.coeffs_.segment<2>(2 * static_cast<Eigen::Index>(*idx)) = u;
    return f;
  }

  const ModeSetPtr& modes() const { return modes_; }
  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  Eigen::VectorXcd& coeffs() { return coeffs_; }

  Spinor coefficient(std::size_t i) const {
    return coeffs_.segment<2>(2 * static_cast<Eigen::Index>(i));
  }

  /// Direct pointwise evaluation phi(x).
  Spinor evaluate(const Vector3& x) const {
    Spinor s = Spinor::Zero();
    for (std::size_t i = 0; i < modes_->size(); ++i) {
      const Spinor u = coefficient(i);
      if (u.isZero(0.0)) continue;
      s += std::exp(kI * modes_->kappa(i).dot(x)) * u;
    }
    return s;
  }

  /// Zero-padded copy on a larger truncation of the same spin structure.
  SpinorField extend_to(const ModeSetPtr& larger) const {
    if (larger->spin() != modes_->spin() || larger->order() < modes_->order()) {
      throw ValidationError("target mode set does not contain this field's modes");
    }
    SpinorField out = zero(larger);
    for (std::size_t i = 0; i < modes_->size(); ++i) {
      const std::size_t j = *larger->find(modes_->lattice_point(i));
      out.coeffs_.segment<2>(2 * static_cast<Eigen::Index>(j)) = coefficient(i);
    }
    return out;
  }

  SpinorField& operator+=(const SpinorField& o) {
    require_same_modes(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  SpinorField& operator-=(const SpinorField& o) {
    require_same_modes(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  SpinorField& operator*=(cplx c) {
    coeffs_ *= c;
    return *this;
  }
  friend SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
  friend SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }
  friend SpinorField operator*(cplx c, SpinorField a) { return a *= c; }

  void require_same_modes(const SpinorField& o) const {
    if (!(*modes_ == *o.modes_)) throw ValidationError("spinor fields live on different mode sets");
  }

 private:
  ModeSetPtr modes_;
  Eigen::VectorXcd coeffs_;
};

/// Block-diagonal Hermitian matrix of the flat Dirac operator.
inline Eigen::MatrixXcd assemble_flat_dirac(const ModeSet& modes) {
  const auto n = static_cast<Eigen::Index>(modes.dim());
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto r = 2 * static_cast<Eigen::Index>(i);
    a.block<2, 2>(r, r) = dirac_symbol(modes.kappa(i));
  }
  return a;
}

inline SpinorField apply_flat_dirac(const SpinorField& phi) {
  const ModeSet& modes = *phi.modes();
  SpinorField out = SpinorField::zero(phi.modes());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    out.coeffs().segment<2>(2 * static_cast<Eigen::Index>(i)) =
        dirac_symbol(modes.kappa(i)) * phi.coefficient(i);
  }
  return out;
}

/// The 2|M| eigenvalues +-|kappa| of the flat truncated operator, ascending.
inline std::vector<double> flat_eigenvalues(const ModeSet& modes) {
  std::vector<double> ev;
  ev.reserve(modes.dim());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double r = modes.kappa(i).norm();
    ev.push_back(-r);
    ev.push_back(r);
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

struct SpectralLine {
  double lambda = 0.0;
  int mult_c = 0;
  int mult_h = 0;
  friend bool operator==(const SpectralLine&, const SpectralLine&) = default;
};

/// Flat-torus Dirac spectrum by lattice enumeration: each kappa in
/// Z^3 + delta/2 contributes one eigenvector at +|kappa| and one at -|kappa|
/// (both at 0 for kappa = 0). Eigenvalues are grouped exactly through the
/// integer |2 kappa|^2. Lines with 0 <= lambda <= lambda_max are returned,
/// ascending; with include_negative the mirrored lines are prepended.
inline std::vector<SpectralLine> closed_form_spectrum(const SpinStructure& spin, double lambda_max,
                                                      bool include_negative = false) {
  if (!(lambda_max > 0.0)) throw ValidationError("lambda_max must be positive");
  const int reach = static_cast<int>(std::ceil(lambda_max)) + 1;
  const auto limit = static_cast<std::int64_t>(std::floor(4.0 * lambda_max * lambda_max + 1e-9));
  std::map<std::int64_t, int> counts;  // |2 kappa|^2 -> #kappa
  for (int a = -reach - 1; a <= reach; ++a) {
    for (int b = -reach - 1; b <= reach; ++b) {
      for (int c = -reach - 1; c <= reach; ++c) {
        const std::int64_t x = 2 * a + spin[0];
        const std::int64_t y = 2 * b + spin[1];
        const std::int64_t z = 2 * c + spin[2];
        const std::int64_t q = x * x + y * y + z * z;
        if (q <= limit) ++counts[q];
      }
    }
  }
  std::vector<SpectralLine> lines;
  for (const auto& [q, n] : counts) {
    const double lambda = std::sqrt(static_cast<double>(q)) / 2.0;
    // kappa = 0 gives a whole two-dimensional kernel; every other kappa one
    // eigenvector per sign.
    const int mult_c = q == 0 ? 2 * n : n;
    lines.push_back({lambda, mult_c, mult_c / 2});
  }
  if (include_negative) {
    std::vector<SpectralLine> neg;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (it->lambda > 0.0) neg.push_back({-it->lambda, it->mult_c, it->mult_h});
    }
    neg.insert(neg.end(), lines.begin(), lines.end());
    return neg;
  }
  return lines;
}

/// Flat L^2 product (phi, psi) by Parseval.
inline cplx l2_inner(const SpinorField& phi, const SpinorField& psi) {
  phi.require_same_modes(psi);
  return psi.coeffs().dot(phi.coeffs());
}

inline double l2_norm(const SpinorField& phi) { return phi.coeffs().norm(); }

/// Field values on a G^3 grid, including the half-integer phase e^{i delta.x/2}.
struct SpinorGrid {
  detail::ComplexGrid upper;
  detail::ComplexGrid lower;

  int size() const { return upper.size; }
  Spinor at(std::size_t flat) const { return Spinor(upper.values[flat], lower.values[flat]); }
};

inline SpinorGrid evaluate_on_grid(const SpinorField& phi, int g) {
  const ModeSet& modes = *phi.modes();
  for (int j = 0; j < 3; ++j) {
    if (g < modes.extent(j)) throw ValidationError("grid too small for the field's bandwidth");
  }
  SpinorGrid out{detail::ComplexGrid(g), detail::ComplexGrid(g)};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const IntVec3 k = modes.lattice_point(i);
    out.upper.mode(k) = phi.coefficient(i)[0];
    out.lower.mode(k) = phi.coefficient(i)[1];
  }
  detail::fft3_inplace(out.upper, detail::FftDirection::kInverse);
  detail::fft3_inplace(out.lower, detail::FftDirection::kInverse);
  const Vector3 shift = modes.spin().shift();
  if (!modes.spin().is_trivial()) {
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) {
        for (int c = 0; c < g; ++c) {
          const Vector3 x(detail::ComplexGrid::coordinate(a, g), detail::ComplexGrid::coordinate(b, g),
                          detail::ComplexGrid::coordinate(c, g));
          const cplx phase = std::exp(kI * shift.dot(x));
          const std::size_t f = out.upper.flat(a, b, c);
          out.upper.values[f] *= phase;
          out.lower.values[f] *= phase;
        }
      }
    }
  }
  return out;
}

/// |phi|^2 on a G^3 grid. Requires G >= 2(2N+1) so the grid mean is the
/// exact integral of the band-limited density.
inline std::vector<double> pointwise_density(const SpinorField& phi, int g) {
  if (g < 2 * (2 * phi.modes()->order() + 1)) {
    throw ValidationError("grid too small for an alias-free density");
  }
  const SpinorGrid v = evaluate_on_grid(phi, g);
  std::vector<double> rho(v.upper.values.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    rho[i] = std::norm(v.upper.values[i]) + std::norm(v.lower.values[i]);
  }
  return rho;
}

/// Quaternionic structure on fields: (J phi)_kappa = J(u_{-kappa}).
inline SpinorField apply_J_field(const SpinorField& phi) {
  const ModeSet& modes = *phi.modes();
  SpinorField out = SpinorField::zero(phi.modes());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    out.coeffs().segment<2>(2 * static_cast<Eigen::Index>(i)) =
        apply_J(phi.coefficient(modes.negated(i)));
  }
  return out;
}

/// J on a raw coefficient vector over `modes`.
inline Eigen::VectorXcd apply_J_coeffs(const ModeSet& modes, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out(v.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto src = 2 * static_cast<Eigen::Index>(modes.negated(i));
    out.segment<2>(2 * static_cast<Eigen::Index>(i)) = apply_J(v.segment<2>(src));
  }
  return out;
}

}  // namespace dirac3
